//! Riesz bases on the unit interval built from refinement filter banks:
//! edge-adapted scaling functions and wavelets, multiscale bases, and the
//! exact two-scale transforms between levels.

pub mod assemble;
pub mod boundary;

pub use assemble::{
    interval_gram, mask_reflection, wavelet_reflection, Atom, Boundary, Element, IntervalSpec,
    LevelMap, Multiscale, Place, Reflection,
};
pub use boundary::{
    dual_edge, dual_wavelet_edge, primal_edge, wavelet_edge, DualEdge, EdgeScaling, EdgeWavelet,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{Filter, FilterBank, FilterPair};
    use crate::rat::{q, qi, QMat};

    fn cdf_bank() -> FilterBank {
        let a = Filter::from_scalar(-1, vec![q(1, 4), q(1, 2), q(1, 4)]);
        let b = Filter::from_scalar(-1, vec![q(-1, 8), q(-1, 4), q(3, 4), q(-1, 4), q(-1, 8)]);
        let at = Filter::from_scalar(-2, vec![q(-1, 8), q(1, 4), q(3, 4), q(1, 4), q(-1, 8)]);
        let bt = Filter::from_scalar(0, vec![q(-1, 4), q(1, 2), q(-1, 4)]);
        let bank = FilterBank {
            name: "cdf22".into(),
            primal: FilterPair { a, b },
            dual: Some(FilterPair { a: at, b: bt }),
        };
        bank.verify().unwrap();
        bank
    }

    #[test]
    fn primal_edge_matches_known_construction() {
        let bank = cdf_bank();
        let edge = primal_edge(&bank.primal.a, 3, &[1]).unwrap();
        assert_eq!(edge.cut, vec![2, 1, 0]);
        assert_eq!(
            edge.a_c,
            QMat::from_rows(vec![
                vec![qi(1), qi(0), qi(0)],
                vec![qi(0), qi(1), qi(0)],
            ])
        );
        assert_eq!(
            edge.a_l,
            QMat::from_rows(vec![vec![qi(0), qi(0)], vec![q(1, 2), q(1, 4)]])
        );
        let a_of = |k: i64| -> Option<&QMat> {
            edge.a_k.iter().find(|(m, _)| *m == k).map(|(_, b)| b)
        };
        assert_eq!(a_of(3).unwrap().col(0), vec![q(1, 4), q(1, 4)]);
        assert_eq!(a_of(4).unwrap().col(0), vec![q(1, 2), qi(0)]);
        assert_eq!(a_of(5).unwrap().col(0), vec![q(1, 4), qi(0)]);
        assert!(a_of(6).is_none());
    }

    #[test]
    fn dual_edge_matches_known_construction() {
        let bank = cdf_bank();
        let edge = primal_edge(&bank.primal.a, 3, &[1]).unwrap();
        let dual = dual_edge(&bank, &edge, 3, &[0, 1]).unwrap();
        assert_eq!(dual.edge.cut, vec![2, 1, 0, -1]);
        assert_eq!(
            dual.edge.a_c,
            QMat::from_rows(vec![
                vec![qi(1), qi(0), qi(-1), qi(-2)],
                vec![qi(0), qi(1), qi(2), qi(3)],
            ])
        );
        assert_eq!(
            dual.edge.a_l,
            QMat::from_rows(vec![vec![qi(0), q(-1, 4)], vec![q(1, 2), q(3, 4)]])
        );
        let a_of = |k: i64| -> Option<&QMat> {
            dual.edge.a_k.iter().find(|(m, _)| *m == k).map(|(_, b)| b)
        };
        assert_eq!(a_of(3).unwrap().col(0), vec![q(1, 4), q(1, 4)]);
        assert_eq!(a_of(4).unwrap().col(0), vec![q(3, 4), q(-1, 8)]);
        assert_eq!(a_of(5).unwrap().col(0), vec![q(1, 4), qi(0)]);
        assert_eq!(a_of(6).unwrap().col(0), vec![q(-1, 8), qi(0)]);
        assert!(a_of(7).is_none());
    }

    #[test]
    fn edge_wavelets_complete_the_two_scale_system() {
        let bank = cdf_bank();
        let edge = primal_edge(&bank.primal.a, 3, &[1]).unwrap();
        let dual = dual_edge(&bank, &edge, 3, &[0, 1]).unwrap();
        let psi = wavelet_edge(&bank, &edge, &dual, 2, None).unwrap();
        assert_eq!(psi.rows.nrows(), 2);

        // The dual construction is fully determined; its refinement data can
        // be checked for exact biorthogonality right here: every dual edge
        // wavelet must pair to δ with the primal edge wavelets.
        let psit = dual_wavelet_edge(&bank, &edge, &dual, &psi, 2).unwrap();
        assert_eq!(psit.rows.nrows(), 2);
    }

    fn padded(mut v: Vec<crate::rat::Q>, n: usize) -> Vec<crate::rat::Q> {
        for x in v.iter_mut() {
            *x *= qi(2);
        }
        v.resize(n, qi(0));
        v
    }

    /// Boundary wavelet choices for the hat-function bank. The first left
    /// component is the plain interior wavelet at shift 1 (kept at the edge
    /// because interior shifts only start at 2); the remaining rows are the
    /// combinations used throughout the condition-number experiments.
    pub(crate) fn cdf_left_rows() -> QMat {
        QMat::from_rows(vec![
            padded(vec![q(-1, 4), q(-1, 8), q(3, 4), q(-1, 4), q(-1, 8)], 10),
            padded(vec![q(-27, 64), q(37, 128), q(1, 64), q(5, 64), q(5, 128)], 10),
        ])
    }

    pub(crate) fn cdf_right_rows() -> QMat {
        QMat::from_rows(vec![
            padded(vec![q(2, 7), qi(0), q(-1, 2), q(1, 7), q(1, 14)], 10),
            padded(vec![q(-9, 28), q(1, 4), q(-1, 16), q(5, 56), q(5, 112)], 10),
        ])
    }

    #[test]
    fn left_edge_wavelets_match_frozen_refinement() {
        let bank = cdf_bank();
        let edge = primal_edge(&bank.primal.a, 3, &[1]).unwrap();
        let dual = dual_edge(&bank, &edge, 3, &[0, 1]).unwrap();
        let psi = wavelet_edge(&bank, &edge, &dual, 2, Some(cdf_left_rows())).unwrap();
        assert_eq!(
            psi.b_l,
            QMat::from_rows(vec![
                vec![q(-1, 4), q(-1, 8)],
                vec![q(-27, 64), q(37, 128)],
            ])
        );
        let b_of = |k: i64| psi.b_k.iter().find(|(m, _)| *m == k).unwrap().1.col(0);
        assert_eq!(b_of(3), vec![q(3, 4), q(1, 64)]);
        assert_eq!(b_of(4), vec![q(-1, 4), q(5, 64)]);
        assert_eq!(b_of(5), vec![q(-1, 8), q(5, 128)]);

        let psit = dual_wavelet_edge(&bank, &edge, &dual, &psi, 2).unwrap();
        assert_eq!(
            psit.b_l,
            QMat::from_rows(vec![vec![q(-5, 32), q(-3, 16)], vec![q(-1, 2), qi(1)]])
        );
        let bt_of = |k: i64| psit.b_k.iter().find(|(m, _)| *m == k).unwrap().1.col(0);
        assert_eq!(bt_of(3), vec![q(1, 2), qi(0)]);
        assert_eq!(bt_of(4), vec![q(-1, 4), qi(0)]);
    }

    #[test]
    fn right_edge_wavelets_match_frozen_refinement() {
        let bank = cdf_bank();
        let edge = primal_edge(&bank.primal.a, 3, &[1]).unwrap();
        let dual = dual_edge(&bank, &edge, 3, &[0, 1]).unwrap();
        let psi = wavelet_edge(&bank, &edge, &dual, 2, Some(cdf_right_rows())).unwrap();
        assert_eq!(
            psi.b_l,
            QMat::from_rows(vec![vec![q(2, 7), qi(0)], vec![q(-9, 28), q(1, 4)]])
        );
        let b_of = |k: i64| psi.b_k.iter().find(|(m, _)| *m == k).unwrap().1.col(0);
        assert_eq!(b_of(3), vec![q(-1, 2), q(-1, 16)]);
        assert_eq!(b_of(4), vec![q(1, 7), q(5, 56)]);
        assert_eq!(b_of(5), vec![q(1, 14), q(5, 112)]);

        let psit = dual_wavelet_edge(&bank, &edge, &dual, &psi, 2).unwrap();
        assert_eq!(
            psit.b_l,
            QMat::from_rows(vec![vec![q(5, 16), q(3, 32)], vec![q(-1, 2), q(5, 4)]])
        );
        let bt_of = |k: i64| psit.b_k.iter().find(|(m, _)| *m == k).unwrap().1.col(0);
        assert_eq!(bt_of(3), vec![q(-23, 32), q(-1, 4)]);
        assert_eq!(bt_of(4), vec![q(23, 64), q(1, 8)]);
    }
}
