//! Built-in generators: the hat-function spline bank with its interval
//! adaptation, the cubic Hermite interpolatory pair, and the Haar bank.
//! These back the bundled experiments and the command-line defaults.

use crate::filters::{Filter, FilterBank, FilterPair};
use crate::interval::IntervalSpec;
use crate::rat::{q, QMat};
use crate::solvers::helmholtz::HelmholtzProblem;

/// Serialized description of the hat-function basis on `[0,1]` with
/// homogeneous Dirichlet conditions and its frozen boundary wavelets.
pub const CDF22_JSON: &str = include_str!("../assets/cdf22.json");

/// Hat-function bank adapted to `[0,1]`: piecewise-linear scaling functions
/// vanishing at both endpoints, two vanishing moments on either side.
pub fn cdf22() -> IntervalSpec {
    IntervalSpec::from_json(CDF22_JSON).expect("bundled basis description is valid")
}

/// Cubic Hermite refinement mask: two components interpolating value and
/// derivative, `φ₁(k) = δ_k`, `φ₂′(k) = δ_k`, supported on `[-1,1]`.
pub fn hermite_cubic() -> Filter {
    let t = |rows: [[crate::rat::Q; 2]; 2]| QMat::from_rows(rows.map(|r| r.to_vec()).to_vec());
    Filter::new(
        -1,
        vec![
            t([[q(1, 4), q(3, 8)], [q(-1, 16), q(-1, 16)]]),
            t([[q(1, 2), q(0, 1)], [q(0, 1), q(1, 4)]]),
            t([[q(1, 4), q(-3, 8)], [q(1, 16), q(-1, 16)]]),
        ],
    )
    .expect("hermite mask is well formed")
}

/// Two rectangular source bursts driven at wave number 20000; the source
/// scale `2√2×10⁸` is carried as its exact square.
pub fn helmholtz_bursts() -> HelmholtzProblem {
    HelmholtzProblem::from_json(include_str!("../assets/helmholtz_bursts.json"))
        .expect("bundled burst problem is valid")
}

/// The same burst geometry at wave number 100 with unit amplitude; cheap
/// enough for double-precision end-to-end checks.
pub fn helmholtz_bursts_low() -> HelmholtzProblem {
    HelmholtzProblem::from_json(include_str!("../assets/helmholtz_bursts_low.json"))
        .expect("bundled low-frequency burst problem is valid")
}

/// Piecewise-polynomial source (constant/linear/quadratic/cubic pieces,
/// globally C¹ at two of its three interior breaks) at wave number 200000;
/// its breakpoints deliberately differ from the enrichment partition.
pub fn helmholtz_blend() -> HelmholtzProblem {
    HelmholtzProblem::from_json(include_str!("../assets/helmholtz_blend.json"))
        .expect("bundled blend problem is valid")
}

/// Orthonormal Haar bank (self-dual).
pub fn haar() -> FilterBank {
    let pair = || FilterPair {
        a: Filter::from_scalar(0, vec![q(1, 2), q(1, 2)]),
        b: Filter::from_scalar(0, vec![q(1, 2), q(-1, 2)]),
    };
    let bank = FilterBank {
        name: "haar".into(),
        primal: pair(),
        dual: Some(pair()),
    };
    bank.verify().expect("haar bank is biorthogonal");
    bank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_bases_load_and_verify() {
        let spec = cdf22();
        assert_eq!(spec.bank.name, "cdf22");
        assert_eq!(spec.n_phi, 3);
        assert_eq!(spec.left_rows.as_ref().unwrap().nrows(), 2);
        haar();
        let h = hermite_cubic();
        assert_eq!(h.rows(), 2);
    }
}
