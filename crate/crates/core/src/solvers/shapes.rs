//! Closed-form piecewise representations of the bundled generators.
//!
//! The interval machinery works with filter coefficients only; the solvers
//! additionally need exact point values, one-sided slopes and integrals of
//! concrete basis elements. For the bundled spline families those are
//! available in closed form, and the refinement equations tie the two
//! representations together (tested below), so either route can serve as an
//! oracle for the other.

use crate::interval::Element;
use crate::piecewise::{PiecewiseQ, PolyQ};
use crate::rat::{qi, Q};
use num_traits::Zero;

/// Centered hat `1 − |x|` on `[−1, 1]`.
pub fn hat() -> PiecewiseQ {
    PiecewiseQ::from_segments(vec![
        (qi(-1), qi(0), PolyQ::from_coeffs(vec![qi(1), qi(1)])),
        (qi(0), qi(1), PolyQ::from_coeffs(vec![qi(1), qi(-1)])),
    ])
}

/// Hermite cubic interpolants on `[−1, 1]`: component 0 matches point
/// values, component 1 matches first derivatives at the integers.
pub fn hermite_cubics() -> Vec<PiecewiseQ> {
    let value = PiecewiseQ::from_segments(vec![
        (qi(-1), qi(0), PolyQ::from_coeffs(vec![qi(1), qi(0), qi(-3), qi(-2)])),
        (qi(0), qi(1), PolyQ::from_coeffs(vec![qi(1), qi(0), qi(-3), qi(2)])),
    ]);
    let slope = PiecewiseQ::from_segments(vec![
        (qi(-1), qi(0), PolyQ::from_coeffs(vec![qi(0), qi(1), qi(2), qi(1)])),
        (qi(0), qi(1), PolyQ::from_coeffs(vec![qi(0), qi(1), qi(-2), qi(1)])),
    ]);
    vec![value, slope]
}

/// Expands an interval basis element into its exact piecewise form given
/// closed forms of the generator components; the result is restricted to
/// `[0, 1]` like the element itself.
pub fn element_piecewise(e: &Element, comps: &[PiecewiseQ]) -> PiecewiseQ {
    let mut acc = PiecewiseQ::zero();
    for a in &e.atoms {
        let part = comps[a.comp].dilate_shift(e.atom_level as i32, a.shift).scale(&a.coeff);
        acc = acc.add(&part);
    }
    acc.restrict(&qi(0), &qi(1))
}

/// One-sided slope at the right end of the support (the derivative of the
/// last polynomial piece evaluated at its right endpoint).
pub fn right_end_slope(p: &PiecewiseQ, at: &Q) -> Q {
    let mut slope = qi(0);
    for (a, b, poly) in p.segments() {
        if a < at && at <= b {
            slope = poly.derivative().eval(at);
        }
    }
    slope
}

/// Checks the vector refinement equation `φ = 2 Σ_k a(k) φ(2·−k)` for a
/// closed-form candidate; returns the residual componentwise.
pub fn refinement_residual(comps: &[PiecewiseQ], a: &crate::filters::Filter) -> Vec<PiecewiseQ> {
    let two = qi(2);
    (0..comps.len())
        .map(|i| {
            let mut acc = PiecewiseQ::zero();
            for (k, tap) in a.iter() {
                for (m, comp) in comps.iter().enumerate() {
                    let c = &two * &tap[(i, m)];
                    if c.is_zero() {
                        continue;
                    }
                    acc = acc.add(&comp.dilate_shift(1, k).scale(&c));
                }
            }
            comps[i].sub(&acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rat::q;

    #[test]
    fn hat_satisfies_its_refinement_equation() {
        let bank = fixtures::cdf22().bank;
        let res = refinement_residual(&[hat()], &bank.primal.a);
        assert!(res[0].is_zero());
        let dual = bank.dual.as_ref().expect("dual pair");
        // The dual generator is not a spline; its mask must not reproduce the hat.
        let wrong = refinement_residual(&[hat()], &dual.a);
        assert!(!wrong[0].is_zero());
    }

    #[test]
    fn hermite_cubics_satisfy_their_refinement_equation() {
        let a = fixtures::hermite_cubic();
        let res = refinement_residual(&hermite_cubics(), &a);
        assert!(res[0].is_zero() && res[1].is_zero());
    }

    #[test]
    fn hermite_cubics_interpolate_value_and_slope() {
        let phi = hermite_cubics();
        assert_eq!(phi[0].eval(&qi(0)), qi(1));
        assert_eq!(phi[1].eval(&qi(0)), qi(0));
        assert_eq!(phi[0].derivative().eval(&qi(0)), qi(0));
        // The slope interpolant has unit derivative at the origin and both
        // components vanish to first order at ±1.
        assert_eq!(phi[1].derivative().eval(&q(1, 2)), q(-1, 4));
        for comp in &phi {
            assert_eq!(comp.eval(&qi(1)), qi(0));
            assert_eq!(comp.eval(&qi(-1)), qi(0));
            assert_eq!(right_end_slope(comp, &qi(1)), qi(0));
        }
    }

    #[test]
    fn second_derivative_norms_match_frozen_constants() {
        let phi = hermite_cubics();
        let dd: Vec<_> = phi.iter().map(|p| p.derivative().derivative()).collect();
        assert_eq!(dd[0].inner(&dd[0]), qi(24));
        assert_eq!(dd[1].inner(&dd[1]), qi(8));
        assert_eq!(dd[0].inner(&dd[1]), qi(0));
    }

    #[test]
    fn half_shifted_hermite_dilates_are_second_derivative_orthogonal() {
        // Second derivatives of g_{j,k,i} = φ_i(2^{j+1}·−2k−1) are mutually
        // orthogonal across levels, shifts and components.
        let phi = hermite_cubics();
        let mut elems = Vec::new();
        for j in 0..3u32 {
            let lvl = (j + 1) as i32;
            for k in 0..(1i64 << j) {
                for comp in &phi {
                    elems.push(comp.dilate_shift(lvl, 2 * k + 1).derivative().derivative());
                }
            }
        }
        for (i, f) in elems.iter().enumerate() {
            for g in elems.iter().skip(i + 1) {
                assert_eq!(f.inner(g), qi(0));
            }
        }
    }

    #[test]
    fn element_expansion_matches_direct_atom_sum() {
        let bd = crate::interval::Boundary::new(fixtures::cdf22()).unwrap();
        let elems = bd.wavelets(3).unwrap();
        let shapes = [hat()];
        for e in &elems {
            let p = element_piecewise(e, &shapes);
            // Exactness probe on a fine dyadic grid.
            for (x, v) in p.sample_dyadic(5, &qi(0), &qi(1)) {
                let mut want = qi(0);
                for a in &e.atoms {
                    want += &a.coeff * hat().eval(&(&x * qi(16) - qi(a.shift)));
                }
                assert_eq!(v, want, "mismatch at {x}");
            }
            let (lo, hi) = p.support().unwrap();
            assert!(lo >= qi(0) && hi <= qi(1));
        }
    }
}
