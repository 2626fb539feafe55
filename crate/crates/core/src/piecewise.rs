//! Exact piecewise-polynomial calculus over `Q`.
//!
//! Spline-type refinable functions (hats, Hermite cubics) and everything
//! built from them on the interval — boundary-adapted functions, wavelets —
//! are piecewise polynomials with rational breakpoints, so Galerkin entries
//! involving only polynomial weights can be integrated exactly.

use crate::rat::{Q, QMat};
use num_traits::{One, Zero};

/// Polynomial with ascending rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyQ {
    c: Vec<Q>,
}

impl PolyQ {
    pub fn zero() -> Self {
        PolyQ { c: Vec::new() }
    }

    pub fn constant(x: Q) -> Self {
        PolyQ { c: vec![x] }.normalized()
    }

    pub fn x() -> Self {
        PolyQ { c: vec![Q::zero(), Q::one()] }
    }

    pub fn from_coeffs(c: Vec<Q>) -> Self {
        PolyQ { c }.normalized()
    }

    /// `x^n`.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Q::zero(); n + 1];
        c[n] = Q::one();
        PolyQ { c }
    }

    fn normalized(mut self) -> Self {
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.c.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for ci in self.c.iter().rev() {
            acc = acc * x + ci;
        }
        acc
    }

    pub fn add(&self, rhs: &PolyQ) -> PolyQ {
        let n = self.c.len().max(rhs.c.len());
        let mut c = vec![Q::zero(); n];
        for (i, x) in self.c.iter().enumerate() {
            c[i] += x;
        }
        for (i, x) in rhs.c.iter().enumerate() {
            c[i] += x;
        }
        PolyQ { c }.normalized()
    }

    pub fn sub(&self, rhs: &PolyQ) -> PolyQ {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> PolyQ {
        PolyQ { c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn mul(&self, rhs: &PolyQ) -> PolyQ {
        if self.is_zero() || rhs.is_zero() {
            return PolyQ::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + rhs.c.len() - 1];
        for (i, x) in self.c.iter().enumerate() {
            for (j, y) in rhs.c.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        PolyQ { c }.normalized()
    }

    pub fn scale(&self, s: &Q) -> PolyQ {
        PolyQ { c: self.c.iter().map(|x| x * s).collect() }.normalized()
    }

    pub fn derivative(&self) -> PolyQ {
        if self.c.len() <= 1 {
            return PolyQ::zero();
        }
        let c = self.c.iter().enumerate().skip(1).map(|(i, x)| x * Q::from_integer(i.into())).collect();
        PolyQ { c }
    }

    pub fn antiderivative(&self) -> PolyQ {
        let mut c = vec![Q::zero(); self.c.len() + 1];
        for (i, x) in self.c.iter().enumerate() {
            c[i + 1] = x / Q::from_integer((i + 1).into());
        }
        PolyQ { c }.normalized()
    }

    /// Composition with an affine map: returns `p(t + s·x)`.
    pub fn compose_affine(&self, t: &Q, s: &Q) -> PolyQ {
        // Horner over the affine argument.
        let arg = PolyQ::from_coeffs(vec![t.clone(), s.clone()]);
        let mut acc = PolyQ::zero();
        for ci in self.c.iter().rev() {
            acc = acc.mul(&arg).add(&PolyQ::constant(ci.clone()));
        }
        acc
    }
}

impl std::fmt::Debug for PolyQ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| format!("({x})x^{i}"))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
struct Seg {
    a: Q,
    b: Q,
    p: PolyQ,
}

/// Piecewise polynomial with rational breakpoints; zero outside its segments.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PiecewiseQ {
    segs: Vec<Seg>,
}

impl PiecewiseQ {
    pub fn zero() -> Self {
        PiecewiseQ { segs: Vec::new() }
    }

    pub fn from_poly(a: Q, b: Q, p: PolyQ) -> Self {
        assert!(a < b, "empty segment");
        PiecewiseQ { segs: vec![Seg { a, b, p }] }.normalized()
    }

    pub fn from_segments(segs: Vec<(Q, Q, PolyQ)>) -> Self {
        let mut s: Vec<Seg> = segs
            .into_iter()
            .filter(|(a, b, _)| a < b)
            .map(|(a, b, p)| Seg { a, b, p })
            .collect();
        s.sort_by(|x, y| x.a.cmp(&y.a));
        for w in s.windows(2) {
            assert!(w[0].b <= w[1].a, "overlapping segments");
        }
        PiecewiseQ { segs: s }.normalized()
    }

    fn normalized(mut self) -> Self {
        self.segs.retain(|s| !s.p.is_zero());
        // Merge adjacent segments carrying the same polynomial so equality
        // is independent of how the function was assembled.
        let mut merged: Vec<Seg> = Vec::with_capacity(self.segs.len());
        for s in self.segs {
            match merged.last_mut() {
                Some(prev) if prev.b == s.a && prev.p == s.p => prev.b = s.b,
                _ => merged.push(s),
            }
        }
        self.segs = merged;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn support(&self) -> Option<(Q, Q)> {
        if self.segs.is_empty() {
            None
        } else {
            Some((self.segs[0].a.clone(), self.segs.last().unwrap().b.clone()))
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (&Q, &Q, &PolyQ)> {
        self.segs.iter().map(|s| (&s.a, &s.b, &s.p))
    }

    /// Evaluation; at interior breakpoints the right-hand segment wins, at
    /// the far right endpoint the last segment is used.
    pub fn eval(&self, x: &Q) -> Q {
        for (i, s) in self.segs.iter().enumerate() {
            let last = i + 1 == self.segs.len();
            if *x >= s.a && (*x < s.b || (last && *x == s.b)) {
                return s.p.eval(x);
            }
        }
        Q::zero()
    }

    pub fn neg(&self) -> PiecewiseQ {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> PiecewiseQ {
        PiecewiseQ {
            segs: self.segs.iter().map(|s| Seg { a: s.a.clone(), b: s.b.clone(), p: s.p.scale(c) }).collect(),
        }
        .normalized()
    }

    fn breakpoints(&self, other: &PiecewiseQ) -> Vec<Q> {
        let mut pts: Vec<Q> = Vec::new();
        for s in self.segs.iter().chain(other.segs.iter()) {
            pts.push(s.a.clone());
            pts.push(s.b.clone());
        }
        pts.sort();
        pts.dedup();
        pts
    }

    fn poly_at(&self, a: &Q) -> PolyQ {
        for s in &self.segs {
            if s.a <= *a && *a < s.b {
                return s.p.clone();
            }
        }
        PolyQ::zero()
    }

    fn combine(&self, other: &PiecewiseQ, f: impl Fn(&PolyQ, &PolyQ) -> PolyQ) -> PiecewiseQ {
        let pts = self.breakpoints(other);
        let mut segs = Vec::new();
        for w in pts.windows(2) {
            let p = f(&self.poly_at(&w[0]), &other.poly_at(&w[0]));
            if !p.is_zero() {
                segs.push(Seg { a: w[0].clone(), b: w[1].clone(), p });
            }
        }
        PiecewiseQ { segs }.normalized()
    }

    pub fn add(&self, other: &PiecewiseQ) -> PiecewiseQ {
        self.combine(other, |p, q| p.add(q))
    }

    pub fn sub(&self, other: &PiecewiseQ) -> PiecewiseQ {
        self.combine(other, |p, q| p.sub(q))
    }

    pub fn mul(&self, other: &PiecewiseQ) -> PiecewiseQ {
        self.combine(other, |p, q| p.mul(q))
    }

    pub fn derivative(&self) -> PiecewiseQ {
        PiecewiseQ {
            segs: self
                .segs
                .iter()
                .map(|s| Seg { a: s.a.clone(), b: s.b.clone(), p: s.p.derivative() })
                .collect(),
        }
        .normalized()
    }

    pub fn integrate(&self) -> Q {
        let mut acc = Q::zero();
        for s in &self.segs {
            let anti = s.p.antiderivative();
            acc += anti.eval(&s.b) - anti.eval(&s.a);
        }
        acc
    }

    pub fn integral_on(&self, a: &Q, b: &Q) -> Q {
        self.restrict(a, b).integrate()
    }

    pub fn inner(&self, other: &PiecewiseQ) -> Q {
        self.mul(other).integrate()
    }

    pub fn restrict(&self, a: &Q, b: &Q) -> PiecewiseQ {
        let mut segs = Vec::new();
        for s in &self.segs {
            let lo = if &s.a > a { s.a.clone() } else { a.clone() };
            let hi = if &s.b < b { s.b.clone() } else { b.clone() };
            if lo < hi {
                segs.push(Seg { a: lo, b: hi, p: s.p.clone() });
            }
        }
        PiecewiseQ { segs }.normalized()
    }

    /// Returns `g(x) = f(t + s·x)`; `s` may be negative (reflection).
    pub fn compose_affine(&self, t: &Q, s: &Q) -> PiecewiseQ {
        assert!(!s.is_zero(), "degenerate substitution");
        let inv = s.recip();
        let mut segs: Vec<Seg> = self
            .segs
            .iter()
            .map(|seg| {
                let x1 = (&seg.a - t) * &inv;
                let x2 = (&seg.b - t) * &inv;
                let (a, b) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
                Seg { a, b, p: seg.p.compose_affine(t, s) }
            })
            .collect();
        segs.sort_by(|x, y| x.a.cmp(&y.a));
        PiecewiseQ { segs }.normalized()
    }

    /// `2^{j/2}`-free dyadic dilate-and-shift `f(2^j · x − k)`; the scaling
    /// factor is left to callers since `√2` is irrational.
    pub fn dilate_shift(&self, j: i32, k: i64) -> PiecewiseQ {
        let two_j = if j >= 0 {
            Q::from_integer(num_bigint::BigInt::from(1) << j as usize)
        } else {
            Q::new(1.into(), num_bigint::BigInt::from(1) << (-j) as usize)
        };
        self.compose_affine(&Q::from_integer((-k).into()), &two_j)
    }

    /// Samples on the dyadic grid `2^{-level} Z` restricted to `[a, b]`.
    pub fn sample_dyadic(&self, level: u32, a: &Q, b: &Q) -> Vec<(Q, Q)> {
        let step = Q::new(1.into(), num_bigint::BigInt::from(1) << level);
        let mut out = Vec::new();
        let mut x = a.clone();
        while x <= *b {
            out.push((x.clone(), self.eval(&x)));
            x += &step;
        }
        out
    }
}

/// Cross-Gram matrix `(⟨f_i, g_j⟩)_{ij}` of two families.
pub fn gram(fs: &[PiecewiseQ], gs: &[PiecewiseQ]) -> QMat {
    QMat::from_fn(fs.len(), gs.len(), |i, j| fs[i].inner(&gs[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};
    use proptest::prelude::*;

    /// The centered unit hat function 1 − |x| on [−1, 1].
    pub(crate) fn hat() -> PiecewiseQ {
        PiecewiseQ::from_segments(vec![
            (qi(-1), qi(0), PolyQ::from_coeffs(vec![qi(1), qi(1)])),
            (qi(0), qi(1), PolyQ::from_coeffs(vec![qi(1), qi(-1)])),
        ])
    }

    #[test]
    fn hat_inner_products() {
        let h = hat();
        assert_eq!(h.inner(&h), q(2, 3));
        assert_eq!(h.inner(&h.dilate_shift(0, 1)), q(1, 6));
        let d = h.derivative();
        assert_eq!(d.inner(&d), qi(2));
        assert_eq!(d.inner(&h.dilate_shift(0, 1).derivative()), qi(-1));
    }

    #[test]
    fn hat_satisfies_refinement() {
        let h = hat();
        let refined = h
            .dilate_shift(1, -1)
            .scale(&q(1, 2))
            .add(&h.dilate_shift(1, 0))
            .add(&h.dilate_shift(1, 1).scale(&q(1, 2)));
        assert_eq!(h, refined);
    }

    #[test]
    fn reflection_preserves_integrals() {
        let h = hat();
        // g(x) = h(1 − 2x): reflected and squeezed copy.
        let g = h.compose_affine(&qi(1), &qi(-2));
        assert_eq!(g.integrate(), h.integrate() * q(1, 2));
        assert_eq!(g.eval(&q(1, 2)), h.eval(&qi(0)));
    }

    #[test]
    fn hermite_generator_second_derivative_norms() {
        // Cubic Hermite generators on [−1,1]: value interpolant (even) and
        // slope interpolant (odd).
        let p1 = PolyQ::from_coeffs(vec![qi(1), qi(0), qi(-3), qi(2)]); // (1−x)²(1+2x)
        let p2 = PolyQ::from_coeffs(vec![qi(0), qi(1), qi(-2), qi(1)]); // x(1−x)²
        let phi1 = PiecewiseQ::from_segments(vec![
            (qi(-1), qi(0), p1.compose_affine(&qi(0), &-qi(1))),
            (qi(0), qi(1), p1.clone()),
        ]);
        let phi2 = PiecewiseQ::from_segments(vec![
            (qi(-1), qi(0), p2.compose_affine(&qi(0), &-qi(1)).neg()),
            (qi(0), qi(1), p2.clone()),
        ]);
        assert_eq!(phi1.eval(&qi(0)), qi(1));
        assert_eq!(phi2.derivative().eval(&qi(0)), qi(1));
        let d2_1 = phi1.derivative().derivative();
        let d2_2 = phi2.derivative().derivative();
        assert_eq!(d2_1.inner(&d2_1), qi(24));
        assert_eq!(d2_2.inner(&d2_2), qi(8));
        assert_eq!(d2_1.inner(&d2_2), qi(0));
    }

    fn arb_poly() -> impl Strategy<Value = PolyQ> {
        prop::collection::vec((-20i64..20, 1i64..10), 0..5)
            .prop_map(|v| PolyQ::from_coeffs(v.into_iter().map(|(n, d)| q(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn poly_product_evaluates_pointwise(p in arb_poly(), r in arb_poly(), xn in -8i64..8) {
            let x = q(xn, 3);
            prop_assert_eq!(p.mul(&r).eval(&x), p.eval(&x) * r.eval(&x));
        }

        #[test]
        fn affine_composition_evaluates_pointwise(p in arb_poly(), tn in -5i64..5, sn in 1i64..5, xn in -8i64..8) {
            let (t, s, x) = (q(tn, 2), q(sn, 3), q(xn, 5));
            let expect = p.eval(&(&t + &s * &x));
            prop_assert_eq!(p.compose_affine(&t, &s).eval(&x), expect);
        }

        #[test]
        fn derivative_of_antiderivative_round_trips(p in arb_poly()) {
            prop_assert_eq!(p.antiderivative().derivative(), p);
        }
    }
}
