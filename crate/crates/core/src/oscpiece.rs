//! Piecewise polynomials with numeric coefficients and their integration
//! against complex exponentials.
//!
//! Model-problem right-hand sides and oscillation-adapted trial functions
//! are sums of terms `c · p(x) · e^{iωx}` with `p` piecewise polynomial.
//! This class of functions ([`OscFn`]) is closed under products, derivatives
//! and conjugation, so every Galerkin entry reduces to integrals
//! `∫ p(x) e^{iωx} dx`, evaluated by one of two complementary exact-formula
//! paths:
//!
//! - `|ω|·(b−a) ≥ 1/2`: integration by parts down to the endpoint values,
//!   `∫ p e^{iωx} = [e^{iωx} Σ_j (−1)^j p^{(j)}(x)/(iω)^{j+1}]_a^b`;
//! - `|ω|·(b−a) < 1/2`: the power series of `e^{iω(x−a)}`, which then
//!   converges at least geometrically.
//!
//! Everything is generic over [`Real`], so the same code integrates in `f64`
//! and in software extended precision.

use crate::piecewise::PiecewiseQ;
use crate::scalar::{Cx, Real};

fn poly_eval<R: Real>(c: &[R], x: &R) -> R {
    let mut acc = R::zero();
    for ci in c.iter().rev() {
        acc = acc * x.clone() + ci.clone();
    }
    acc
}

fn poly_deriv<R: Real>(c: &[R]) -> Vec<R> {
    if c.len() <= 1 {
        return Vec::new();
    }
    c.iter().enumerate().skip(1).map(|(i, x)| x.clone() * R::from_i64(i as i64)).collect()
}

fn poly_add<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(R::zero);
        let y = b.get(i).cloned().unwrap_or_else(R::zero);
        out.push(x + y);
    }
    out
}

fn poly_mul<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![R::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn poly_scale<R: Real>(a: &[R], s: &R) -> Vec<R> {
    a.iter().map(|x| x.clone() * s.clone()).collect()
}

fn poly_is_zero<R: Real>(a: &[R]) -> bool {
    a.iter().all(|x| *x == R::zero())
}

fn mag<R: Real>(z: &Cx<R>) -> R {
    z.re.abs() + z.im.abs()
}

/// `∫_a^b p(x) e^{iωx} dx` by endpoint evaluation of the by-parts formula.
/// Stable when `|ω|(b−a)` is bounded away from zero.
pub(crate) fn osc_by_parts<R: Real>(c: &[R], a: &R, b: &R, omega: &R) -> Cx<R> {
    let i_omega = Cx::new(R::zero(), omega.clone());
    // S(x) = Σ_j (−1)^j p^{(j)}(x) / (iω)^{j+1}
    let s_at = |x: &R| {
        let mut deriv = c.to_vec();
        let mut denom = i_omega.clone();
        let mut sign = R::one();
        let mut acc = Cx::<R>::zero();
        while !deriv.is_empty() {
            let val = poly_eval(&deriv, x);
            acc = acc + Cx::from_re(sign.clone() * val) / denom.clone();
            deriv = poly_deriv(&deriv);
            denom = denom * i_omega.clone();
            sign = -sign;
        }
        acc
    };
    Cx::exp_i(&(omega.clone() * b.clone())) * s_at(b) - Cx::exp_i(&(omega.clone() * a.clone())) * s_at(a)
}

/// `∫_a^b p(x) e^{iωx} dx` by the series of `e^{iω(x−a)}`; converges fast for
/// `|ω|(b−a) < 1/2` and handles `ω = 0` exactly.
pub(crate) fn osc_by_series<R: Real>(c: &[R], a: &R, b: &R, omega: &R) -> Cx<R> {
    let h = b.clone() - a.clone();
    // q(u) = p(a + u)
    let mut q = vec![R::zero(); c.len()];
    {
        // Horner composition with the shift.
        for ci in c.iter().rev() {
            // q = q * (a + u) + ci
            let mut shifted = vec![R::zero(); q.len()];
            for (m, qm) in q.iter().enumerate() {
                shifted[m] = shifted[m].clone() + qm.clone() * a.clone();
                if m + 1 < shifted.len() {
                    shifted[m + 1] = shifted[m + 1].clone() + qm.clone();
                }
            }
            shifted[0] = shifted[0].clone() + ci.clone();
            q = shifted;
        }
    }
    let eps = R::epsilon();
    let mut acc = Cx::<R>::zero();
    let mut pow = Cx::<R>::one(); // (iω)^n / n!
    let i_omega = Cx::new(R::zero(), omega.clone());
    let mut h_pows = vec![R::one()]; // h^t
    let mut max_mag = R::zero();
    let mut quiet = 0;
    for n in 0..500usize {
        // I_n = ∫_0^h u^n q(u) du = Σ_m q_m h^{n+m+1}/(n+m+1)
        while h_pows.len() < n + q.len() + 1 {
            let last = h_pows.last().unwrap().clone();
            h_pows.push(last * h.clone());
        }
        let mut int_n = R::zero();
        for (m, qm) in q.iter().enumerate() {
            int_n = int_n + qm.clone() * h_pows[n + m + 1].clone() / R::from_i64((n + m + 1) as i64);
        }
        let term = pow.clone().scale(&int_n);
        acc = acc + term.clone();
        let t = mag(&term);
        if t > max_mag {
            max_mag = t.clone();
        }
        if t <= eps.clone() * max_mag.clone() {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        pow = pow * i_omega.clone();
        pow = pow.scale(&R::from_i64(n as i64 + 1).recip());
    }
    acc * Cx::exp_i(&(omega.clone() * a.clone()))
}

/// `∫_a^b p(x) e^{iωx} dx`, choosing the numerically stable path.
pub fn poly_osc_integral<R: Real>(c: &[R], a: &R, b: &R, omega: &R) -> Cx<R> {
    if poly_is_zero(c) || a == b {
        return Cx::zero();
    }
    let span = omega.abs() * (b.clone() - a.clone()).abs();
    if span >= R::from_q(&crate::rat::q(1, 2)) {
        osc_by_parts(c, a, b, omega)
    } else {
        osc_by_series(c, a, b, omega)
    }
}

#[derive(Clone, Debug)]
struct SegR<R> {
    a: R,
    b: R,
    c: Vec<R>,
}

/// Piecewise polynomial with numeric coefficients, zero off its segments.
#[derive(Clone, Debug)]
pub struct PiecewiseR<R> {
    segs: Vec<SegR<R>>,
}

impl<R: Real> PiecewiseR<R> {
    pub fn zero() -> Self {
        PiecewiseR { segs: Vec::new() }
    }

    pub fn from_exact(f: &PiecewiseQ) -> Self {
        let segs = f
            .segments()
            .map(|(a, b, p)| SegR {
                a: R::from_q(a),
                b: R::from_q(b),
                c: p.coeffs().iter().map(R::from_q).collect(),
            })
            .collect();
        PiecewiseR { segs }
    }

    pub fn from_segments(segs: Vec<(R, R, Vec<R>)>) -> Self {
        let mut s: Vec<SegR<R>> =
            segs.into_iter().filter(|(a, b, _)| a < b).map(|(a, b, c)| SegR { a, b, c }).collect();
        s.sort_by(|x, y| x.a.partial_cmp(&y.a).expect("finite breakpoints"));
        PiecewiseR { segs: s }.compacted()
    }

    fn compacted(mut self) -> Self {
        self.segs.retain(|s| !poly_is_zero(&s.c));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn support(&self) -> Option<(R, R)> {
        if self.segs.is_empty() {
            None
        } else {
            Some((self.segs[0].a.clone(), self.segs.last().unwrap().b.clone()))
        }
    }

    pub fn eval(&self, x: &R) -> R {
        for (i, s) in self.segs.iter().enumerate() {
            let last = i + 1 == self.segs.len();
            if *x >= s.a && (*x < s.b || (last && *x == s.b)) {
                return poly_eval(&s.c, x);
            }
        }
        R::zero()
    }

    pub fn scale(&self, s: &R) -> Self {
        PiecewiseR {
            segs: self
                .segs
                .iter()
                .map(|sg| SegR { a: sg.a.clone(), b: sg.b.clone(), c: poly_scale(&sg.c, s) })
                .collect(),
        }
        .compacted()
    }

    pub fn derivative(&self) -> Self {
        PiecewiseR {
            segs: self
                .segs
                .iter()
                .map(|sg| SegR { a: sg.a.clone(), b: sg.b.clone(), c: poly_deriv(&sg.c) })
                .collect(),
        }
        .compacted()
    }

    /// Multi-way pointwise sum via a single sweep over all breakpoints.
    pub fn sum(fns: &[PiecewiseR<R>]) -> Self {
        let mut points: Vec<R> = Vec::new();
        for f in fns {
            for s in &f.segs {
                points.push(s.a.clone());
                points.push(s.b.clone());
            }
        }
        points.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        points.dedup_by(|x, y| x == y);
        if points.len() < 2 {
            return PiecewiseR::zero();
        }
        // Per input, segments are sorted: advance a cursor per function.
        let mut cursors = vec![0usize; fns.len()];
        let mut segs = Vec::new();
        for w in points.windows(2) {
            let mut acc: Vec<R> = Vec::new();
            for (f, cur) in fns.iter().zip(cursors.iter_mut()) {
                while *cur < f.segs.len() && f.segs[*cur].b <= w[0] {
                    *cur += 1;
                }
                if *cur < f.segs.len() && f.segs[*cur].a <= w[0] && w[0] < f.segs[*cur].b {
                    acc = poly_add(&acc, &f.segs[*cur].c);
                }
            }
            if !poly_is_zero(&acc) {
                segs.push(SegR { a: w[0].clone(), b: w[1].clone(), c: acc });
            }
        }
        PiecewiseR { segs }
    }

    pub fn add(&self, other: &PiecewiseR<R>) -> Self {
        PiecewiseR::sum(&[self.clone(), other.clone()])
    }

    /// Pointwise product (supports intersect).
    pub fn mul(&self, other: &PiecewiseR<R>) -> Self {
        let mut points: Vec<R> = Vec::new();
        for s in self.segs.iter().chain(other.segs.iter()) {
            points.push(s.a.clone());
            points.push(s.b.clone());
        }
        points.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        points.dedup_by(|x, y| x == y);
        let poly_at = |f: &PiecewiseR<R>, x: &R| -> Option<Vec<R>> {
            f.segs.iter().find(|s| s.a <= *x && *x < s.b).map(|s| s.c.clone())
        };
        let mut segs = Vec::new();
        for w in points.windows(2) {
            if let (Some(p), Some(q)) = (poly_at(self, &w[0]), poly_at(other, &w[0])) {
                let c = poly_mul(&p, &q);
                if !poly_is_zero(&c) {
                    segs.push(SegR { a: w[0].clone(), b: w[1].clone(), c });
                }
            }
        }
        PiecewiseR { segs }
    }

    pub fn integrate(&self) -> R {
        let mut acc = R::zero();
        for s in &self.segs {
            for (m, cm) in s.c.iter().enumerate() {
                let e = R::from_i64(m as i64 + 1);
                acc = acc
                    + cm.clone() * (s.b.powi(m as u32 + 1) - s.a.powi(m as u32 + 1)) / e;
            }
        }
        acc
    }

    pub fn osc_integral(&self, omega: &R) -> Cx<R> {
        let mut acc = Cx::zero();
        for s in &self.segs {
            acc = acc + poly_osc_integral(&s.c, &s.a, &s.b, omega);
        }
        acc
    }
}

/// One term `coeff · poly(x) · e^{iωx}`.
#[derive(Clone, Debug)]
pub struct OscTerm<R> {
    pub coeff: Cx<R>,
    pub omega: R,
    pub poly: PiecewiseR<R>,
}

/// Finite sum of polynomial-times-exponential terms; closed under `+`, `·`,
/// `d/dx` and conjugation.
#[derive(Clone, Debug)]
pub struct OscFn<R> {
    terms: Vec<OscTerm<R>>,
}

impl<R: Real> OscFn<R> {
    pub fn zero() -> Self {
        OscFn { terms: Vec::new() }
    }

    pub fn from_piecewise(p: PiecewiseR<R>) -> Self {
        OscFn { terms: vec![OscTerm { coeff: Cx::one(), omega: R::zero(), poly: p }] }
            .compacted()
    }

    pub fn from_exact(p: &PiecewiseQ) -> Self {
        OscFn::from_piecewise(PiecewiseR::from_exact(p))
    }

    /// `e^{iωx}` on `[a, b]`.
    pub fn wave(omega: R, a: R, b: R) -> Self {
        let poly = PiecewiseR::from_segments(vec![(a, b, vec![R::one()])]);
        OscFn { terms: vec![OscTerm { coeff: Cx::one(), omega, poly }] }
    }

    /// `sin(ωx)` on `[a, b]` as a two-term exponential combination.
    pub fn sine(omega: R, a: R, b: R) -> Self {
        let plus = OscFn::wave(omega.clone(), a.clone(), b.clone());
        let minus = OscFn::wave(-omega, a, b);
        let half_over_i = Cx::new(R::zero(), -(R::from_q(&crate::rat::q(1, 2))));
        plus.sub(&minus).scale(&half_over_i)
    }

    /// `cos(ωx)` on `[a, b]`.
    pub fn cosine(omega: R, a: R, b: R) -> Self {
        let plus = OscFn::wave(omega.clone(), a.clone(), b.clone());
        let minus = OscFn::wave(-omega, a, b);
        plus.add(&minus).scale(&Cx::from_re(R::from_q(&crate::rat::q(1, 2))))
    }

    pub fn terms(&self) -> &[OscTerm<R>] {
        &self.terms
    }

    fn compacted(mut self) -> Self {
        self.terms.retain(|t| !t.coeff.is_zero() && !t.poly.is_zero());
        self
    }

    /// Merges terms sharing a frequency and coefficient into one polynomial
    /// payload; keeps term counts bounded during long accumulations.
    pub fn compact(mut self) -> Self {
        self = self.compacted();
        let mut out: Vec<OscTerm<R>> = Vec::new();
        for t in self.terms {
            if let Some(prev) =
                out.iter_mut().find(|p| p.omega == t.omega && p.coeff == t.coeff)
            {
                prev.poly = prev.poly.add(&t.poly);
            } else {
                out.push(t);
            }
        }
        out.retain(|t| !t.poly.is_zero());
        OscFn { terms: out }
    }

    pub fn add(&self, other: &OscFn<R>) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OscFn { terms }.compacted()
    }

    pub fn sub(&self, other: &OscFn<R>) -> Self {
        self.add(&other.scale(&-Cx::one()))
    }

    pub fn scale(&self, s: &Cx<R>) -> Self {
        OscFn {
            terms: self
                .terms
                .iter()
                .map(|t| OscTerm { coeff: t.coeff.clone() * s.clone(), omega: t.omega.clone(), poly: t.poly.clone() })
                .collect(),
        }
        .compacted()
    }

    pub fn mul(&self, other: &OscFn<R>) -> Self {
        let mut terms = Vec::new();
        for s in &self.terms {
            for t in &other.terms {
                let poly = s.poly.mul(&t.poly);
                if poly.is_zero() {
                    continue;
                }
                terms.push(OscTerm {
                    coeff: s.coeff.clone() * t.coeff.clone(),
                    omega: s.omega.clone() + t.omega.clone(),
                    poly,
                });
            }
        }
        OscFn { terms }
    }

    pub fn conj(&self) -> Self {
        OscFn {
            terms: self
                .terms
                .iter()
                .map(|t| OscTerm { coeff: t.coeff.conj(), omega: -t.omega.clone(), poly: t.poly.clone() })
                .collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let mut terms = Vec::new();
        for t in &self.terms {
            let dp = t.poly.derivative();
            if !dp.is_zero() {
                terms.push(OscTerm { coeff: t.coeff.clone(), omega: t.omega.clone(), poly: dp });
            }
            if t.omega != R::zero() {
                terms.push(OscTerm {
                    coeff: t.coeff.clone() * Cx::new(R::zero(), t.omega.clone()),
                    omega: t.omega.clone(),
                    poly: t.poly.clone(),
                });
            }
        }
        OscFn { terms }
    }

    pub fn eval(&self, x: &R) -> Cx<R> {
        let mut acc = Cx::zero();
        for t in &self.terms {
            let v = t.poly.eval(x);
            if v == R::zero() {
                continue;
            }
            acc = acc + t.coeff.clone() * Cx::exp_i(&(t.omega.clone() * x.clone())).scale(&v);
        }
        acc
    }

    pub fn integrate(&self) -> Cx<R> {
        let mut acc = Cx::zero();
        for t in &self.terms {
            acc = acc + t.coeff.clone() * t.poly.osc_integral(&t.omega);
        }
        acc
    }

    /// Regroups the terms so each frequency carries at most two of them
    /// (real and imaginary polynomial parts); keeps later quadratic-cost
    /// pairings cheap after long accumulations.
    pub fn consolidated(&self) -> Self {
        let mut groups: Vec<(R, Vec<usize>)> = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            match groups.iter_mut().find(|(w, _)| *w == t.omega) {
                Some((_, v)) => v.push(i),
                None => groups.push((t.omega.clone(), vec![i])),
            }
        }
        let mut out = OscFn::zero();
        for (w, idx) in groups {
            let re_parts: Vec<_> =
                idx.iter().map(|&i| self.terms[i].poly.scale(&self.terms[i].coeff.re)).collect();
            let im_parts: Vec<_> =
                idx.iter().map(|&i| self.terms[i].poly.scale(&self.terms[i].coeff.im)).collect();
            for (poly, unit) in [
                (PiecewiseR::sum(&re_parts), Cx::one()),
                (PiecewiseR::sum(&im_parts), Cx::i()),
            ] {
                let Some((a, b)) = poly.support() else { continue };
                let piece = OscFn::from_piecewise(poly);
                let term = if w == R::zero() {
                    piece
                } else {
                    OscFn::wave(w.clone(), a, b).mul(&piece)
                };
                out = out.add(&term.scale(&unit));
            }
        }
        out
    }

    /// Bilinear pairing `∫ f g` (no conjugation).
    pub fn bilinear(&self, other: &OscFn<R>) -> Cx<R> {
        self.mul(other).integrate()
    }

    /// Hermitian pairing `∫ f ḡ`.
    pub fn hermitian(&self, other: &OscFn<R>) -> Cx<R> {
        self.mul(&other.conj()).integrate()
    }

    pub fn norm_l2_sq(&self) -> R {
        self.hermitian(self).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{PolyQ, PiecewiseQ};
    use crate::rat::qi;
    use crate::xr::{with_precision_digits, XR};
    use approx::assert_relative_eq;

    #[test]
    fn pure_wave_integral() {
        // ∫_0^1 e^{iπx} dx = 2i/π
        let w = OscFn::<f64>::wave(std::f64::consts::PI, 0.0, 1.0);
        let v = w.integrate();
        assert_relative_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(v.im, 2.0 / std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn branches_agree_across_threshold() {
        // The series path loses |ωh| digits of headroom, so probe only the
        // neighbourhood of the switchover where both contracts hold.
        let c = [0.5, -1.0, 2.0, 0.25];
        for &omega in &[0.05, 0.2, 0.49, 0.51, 1.2, 1.7] {
            let series = osc_by_series(&c, &0.25, &1.25, &omega);
            let parts = osc_by_parts(&c, &0.25, &1.25, &omega);
            assert_relative_eq!(series.re, parts.re, epsilon = 1e-11, max_relative = 1e-11);
            assert_relative_eq!(series.im, parts.im, epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn zero_frequency_is_plain_integration() {
        let c = [1.0, 3.0]; // 1 + 3x on [0,2]: ∫ = 2 + 6 = 8
        let v = poly_osc_integral(&c, &0.0, &2.0, &0.0);
        assert_relative_eq!(v.re, 8.0, epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn bump_against_sine_matches_closed_form() {
        // ∫_0^1 (x − x²) sin(49πx) dx = 4/(49π)³
        let bump = PiecewiseQ::from_poly(qi(0), qi(1), PolyQ::from_coeffs(vec![qi(0), qi(1), qi(-1)]));
        let omega = 49.0 * std::f64::consts::PI;
        let f = OscFn::from_exact(&bump).mul(&OscFn::sine(omega, 0.0, 1.0));
        let got = f.integrate();
        assert_relative_eq!(got.re, 4.0 / omega.powi(3), max_relative = 1e-10);
        assert_relative_eq!(got.im, 0.0, epsilon = 1e-18);
    }

    #[test]
    fn bump_against_sine_in_extended_precision() {
        with_precision_digits(60, || {
            let bump =
                PiecewiseQ::from_poly(qi(0), qi(1), PolyQ::from_coeffs(vec![qi(0), qi(1), qi(-1)]));
            let omega = XR::from_i64(49) * XR::pi();
            let f = OscFn::from_exact(&bump).mul(&OscFn::sine(omega.clone(), XR::zero(), XR::one()));
            let got = f.integrate();
            let want = XR::from_i64(4) / omega.powi(3);
            let rel = ((got.re.clone() - want.clone()) / want).abs();
            assert!(rel < XR::parse("1e-55"), "relative error {rel}");
            assert!(got.im.abs() < XR::parse("1e-60"));
        });
    }

    #[test]
    fn derivative_closure() {
        // d/dx [x e^{iωx}] = (1 + iωx) e^{iωx}
        let x_poly = PiecewiseR::from_segments(vec![(0.0, 1.0, vec![0.0, 1.0])]);
        let f = OscFn::from_piecewise(x_poly)
            .mul(&OscFn::wave(3.0, 0.0, 1.0));
        let d = f.derivative();
        let x = 0.625;
        let expect = Cx::new(1.0, 3.0 * x) * Cx::exp_i(&(3.0 * x));
        let got = d.eval(&x);
        assert_relative_eq!(got.re, expect.re, epsilon = 1e-14);
        assert_relative_eq!(got.im, expect.im, epsilon = 1e-14);
    }

    #[test]
    fn hermitian_norm_of_wave_is_length() {
        let w = OscFn::<f64>::wave(200000.0, 0.0, 1.0);
        assert_relative_eq!(w.norm_l2_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn multiway_sum_sweeps_disjoint_and_overlapping() {
        let a = PiecewiseR::from_segments(vec![(0.0, 1.0, vec![1.0])]);
        let b = PiecewiseR::from_segments(vec![(0.5, 1.5, vec![0.0, 2.0])]);
        let c = PiecewiseR::from_segments(vec![(2.0, 3.0, vec![5.0])]);
        let s = PiecewiseR::sum(&[a, b, c]);
        assert_eq!(s.eval(&0.25), 1.0);
        assert_eq!(s.eval(&0.75), 1.0 + 1.5);
        assert_eq!(s.eval(&1.25), 2.5);
        assert_eq!(s.eval(&2.5), 5.0);
        assert_eq!(s.eval(&1.75), 0.0);
        assert_relative_eq!(s.integrate(), 1.0 + 2.0 + 5.0, epsilon = 1e-14);
    }
}
