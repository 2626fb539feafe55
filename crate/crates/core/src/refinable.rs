//! Refinable vector functions: evaluation, polynomial pairings, and exact
//! Gram tables of (derivatives of) their integer shifts.
//!
//! None of this needs quadrature. The restriction of `φ(·−k)` to the unit
//! cell `[0,1]` satisfies a two-scale identity driven by the transition
//! matrices of the mask; Gram matrices on the cell are the fixed point of
//! the induced operator, pinned down exactly by polynomial-reproduction
//! constraints. Inner products over `ℝ`, over half-lines, and against
//! polynomials all reduce to finite sums of cell quantities.

use crate::filters::{binom, int_pow, moment_vectors, sum_rules, Filter, SumRules};
use crate::rat::{qi, Q, QMat};
use crate::{Error, Result};
use num_traits::{One, Zero};

/// Support `[lo, hi]` of the refinable function of a mask.
pub fn support(a: &Filter) -> (i64, i64) {
    (a.lo(), a.hi())
}

/// Shifts `k` for which `φ(·−k)` meets the open unit cell `(0,1)`:
/// `1−hi ..= −lo`.
pub fn cell_shifts(a: &Filter) -> Vec<i64> {
    (1 - a.hi()..=-a.lo()).collect()
}

/// Cell transition matrix `A_γ` with blocks `a(m − 2k + γ)` for cell shifts
/// `k` (rows) and `m` (columns): restriction to the half-cell `γ/2 + [0,1/2]`
/// maps the cell vector to itself at the finer scale, `φ_k = 2 Σ A_γ[k,m] φ_m(2·−γ)`.
pub fn transition(a: &Filter, gamma: i64) -> QMat {
    let ks = cell_shifts(a);
    let r = a.cols();
    QMat::from_fn(ks.len() * r, ks.len() * r, |row, col| {
        let (ki, i) = (row / r, row % r);
        let (mi, ip) = (col / r, col % r);
        a.tap(ks[mi] - 2 * ks[ki] + gamma)[(i, ip)].clone()
    })
}

/// Coefficients reproducing `x^j` from the shifts of `φ`:
/// `Σ_k c_k(x^j) φ(x−k) = x^j` with
/// `c_k(x^j) = Σ_s (−1)^s C(j,s) k^{j−s} w_s` in terms of the sum-rule jets.
pub fn reproduction_coeffs(jets: &SumRules, j: usize, k: i64) -> Result<Vec<Q>> {
    if j >= jets.order {
        return Err(Error::Construction(format!(
            "degree {j} exceeds polynomial reproduction order {}",
            jets.order
        )));
    }
    let r = jets.jets[0].len();
    let mut c = vec![Q::zero(); r];
    for s in 0..=j {
        let sign = if s % 2 == 1 { -Q::one() } else { Q::one() };
        let f = sign * binom(j, s) * int_pow(k, j - s);
        for t in 0..r {
            c[t] += &f * &jets.jets[s][t];
        }
    }
    Ok(c)
}

/// Exact Gram table of one dyadic cell:
/// `mat` holds the blocks `∫_0^1 φ̃^{(m̃)}(x−k) · φ^{(m)}(x−k')ᵀ dx` for all
/// cell shifts `k` (rows, dual side) and `k'` (columns, primal side).
#[derive(Clone, Debug)]
pub struct CellGram {
    pub dual_shifts: Vec<i64>,
    pub primal_shifts: Vec<i64>,
    pub r_dual: usize,
    pub r_primal: usize,
    pub mat: QMat,
}

impl CellGram {
    pub fn block(&self, k: i64, kp: i64) -> QMat {
        let (rd, rp) = (self.r_dual, self.r_primal);
        match (
            self.dual_shifts.iter().position(|&x| x == k),
            self.primal_shifts.iter().position(|&x| x == kp),
        ) {
            (Some(i), Some(j)) => {
                QMat::from_fn(rd, rp, |s, t| self.mat[(i * rd + s, j * rp + t)].clone())
            }
            _ => QMat::zeros(rd, rp),
        }
    }

    /// `∫_ℝ φ̃^{(m̃)}(x−k) φ^{(m)}(x−k')ᵀ dx` as a sum of cell blocks.
    pub fn line(&self, k: i64, kp: i64) -> QMat {
        let mut acc = QMat::zeros(self.r_dual, self.r_primal);
        for c in self.cell_range(k, kp) {
            acc = acc.add(&self.block(k - c, kp - c));
        }
        acc
    }

    /// Same pairing restricted to `[0, ∞)`.
    pub fn halfline(&self, k: i64, kp: i64) -> QMat {
        let mut acc = QMat::zeros(self.r_dual, self.r_primal);
        for c in self.cell_range(k, kp) {
            if c >= 0 {
                acc = acc.add(&self.block(k - c, kp - c));
            }
        }
        acc
    }

    /// Same pairing restricted to `[0, cells]`.
    pub fn window(&self, k: i64, kp: i64, cells: i64) -> QMat {
        self.halfline(k, kp)
            .sub(&self.halfline(k - cells, kp - cells))
    }

    fn cell_range(&self, k: i64, kp: i64) -> std::ops::RangeInclusive<i64> {
        let lo = (k - self.dual_shifts.last().copied().unwrap_or(0))
            .min(kp - self.primal_shifts.last().copied().unwrap_or(0));
        let hi = (k - self.dual_shifts.first().copied().unwrap_or(0))
            .max(kp - self.primal_shifts.first().copied().unwrap_or(0));
        lo..=hi
    }
}

/// Computes the cell Gram table of `φ̃^{(m̃)}` against `φ^{(m)}`.
///
/// The table is the solution of the two-scale fixed-point equation
/// `M = 2(Ã₀ M A₀ᵀ + Ã₁ M A₁ᵀ)` (transition matrices of the derivative
/// masks `2^{m̃} ã`, `2^m a`), made unique by the polynomial constraints
/// `ũ_j̃ M u_jᵀ = ∫_0^1 (x^j̃)^{(m̃)} (x^j)^{(m)} dx` for all reproducible
/// degrees. Requires sum rules of order at least `m̃+1` and `m+1`.
pub fn cell_gram(a_dual: &Filter, a: &Filter, m_dual: usize, m_primal: usize) -> Result<CellGram> {
    let jets_d = sum_rules(a_dual, 12)?;
    let jets_p = sum_rules(a, 12)?;
    if jets_d.order <= m_dual || jets_p.order <= m_primal {
        return Err(Error::Construction(format!(
            "derivative orders ({m_dual},{m_primal}) need sum rules above ({},{})",
            jets_d.order, jets_p.order
        )));
    }

    let (rd, rp) = (a_dual.cols(), a.cols());
    let kd = cell_shifts(a_dual);
    let kp = cell_shifts(a);
    let nd = kd.len() * rd;
    let np = kp.len() * rp;

    let da = a.derivative_mask(m_primal);
    let dad = a_dual.derivative_mask(m_dual);
    let t = transition(&dad, 0)
        .kron(&transition(&da, 0))
        .add(&transition(&dad, 1).kron(&transition(&da, 1)))
        .scale(&qi(2));

    let mut sys = QMat::identity(nd * np).sub(&t);
    // Fixed-point rows have zero right-hand side; polynomial rows follow.
    let mut rows_rhs: Vec<Q> = vec![Q::zero(); nd * np];

    let factorial = |n: usize| -> Q {
        let mut f = Q::one();
        for i in 1..=n {
            f *= qi(i as i64);
        }
        f
    };

    for jd in m_dual..jets_d.order {
        // Row vector over the dual cell: coefficients of (x^jd)^{(m̃)}.
        let mut ud = Vec::with_capacity(nd);
        for &k in &kd {
            ud.extend(reproduction_coeffs(&jets_d, jd, k)?);
        }
        for jp in m_primal..jets_p.order {
            let mut up = Vec::with_capacity(np);
            for &k in &kp {
                up.extend(reproduction_coeffs(&jets_p, jp, k)?);
            }
            let mut row = Vec::with_capacity(nd * np);
            for x in &ud {
                for y in &up {
                    row.push(x * y);
                }
            }
            sys.push_row(row);
            let power = (jd - m_dual) + (jp - m_primal);
            let coeff = factorial(jd) * factorial(jp)
                / (factorial(jd - m_dual) * factorial(jp - m_primal));
            rows_rhs.push(coeff / qi(power as i64 + 1));
        }
    }

    let full_rhs = QMat::from_fn(sys.nrows(), 1, |i, _| rows_rhs[i].clone());

    let vec_m = sys.solve(&full_rhs).ok_or_else(|| {
        Error::Construction(
            "cell Gram system is singular or inconsistent; shifts may not be stable".into(),
        )
    })?;

    let mat = QMat::from_fn(nd, np, |i, j| vec_m[(i * np + j, 0)].clone());
    Ok(CellGram { dual_shifts: kd, primal_shifts: kp, r_dual: rd, r_primal: rp, mat })
}

/// Cell moments `p_j[k] = ∫_0^1 x^j φ(x−k) dx` for all cell shifts `k`,
/// stacked as columns; exact recursion seeded by the eigenvector relation
/// at `j = 0` and the total-mass normalisation `Σ_k p_0[k] = ∫φ`.
pub fn cell_poly_moments(a: &Filter, upto: usize) -> Result<Vec<QMat>> {
    let r = a.cols();
    let ks = cell_shifts(a);
    let n = ks.len() * r;
    let a0 = transition(a, 0);
    let a1 = transition(a, 1);
    let s = a0.add(&a1);
    let mu0 = moment_vectors(a, 0)?.remove(0);

    // j = 0: (I − (A₀+A₁)) p₀ = 0 with block sums fixed to ∫φ.
    let mut sys = QMat::identity(n).sub(&s);
    for i in 0..r {
        let mut row = vec![Q::zero(); n];
        for kidx in 0..ks.len() {
            row[kidx * r + i] = Q::one();
        }
        sys.push_row(row);
    }
    let rhs = QMat::from_fn(n + r, 1, |i, _| {
        if i < n {
            Q::zero()
        } else {
            mu0[i - n].clone()
        }
    });
    let p0 = sys
        .solve(&rhs)
        .ok_or_else(|| Error::Construction("cell moment system at degree 0 is singular".into()))?;

    let mut ps = vec![p0];
    for j in 1..=upto {
        let scale = int_pow(2, j).recip();
        let mut rhs = QMat::zeros(n, 1);
        for i in 0..j {
            let c = binom(j, i);
            let term = a1.matmul(&ps[i]).scale(&(&c * &scale));
            rhs = rhs.add(&term);
        }
        let lhs = QMat::identity(n).sub(&s.scale(&scale));
        let pj = lhs.solve(&rhs).ok_or_else(|| {
            Error::Construction(format!("cell moment system at degree {j} is singular"))
        })?;
        ps.push(pj);
    }
    Ok(ps)
}

/// Moments `∫_{[0,∞)} x^t φ(x−k) dx` per component, assembled from the
/// unit-cell moments `ps = cell_poly_moments(a, ≥t)` by shifting each cell
/// `[c, c+1]` back to the origin.
pub fn halfline_poly_moment(a: &Filter, ps: &[QMat], t: usize, k: i64) -> Vec<Q> {
    assert!(ps.len() > t, "need cell moments up to degree t");
    let r = a.cols();
    let ks = cell_shifts(a);
    let mut out = vec![Q::zero(); r];
    for (idx, &cs) in ks.iter().enumerate() {
        let c = k - cs;
        if c < 0 {
            continue;
        }
        // (x + c)^t expanded over the cell moments of degree ≤ t.
        let mut pow = Q::one();
        let mut cpow = vec![Q::zero(); t + 1];
        for s in (0..=t).rev() {
            cpow[s] = pow.clone();
            pow *= qi(c);
        }
        for (s, cp) in cpow.iter().enumerate() {
            let w = binom(t, s) * cp;
            for i in 0..r {
                out[i] += &w * &ps[s][(idx * r + i, 0)];
            }
        }
    }
    out
}

/// Values of `φ` on the dyadic grid `2^{-level} ℤ` (continuous refinable
/// functions only): integer values come from the eigenvector of the
/// subdivision operator normalised through the order-zero jet, finer grids
/// by running the refinement relation.
pub fn eval_dyadic(a: &Filter, level: u32) -> Result<Vec<(Q, Vec<Q>)>> {
    let r = a.cols();
    let (lo, hi) = support(a);
    let jets = sum_rules(a, 4)?;
    let w0 = &jets.jets[0];

    // Interior integer nodes; φ vanishes at the support endpoints.
    let nodes: Vec<i64> = (lo + 1..hi).collect();
    if nodes.is_empty() {
        return Err(Error::Construction("support too short for dyadic evaluation".into()));
    }
    let n = nodes.len() * r;
    let t = QMat::from_fn(n, n, |row, col| {
        let (ki, i) = (row / r, row % r);
        let (mi, ip) = (col / r, col % r);
        a.tap(2 * nodes[ki] - nodes[mi])[(i, ip)].clone() * qi(2)
    });
    let ker = QMat::identity(n).sub(&t).nullspace();
    if ker.nrows() != 1 {
        return Err(Error::Construction("integer values of φ are not unique".into()));
    }
    let v = ker.row(0);
    // Normalise via Σ_k w₀ φ(k) = 1 (partition of unity at x = 0).
    let mut scale = Q::zero();
    for kidx in 0..nodes.len() {
        for i in 0..r {
            scale += &w0[i] * &v[kidx * r + i];
        }
    }
    if scale.is_zero() {
        return Err(Error::Construction("degenerate normalisation of integer values".into()));
    }
    let inv = scale.recip();

    use std::collections::BTreeMap;
    let mut values: BTreeMap<Q, Vec<Q>> = BTreeMap::new();
    values.insert(qi(lo), vec![Q::zero(); r]);
    values.insert(qi(hi), vec![Q::zero(); r]);
    for (kidx, &k) in nodes.iter().enumerate() {
        values.insert(qi(k), (0..r).map(|i| &v[kidx * r + i] * &inv).collect());
    }

    for lev in 0..level {
        let step = Q::new(1.into(), num_bigint::BigInt::from(1) << (lev + 1));
        let prev = values.clone();
        let mut x = qi(lo) + &step;
        while x < qi(hi) {
            if !values.contains_key(&x) {
                // φ(x) = 2 Σ a(k) φ(2x − k)
                let mut val = vec![Q::zero(); r];
                for (k, tap) in a.iter() {
                    let arg = &x * qi(2) - qi(k);
                    if let Some(pv) = prev.get(&arg) {
                        for i in 0..r {
                            for j in 0..r {
                                val[i] += qi(2) * &tap[(i, j)] * &pv[j];
                            }
                        }
                    }
                }
                values.insert(x.clone(), val);
            }
            x += &step;
        }
    }
    Ok(values.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{PiecewiseQ, PolyQ};
    use crate::rat::q;

    fn hat_mask() -> Filter {
        Filter::from_scalar(-1, vec![q(1, 4), q(1, 2), q(1, 4)])
    }

    fn hat_dual_mask() -> Filter {
        Filter::from_scalar(-2, vec![q(-1, 8), q(1, 4), q(3, 4), q(1, 4), q(-1, 8)])
    }

    fn hermite_mask() -> Filter {
        let t = |e: [[Q; 2]; 2]| QMat::from_rows(e.map(|r| r.to_vec()).to_vec());
        Filter::new(
            -1,
            vec![
                t([[q(1, 4), q(3, 8)], [q(-1, 16), q(-1, 16)]]),
                t([[q(1, 2), q(0, 1)], [q(0, 1), q(1, 4)]]),
                t([[q(1, 4), q(-3, 8)], [q(1, 16), q(-1, 16)]]),
            ],
        )
        .unwrap()
    }

    fn hat_piecewise() -> PiecewiseQ {
        PiecewiseQ::from_segments(vec![
            (qi(-1), qi(0), PolyQ::from_coeffs(vec![qi(1), qi(1)])),
            (qi(0), qi(1), PolyQ::from_coeffs(vec![qi(1), qi(-1)])),
        ])
    }

    fn hermite_piecewise() -> [PiecewiseQ; 2] {
        let p1 = PolyQ::from_coeffs(vec![qi(1), qi(0), qi(-3), qi(2)]);
        let p2 = PolyQ::from_coeffs(vec![qi(0), qi(1), qi(-2), qi(1)]);
        [
            PiecewiseQ::from_segments(vec![
                (qi(-1), qi(0), p1.compose_affine(&qi(0), &-qi(1))),
                (qi(0), qi(1), p1),
            ]),
            PiecewiseQ::from_segments(vec![
                (qi(-1), qi(0), p2.compose_affine(&qi(0), &-qi(1)).neg()),
                (qi(0), qi(1), p2),
            ]),
        ]
    }

    #[test]
    fn hat_cell_gram_values() {
        let g = cell_gram(&hat_mask(), &hat_mask(), 0, 0).unwrap();
        assert_eq!(g.primal_shifts, vec![0, 1]);
        assert_eq!(g.block(0, 0)[(0, 0)], q(1, 3));
        assert_eq!(g.block(0, 1)[(0, 0)], q(1, 6));
        assert_eq!(g.block(1, 1)[(0, 0)], q(1, 3));
        assert_eq!(g.line(0, 0)[(0, 0)], q(2, 3));
        assert_eq!(g.line(0, 1)[(0, 0)], q(1, 6));
        assert_eq!(g.line(0, 2)[(0, 0)], qi(0));
    }

    #[test]
    fn hat_derivative_cell_gram() {
        let g = cell_gram(&hat_mask(), &hat_mask(), 1, 1).unwrap();
        assert_eq!(g.block(0, 0)[(0, 0)], qi(1));
        assert_eq!(g.block(0, 1)[(0, 0)], qi(-1));
        assert_eq!(g.line(0, 0)[(0, 0)], qi(2));
        assert_eq!(g.line(0, 1)[(0, 0)], qi(-1));
    }

    #[test]
    fn biorthogonal_pair_has_identity_line_gram() {
        let g = cell_gram(&hat_dual_mask(), &hat_mask(), 0, 0).unwrap();
        for k in -3..=3 {
            let want = if k == 0 { qi(1) } else { qi(0) };
            assert_eq!(g.line(k, 0)[(0, 0)], want, "shift {k}");
        }
        // Deep inside the half-line the boundary is invisible.
        assert_eq!(g.halfline(5, 5)[(0, 0)], qi(1));
        assert_eq!(g.halfline(5, 6)[(0, 0)], qi(0));
    }

    #[test]
    fn cell_gram_matches_direct_spline_integration() {
        // Independent route: assemble the same cell inner products from the
        // closed-form piecewise polynomials.
        let g = cell_gram(&hat_mask(), &hat_mask(), 0, 0).unwrap();
        let h = hat_piecewise();
        for (i, &k) in g.dual_shifts.iter().enumerate() {
            for (j, &kp) in g.primal_shifts.iter().enumerate() {
                let direct = h
                    .dilate_shift(0, k)
                    .restrict(&qi(0), &qi(1))
                    .inner(&h.dilate_shift(0, kp).restrict(&qi(0), &qi(1)));
                assert_eq!(g.mat[(i, j)], direct, "cell block ({k},{kp})");
            }
        }
    }

    #[test]
    fn hermite_second_derivative_cell_gram_matches_piecewise() {
        let a = hermite_mask();
        let g = cell_gram(&a, &a, 2, 2).unwrap();
        let phis = hermite_piecewise();
        for (bi, &k) in g.dual_shifts.iter().enumerate() {
            for (bj, &kp) in g.primal_shifts.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        let fi = phis[i].dilate_shift(0, k).derivative().derivative();
                        let fj = phis[j].dilate_shift(0, kp).derivative().derivative();
                        let direct = fi.restrict(&qi(0), &qi(1)).inner(&fj.restrict(&qi(0), &qi(1)));
                        assert_eq!(
                            g.mat[(bi * 2 + i, bj * 2 + j)],
                            direct,
                            "block ({k},{kp}) entry ({i},{j})"
                        );
                    }
                }
            }
        }
        // Full-line norms of the second derivatives.
        assert_eq!(g.line(0, 0)[(0, 0)], qi(24));
        assert_eq!(g.line(0, 0)[(1, 1)], qi(8));
        assert_eq!(g.line(0, 0)[(0, 1)], qi(0));
    }

    #[test]
    fn hat_cell_polynomial_moments() {
        let ps = cell_poly_moments(&hat_mask(), 2).unwrap();
        assert_eq!(ps[0].col(0), vec![q(1, 2), q(1, 2)]);
        assert_eq!(ps[1].col(0), vec![q(1, 6), q(1, 3)]);
        // Direct check of degree 2 against the closed form.
        let h = hat_piecewise();
        let x2 = PiecewiseQ::from_poly(qi(0), qi(1), PolyQ::monomial(2));
        for (idx, &k) in cell_shifts(&hat_mask()).iter().enumerate() {
            let direct = x2.inner(&h.dilate_shift(0, k));
            assert_eq!(ps[2][(idx, 0)], direct);
        }
    }

    #[test]
    fn hermite_cell_moments_match_piecewise() {
        let ps = cell_poly_moments(&hermite_mask(), 3).unwrap();
        let phis = hermite_piecewise();
        for j in 0..=3 {
            let xj = PiecewiseQ::from_poly(qi(0), qi(1), PolyQ::monomial(j));
            for (idx, &k) in cell_shifts(&hermite_mask()).iter().enumerate() {
                for i in 0..2 {
                    let direct = xj.inner(&phis[i].dilate_shift(0, k));
                    assert_eq!(ps[j][(idx * 2 + i, 0)], direct, "degree {j} shift {k} comp {i}");
                }
            }
        }
    }

    #[test]
    fn dyadic_evaluation_of_hat() {
        let vals = eval_dyadic(&hat_mask(), 1).unwrap();
        let lookup = |x: Q| -> Q {
            vals.iter().find(|(p, _)| *p == x).map(|(_, v)| v[0].clone()).unwrap()
        };
        assert_eq!(lookup(qi(0)), qi(1));
        assert_eq!(lookup(q(1, 2)), q(1, 2));
        assert_eq!(lookup(q(-1, 2)), q(1, 2));
        assert_eq!(lookup(qi(1)), qi(0));
    }

    #[test]
    fn dyadic_evaluation_of_hermite() {
        let vals = eval_dyadic(&hermite_mask(), 2).unwrap();
        let phis = hermite_piecewise();
        for (x, v) in &vals {
            assert_eq!(v[0], phis[0].eval(x), "component 1 at {x}");
            assert_eq!(v[1], phis[1].eval(x), "component 2 at {x}");
        }
    }
}
