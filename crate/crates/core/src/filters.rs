//! Refinement masks and filter banks.
//!
//! A mask is a finitely supported sequence of rational matrices `{a(k)}`. A
//! refinable (vector) function obeys `φ = 2 Σ_k a(k) φ(2·−k)`, a wavelet
//! `ψ = 2 Σ_k b(k) φ(2·−k)`. Biorthogonality of two such systems is exactly
//! the perfect-reconstruction identity of the two filter banks, which is
//! verified here as an identity of Laurent-polynomial matrices.

use crate::laurent::{LMat, LPoly};
use crate::rat::{qi, Q, QMat};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Deserialize;

/// Binomial coefficient as an exact rational.
pub fn binom(n: usize, k: usize) -> Q {
    if k > n {
        return Q::zero();
    }
    Q::from_integer(num_integer::binomial(BigInt::from(n), BigInt::from(k)))
}

/// `k^j` over `Q`, with the convention `0^0 = 1`.
pub fn int_pow(k: i64, j: usize) -> Q {
    let mut acc = Q::one();
    for _ in 0..j {
        acc *= qi(k);
    }
    acc
}

/// Finitely supported matrix-valued mask.
#[derive(Clone, Debug)]
pub struct Filter {
    lo: i64,
    taps: Vec<QMat>,
}

impl Filter {
    pub fn new(lo: i64, taps: Vec<QMat>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidFilterBank("mask has no taps".into()));
        }
        let (r, c) = (taps[0].nrows(), taps[0].ncols());
        if r == 0 || c == 0 {
            return Err(Error::InvalidFilterBank("mask taps are empty matrices".into()));
        }
        if taps.iter().any(|t| t.nrows() != r || t.ncols() != c) {
            return Err(Error::InvalidFilterBank("mask taps differ in shape".into()));
        }
        Ok(Filter { lo, taps })
    }

    pub fn from_scalar(lo: i64, taps: Vec<Q>) -> Self {
        Filter::new(lo, taps.into_iter().map(QMat::scalar).collect()).expect("scalar taps")
    }

    /// Smallest k with a potentially nonzero tap.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Largest k with a potentially nonzero tap.
    pub fn hi(&self) -> i64 {
        self.lo + self.taps.len() as i64 - 1
    }

    /// Output dimension (number of function components produced).
    pub fn rows(&self) -> usize {
        self.taps[0].nrows()
    }

    /// Input dimension (multiplicity of the refinable vector acted on).
    pub fn cols(&self) -> usize {
        self.taps[0].ncols()
    }

    pub fn tap(&self, k: i64) -> QMat {
        let idx = k - self.lo;
        if idx < 0 || idx >= self.taps.len() as i64 {
            QMat::zeros(self.rows(), self.cols())
        } else {
            self.taps[idx as usize].clone()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &QMat)> {
        self.taps.iter().enumerate().map(|(i, t)| (self.lo + i as i64, t))
    }

    /// `Σ_k k^j a(k)`.
    pub fn moment(&self, j: usize) -> QMat {
        let mut m = QMat::zeros(self.rows(), self.cols());
        for (k, t) in self.iter() {
            m = m.add(&t.scale(&int_pow(k, j)));
        }
        m
    }

    /// `Σ_k (−1)^k k^j a(k)`.
    pub fn alt_moment(&self, j: usize) -> QMat {
        let mut m = QMat::zeros(self.rows(), self.cols());
        for (k, t) in self.iter() {
            let sign = if k.rem_euclid(2) == 1 { -Q::one() } else { Q::one() };
            m = m.add(&t.scale(&(sign * int_pow(k, j))));
        }
        m
    }

    /// Mask of the m-th derivative vector: differentiating the refinement
    /// relation multiplies the mask by 2 per derivative order.
    pub fn derivative_mask(&self, m: usize) -> Filter {
        let factor = int_pow(2, m);
        Filter { lo: self.lo, taps: self.taps.iter().map(|t| t.scale(&factor)).collect() }
    }

    /// Frequency-domain symbol as a Laurent-polynomial matrix in `z = e^{-iξ}`.
    pub fn symbol(&self) -> LMat {
        LMat::from_fn(self.rows(), self.cols(), |i, j| {
            let mut p = LPoly::zero();
            for (k, t) in self.iter() {
                p = p.add(&LPoly::monomial(k, t[(i, j)].clone()));
            }
            p
        })
    }
}

/// Synthesis (or analysis) half of a filter bank: lowpass `a`, highpass `b`.
#[derive(Clone, Debug)]
pub struct FilterPair {
    pub a: Filter,
    pub b: Filter,
}

/// A lowpass/highpass pair together with an optional biorthogonal dual pair.
#[derive(Clone, Debug)]
pub struct FilterBank {
    pub name: String,
    pub primal: FilterPair,
    pub dual: Option<FilterPair>,
}

impl FilterBank {
    pub fn dual(&self) -> Result<&FilterPair> {
        self.dual
            .as_ref()
            .ok_or_else(|| Error::InvalidFilterBank(format!("bank '{}' has no dual pair", self.name)))
    }

    /// Validates shapes and, when a dual pair is present, the exact
    /// perfect-reconstruction identity.
    pub fn verify(&self) -> Result<()> {
        let r = self.primal.a.cols();
        if self.primal.a.rows() != r {
            return Err(Error::InvalidFilterBank("lowpass mask must be square".into()));
        }
        if self.primal.b.cols() != r {
            return Err(Error::InvalidFilterBank("highpass mask width differs from lowpass".into()));
        }
        if let Some(dual) = &self.dual {
            if dual.a.rows() != r || dual.a.cols() != r || dual.b.cols() != r {
                return Err(Error::InvalidFilterBank("dual mask shapes differ from primal".into()));
            }
            perfect_reconstruction(&self.primal, dual)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<FilterBank> {
        let raw: RawBank = serde_json::from_str(text)?;
        let bank = FilterBank {
            name: raw.name,
            primal: raw.primal.build()?,
            dual: raw.dual.map(|d| d.build()).transpose()?,
        };
        bank.verify()?;
        Ok(bank)
    }
}

/// Checks the perfect-reconstruction identity between a synthesis pair and an
/// analysis pair: with `X*(z)` denoting the transpose with `z → 1/z`,
///
/// ```text
/// A(z) Ã*(z) + A(−z) Ã*(−z) = I      B(z) B̃*(z) + B(−z) B̃*(−z) = I
/// A(z) B̃*(z) + A(−z) B̃*(−z) = 0      B(z) Ã*(z) + B(−z) Ã*(−z) = 0
/// ```
///
/// These four identities are exactly biorthogonality of the two multiscale
/// systems, including completeness of the wavelet part.
pub fn perfect_reconstruction(syn: &FilterPair, ana: &FilterPair) -> Result<()> {
    let half = |x: &Filter, y: &Filter| -> LMat {
        let xs = x.symbol();
        let ys = y.symbol().adjoint();
        let direct = xs.matmul(&ys);
        let shifted = xs.modulate().matmul(&ys.modulate());
        direct.add(&shifted)
    };
    let checks: [(&Filter, &Filter, bool, &str); 4] = [
        (&syn.a, &ana.a, true, "lowpass/dual-lowpass"),
        (&syn.b, &ana.b, true, "highpass/dual-highpass"),
        (&syn.a, &ana.b, false, "lowpass/dual-highpass"),
        (&syn.b, &ana.a, false, "highpass/dual-lowpass"),
    ];
    for (x, y, ident, what) in checks {
        let got = half(x, y);
        let want = if ident { LMat::identity(x.rows()) } else { LMat::zeros(x.rows(), y.rows()) };
        if got.sub(&want) != LMat::zeros(x.rows(), y.rows()) {
            return Err(Error::InvalidFilterBank(format!(
                "perfect reconstruction fails in the {what} block"
            )));
        }
    }
    Ok(())
}

/// Moments `μ_j = ∫ x^j φ(x) dx` of the refinable vector of a square mask,
/// normalised so the first nonzero entry of `μ_0` equals 1.
///
/// `μ_0` is the 1-eigenvector of `â(0)`; higher moments follow from the exact
/// recursion `2^j μ_j = Σ_i C(j,i) M_i μ_{j−i}` with `M_i = Σ_k k^i a(k)`.
pub fn moment_vectors(a: &Filter, upto: usize) -> Result<Vec<Vec<Q>>> {
    let r = a.cols();
    if a.rows() != r {
        return Err(Error::InvalidFilterBank("moments need a square mask".into()));
    }
    let m0 = a.moment(0);
    let ker = m0.sub(&QMat::identity(r)).nullspace();
    if ker.nrows() != 1 {
        return Err(Error::InvalidFilterBank(
            "eigenvalue 1 of â(0) is not simple; refinable function not determined".into(),
        ));
    }
    let mut mu0 = ker.row(0);
    let lead = mu0.iter().position(|x| !x.is_zero()).expect("nonzero eigenvector");
    let s = mu0[lead].recip();
    for x in &mut mu0 {
        *x *= &s;
    }
    let mut mus = vec![mu0];
    for j in 1..=upto {
        let mut rhs = vec![Q::zero(); r];
        for i in 1..=j {
            let mi = a.moment(i);
            let c = binom(j, i);
            for (t, item) in rhs.iter_mut().enumerate() {
                for s in 0..r {
                    *item += &c * &mi[(t, s)] * &mus[j - i][s];
                }
            }
        }
        let lhs = QMat::identity(r).scale(&int_pow(2, j)).sub(&a.moment(0));
        let rhs_mat = QMat::from_fn(r, 1, |i, _| rhs[i].clone());
        let mu = lhs
            .solve(&rhs_mat)
            .ok_or_else(|| Error::InvalidFilterBank(format!("moment recursion singular at j={j}")))?;
        mus.push(mu.col(0));
    }
    Ok(mus)
}

/// Sum-rule analysis of a square mask.
///
/// `order` is the largest m such that there are row vectors `w_0..w_{m−1}`
/// (the Taylor jet of the matching trigonometric vector, in real form) with
///
/// ```text
/// Σ_i C(j,i) 2^i w_i M_{j−i} = w_j        (M_s = Σ_k k^s a(k))
/// Σ_i C(j,i) 2^i w_i N_{j−i} = 0          (N_s = Σ_k (−1)^k k^s a(k))
/// ```
///
/// for all j < m, normalised by `w_0 · μ_0 = 1`. The jets drive polynomial
/// reproduction: `p = Σ_k c_k(p) φ(·−k)` with
/// `c_k(p) = Σ_j (−1)^j w_j p^{(j)}(k)/j!` for every polynomial of degree
/// below the order.
#[derive(Clone, Debug)]
pub struct SumRules {
    pub order: usize,
    /// `jets[j]` is the row vector `w_j`, for `j < order`.
    pub jets: Vec<Vec<Q>>,
}

pub fn sum_rules(a: &Filter, cap: usize) -> Result<SumRules> {
    let r = a.cols();
    if a.rows() != r {
        return Err(Error::InvalidFilterBank("sum rules need a square mask".into()));
    }
    let mu0 = moment_vectors(a, 0)?.remove(0);
    let mut best: Option<Vec<Vec<Q>>> = None;
    for cand in 1..=cap {
        match solve_jet_system(a, &mu0, cand) {
            Some(jets) => best = Some(jets),
            None => break,
        }
    }
    match best {
        Some(jets) => Ok(SumRules { order: jets.len(), jets }),
        None => Err(Error::InvalidFilterBank("mask has no sum rules (â(0) lacks eigenvalue 1 structure)".into())),
    }
}

/// Solves for jets `w_0..w_{m−1}` satisfying all conditions below order `m`
/// jointly; `None` when infeasible. Underdetermined systems (possible when
/// `â(0)` has an eigenvalue `2^{−j}`) take the canonical solution with free
/// variables set to zero — later conditions still constrain earlier jets.
fn solve_jet_system(a: &Filter, mu0: &[Q], m: usize) -> Option<Vec<Vec<Q>>> {
    let r = a.cols();
    let unknowns = m * r;
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();

    // Normalisation w_0 · μ_0 = 1 pins the scale (and excludes w ≡ 0).
    let mut norm = vec![Q::zero(); unknowns];
    norm[..r].clone_from_slice(mu0);
    rows.push(norm);
    rhs.push(Q::one());

    let mom: Vec<QMat> = (0..m).map(|s| a.moment(s)).collect();
    let alt: Vec<QMat> = (0..m).map(|s| a.alt_moment(s)).collect();
    for j in 0..m {
        for t in 0..r {
            // Σ_i C(j,i) 2^i w_i M_{j−i} − w_j = 0, component t.
            let mut row = vec![Q::zero(); unknowns];
            for i in 0..=j {
                let c = binom(j, i) * int_pow(2, i);
                for s in 0..r {
                    row[i * r + s] += &c * &mom[j - i][(s, t)];
                }
            }
            row[j * r + t] -= Q::one();
            rows.push(row);
            rhs.push(Q::zero());

            // Σ_i C(j,i) 2^i w_i N_{j−i} = 0, component t.
            let mut row = vec![Q::zero(); unknowns];
            for i in 0..=j {
                let c = binom(j, i) * int_pow(2, i);
                for s in 0..r {
                    row[i * r + s] += &c * &alt[j - i][(s, t)];
                }
            }
            rows.push(row);
            rhs.push(Q::zero());
        }
    }

    let a_mat = QMat::from_rows(rows);
    let b_mat = QMat::from_fn(rhs.len(), 1, |i, _| rhs[i].clone());
    let x = a_mat.solve_any(&b_mat)?;
    Some((0..m).map(|j| (0..r).map(|s| x[(j * r + s, 0)].clone()).collect()).collect())
}

/// Moments `ν_j = ∫ x^j ψ(x) dx` of the wavelet vector `ψ = 2 Σ b(k) φ(2·−k)`.
pub fn wavelet_moments(b: &Filter, phi_moments: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let rows = b.rows();
    (0..phi_moments.len())
        .map(|j| {
            let mut nu = vec![Q::zero(); rows];
            for i in 0..=j {
                let mb = b.moment(i);
                let c = binom(j, i);
                for (t, item) in nu.iter_mut().enumerate() {
                    for s in 0..b.cols() {
                        *item += &c * &mb[(t, s)] * &phi_moments[j - i][s];
                    }
                }
            }
            let scale = int_pow(2, j).recip();
            nu.iter().map(|x| x * &scale).collect()
        })
        .collect()
}

/// Number of leading vanishing moments shared by all components of `ψ`.
pub fn vanishing_moments(b: &Filter, phi_moments: &[Vec<Q>]) -> usize {
    let nus = wavelet_moments(b, phi_moments);
    for (j, nu) in nus.iter().enumerate() {
        if nu.iter().any(|x| !x.is_zero()) {
            return j;
        }
    }
    nus.len()
}

#[derive(Deserialize)]
pub(crate) struct RawFilter {
    lo: i64,
    taps: Vec<Vec<Vec<String>>>,
}

impl RawFilter {
    fn build(self) -> Result<Filter> {
        let mut taps = Vec::with_capacity(self.taps.len());
        for t in &self.taps {
            let rows = t.len();
            let cols = t.first().map_or(0, |r| r.len());
            if rows == 0 || cols == 0 || t.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidFilterBank("malformed tap matrix".into()));
            }
            let mut m = QMat::zeros(rows, cols);
            for (i, row) in t.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    m[(i, j)] = s
                        .parse::<Q>()
                        .map_err(|e| Error::InvalidFilterBank(format!("bad rational '{s}': {e}")))?;
                }
            }
            taps.push(m);
        }
        Filter::new(self.lo, taps)
    }
}

#[derive(Deserialize)]
pub(crate) struct RawPair {
    a: RawFilter,
    b: RawFilter,
}

impl RawPair {
    pub(crate) fn build(self) -> Result<FilterPair> {
        Ok(FilterPair { a: self.a.build()?, b: self.b.build()? })
    }
}

#[derive(Deserialize)]
pub(crate) struct RawBank {
    name: String,
    primal: RawPair,
    dual: Option<RawPair>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn hat_pair() -> FilterPair {
        FilterPair {
            a: Filter::from_scalar(-1, vec![q(1, 4), q(1, 2), q(1, 4)]),
            b: Filter::from_scalar(-1, vec![q(-1, 8), q(-1, 4), q(3, 4), q(-1, 4), q(-1, 8)]),
        }
    }

    fn hat_dual_pair() -> FilterPair {
        FilterPair {
            a: Filter::from_scalar(-2, vec![q(-1, 8), q(1, 4), q(3, 4), q(1, 4), q(-1, 8)]),
            b: Filter::from_scalar(0, vec![q(-1, 4), q(1, 2), q(-1, 4)]),
        }
    }

    fn hermite_lowpass() -> Filter {
        let t = |entries: [[Q; 2]; 2]| {
            QMat::from_rows(entries.map(|r| r.to_vec()).to_vec())
        };
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

    #[test]
    fn perfect_reconstruction_holds_for_spline_bank() {
        perfect_reconstruction(&hat_pair(), &hat_dual_pair()).unwrap();
    }

    #[test]
    fn perfect_reconstruction_detects_perturbation() {
        let mut syn = hat_pair();
        syn.a = Filter::from_scalar(-1, vec![q(1, 4), q(1, 2), q(1, 3)]);
        assert!(perfect_reconstruction(&syn, &hat_dual_pair()).is_err());
    }

    #[test]
    fn hat_moments() {
        let mus = moment_vectors(&hat_pair().a, 2).unwrap();
        assert_eq!(mus[0], vec![qi(1)]);
        assert_eq!(mus[1], vec![qi(0)]);
        assert_eq!(mus[2], vec![q(1, 6)]);
    }

    #[test]
    fn hermite_moments() {
        let a = hermite_lowpass();
        let mus = moment_vectors(&a, 1).unwrap();
        assert_eq!(mus[0], vec![qi(1), qi(0)]);
        assert_eq!(mus[1], vec![qi(0), q(1, 15)]);
    }

    #[test]
    fn hat_sum_rules_order_two() {
        let sr = sum_rules(&hat_pair().a, 8).unwrap();
        assert_eq!(sr.order, 2);
        assert_eq!(sr.jets, vec![vec![qi(1)], vec![qi(0)]]);
        let sr_dual = sum_rules(&hat_dual_pair().a, 8).unwrap();
        assert_eq!(sr_dual.order, 2);
    }

    #[test]
    fn hermite_sum_rules_order_four() {
        // The j=3 jet condition is singular (â(0) has eigenvalue 1/8); the
        // half-period condition must still pin w_3 = 0.
        let sr = sum_rules(&hermite_lowpass(), 8).unwrap();
        assert_eq!(sr.order, 4);
        assert_eq!(sr.jets[0], vec![qi(1), qi(0)]);
        assert_eq!(sr.jets[1], vec![qi(0), qi(-1)]);
        assert_eq!(sr.jets[2], vec![qi(0), qi(0)]);
        assert_eq!(sr.jets[3], vec![qi(0), qi(0)]);
    }

    #[test]
    fn spline_wavelet_vanishing_moments() {
        let mus = moment_vectors(&hat_pair().a, 6).unwrap();
        let dual_mus = moment_vectors(&hat_dual_pair().a, 6).unwrap();
        // ψ pairs against polynomials reproduced by the dual; both sides
        // of this bank have two vanishing moments.
        assert_eq!(vanishing_moments(&hat_pair().b, mus.as_slice()), 2);
        assert_eq!(vanishing_moments(&hat_dual_pair().b, dual_mus.as_slice()), 2);
    }

    #[test]
    fn json_round_trip_validates() {
        let text = r#"{
            "name": "test",
            "primal": {
                "a": { "lo": -1, "taps": [[["1/4"]], [["1/2"]], [["1/4"]]] },
                "b": { "lo": -1, "taps": [[["-1/8"]], [["-1/4"]], [["3/4"]], [["-1/4"]], [["-1/8"]]] }
            },
            "dual": {
                "a": { "lo": -2, "taps": [[["-1/8"]], [["1/4"]], [["3/4"]], [["1/4"]], [["-1/8"]]] },
                "b": { "lo": 0, "taps": [[["-1/4"]], [["1/2"]], [["-1/4"]]] }
            }
        }"#;
        let bank = FilterBank::from_json(text).unwrap();
        assert_eq!(bank.name, "test");
        assert_eq!(bank.primal.a.lo(), -1);
        assert!(bank.dual.is_some());
    }
}
