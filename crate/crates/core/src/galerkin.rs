//! Galerkin matrices for the interval bases: exact banded single-scale Gram
//! and stiffness matrices, the multiscale Gram as a fast operator (transform,
//! banded multiply, transform back), diagonal normalization, and condition
//! numbers of the resulting systems.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::eigen::{dense_extremes, spd_extremes, tridiag_extremes, SymOp};
use crate::interval::{Boundary, Element, Multiscale};
use crate::rat::{pow2, q_to_f64, Q, QMat};
use crate::refinable::{cell_gram, support, CellGram};
use crate::{Error, Result};
use num_traits::Zero;

/// Symmetric sparse matrix in row-list form.
pub struct SparseSym {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SymOp for SparseSym {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            *yi = row.iter().map(|(j, v)| v * x[*j]).sum();
        }
    }
}

impl SparseSym {
    /// Relabels indices by `order` (new position `p` holds old `order[p]`).
    pub fn permuted(&self, order: &[usize]) -> SparseSym {
        let mut inv = vec![0usize; self.n];
        for (pos, &old) in order.iter().enumerate() {
            inv[old] = pos;
        }
        let mut rows = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                rows[inv[i]].push((inv[*j], *v));
            }
        }
        SparseSym { n: self.n, rows }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                m[(i, *j)] = *v;
            }
        }
        m
    }

    /// Diagonal and off-diagonal bands if the matrix is tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut diag = vec![0.0; self.n];
        let mut off = vec![0.0; self.n.saturating_sub(1)];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                match *j as i64 - i as i64 {
                    0 => diag[i] = *v,
                    1 => off[i] = *v,
                    -1 => {}
                    _ if *v != 0.0 => return None,
                    _ => {}
                }
            }
        }
        Some((diag, off))
    }
}

/// Exact Gram of one scaling level against itself, both sides differentiated
/// `m` times. Entries away from the endpoints come from the shift-invariant
/// line values; the finitely many boundary-affected pairs go through the
/// windowed cell sums.
pub struct LevelGram {
    pub n: usize,
    pub tri: Vec<(usize, usize, Q)>,
}

impl LevelGram {
    pub fn to_sparse(&self) -> SparseSym {
        let mut rows = vec![Vec::new(); self.n];
        for (i, j, v) in &self.tri {
            rows[*i].push((*j, q_to_f64(v)));
        }
        SparseSym { n: self.n, rows }
    }

    pub fn to_qmat(&self) -> QMat {
        let mut m = QMat::zeros(self.n, self.n);
        for (i, j, v) in &self.tri {
            m[(*i, *j)] = v.clone();
        }
        m
    }
}

fn atom_span(e: &Element, lo: i64, hi: i64) -> (i64, i64) {
    let mn = e.atoms.iter().map(|a| a.shift).min().unwrap_or(0);
    let mx = e.atoms.iter().map(|a| a.shift).max().unwrap_or(0);
    (mn + lo, mx + hi)
}

/// Index order sorting elements left to right by atom support. The level
/// lists put edge functions first, so banded structure only shows after
/// this relabeling.
pub fn spatial_order(elements: &[Element]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..elements.len()).collect();
    idx.sort_by_key(|&i| {
        let e = &elements[i];
        let mn = e.atoms.iter().map(|a| a.shift).min().unwrap_or(0);
        let mx = e.atoms.iter().map(|a| a.shift).max().unwrap_or(0);
        let comp = e.atoms.first().map(|a| a.comp).unwrap_or(0);
        (mn, mx, comp)
    });
    idx
}

/// Exact single-scale Gram `⟨φ_i^{(m)}, φ_j^{(m)}⟩` over `[0,1]` at `level`.
pub fn level_gram(bd: &Boundary, level: u32, m: usize) -> Result<LevelGram> {
    let a = &bd.spec.bank.primal.a;
    let tab = cell_gram(a, a, m, m)?;
    let elements = bd.scaling(level)?;
    let (lo, hi) = support(a);
    let cells = 1i64 << level;
    let factor = pow2(level as i64 * (2 * m as i64) - level as i64);

    // Shift-invariant values `∫ φ^{(m)}(x) φ^{(m)}(x − d) dx` on the line.
    let width = hi - lo;
    let base = (-lo).max(0) + width + 1;
    let mut line: HashMap<i64, QMat> = HashMap::new();
    for d in -width..=width {
        line.insert(d, tab.halfline(base, base + d));
    }

    let spans: Vec<(i64, i64)> = elements.iter().map(|e| atom_span(e, lo, hi)).collect();
    let max_width = spans.iter().map(|(a, b)| b - a).max().unwrap_or(0);
    let band = elements
        .len()
        .min((a.cols() as i64 * (max_width + width + 2)) as usize + 2 * bd.phi.count());

    let mut cache: HashMap<(i64, i64), QMat> = HashMap::new();
    let mut tri = Vec::new();
    for (i, ei) in elements.iter().enumerate() {
        for j in i.saturating_sub(band)..(i + band + 1).min(elements.len()) {
            if j < i {
                continue; // fill the lower triangle by symmetry afterwards
            }
            let ej = &elements[j];
            if spans[i].1 <= spans[j].0 || spans[j].1 <= spans[i].0 {
                continue;
            }
            let mut acc = Q::zero();
            for ar in &ei.atoms {
                for ac in &ej.atoms {
                    let inside = ar.shift + lo >= 0
                        && ac.shift + lo >= 0
                        && ar.shift + hi <= cells
                        && ac.shift + hi <= cells;
                    let w = if inside {
                        match line.get(&(ac.shift - ar.shift)) {
                            Some(w) => w,
                            None => continue,
                        }
                    } else {
                        cache
                            .entry((ar.shift, ac.shift))
                            .or_insert_with(|| tab.window(ar.shift, ac.shift, cells))
                    };
                    let v = &w[(ar.comp, ac.comp)];
                    if !v.is_zero() {
                        acc += ar.coeff.clone() * ac.coeff.clone() * v.clone();
                    }
                }
            }
            if !acc.is_zero() {
                let v = acc * factor.clone();
                if j != i {
                    tri.push((j, i, v.clone()));
                }
                tri.push((i, j, v));
            }
        }
    }
    Ok(LevelGram { n: elements.len(), tri })
}

/// The two-scale maps of a multiscale basis converted to `f64` triplets for
/// fast transforms.
pub struct TransformF64 {
    levels: Vec<LevelF64>,
}

struct LevelF64 {
    n_coarse: usize,
    n_fine: usize,
    n_wav: usize,
    r: Vec<(usize, usize, f64)>,
    w: Vec<(usize, usize, f64)>,
}

impl TransformF64 {
    pub fn new(ms: &Multiscale) -> Self {
        let levels = ms
            .maps
            .iter()
            .map(|m| LevelF64 {
                n_coarse: m.n_coarse,
                n_fine: m.n_fine,
                n_wav: m.n_wav,
                r: m.r.iter().map(|(i, j, v)| (*i, *j, q_to_f64(v))).collect(),
                w: m.w.iter().map(|(i, j, v)| (*i, *j, q_to_f64(v))).collect(),
            })
            .collect();
        TransformF64 { levels }
    }

    pub fn multiscale_len(&self) -> usize {
        let first = self.levels.first().map_or(0, |l| l.n_coarse);
        first + self.levels.iter().map(|l| l.n_wav).sum::<usize>()
    }

    pub fn fine_len(&self) -> usize {
        self.levels.last().map_or(0, |l| l.n_fine)
    }

    /// `Tᵀ x`: multiscale coefficients to the finest single scale,
    /// `c_{j+1} = 2(Rᵀ c_j + Wᵀ d_j)`.
    pub fn t_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut c = x[..self.levels[0].n_coarse].to_vec();
        let mut offset = self.levels[0].n_coarse;
        for l in &self.levels {
            let d = &x[offset..offset + l.n_wav];
            offset += l.n_wav;
            let mut fine = vec![0.0; l.n_fine];
            for (i, j, v) in &l.r {
                fine[*j] += 2.0 * v * c[*i];
            }
            for (i, j, v) in &l.w {
                fine[*j] += 2.0 * v * d[*i];
            }
            c = fine;
        }
        c
    }

    /// `T y`: pairings of a fine single-scale vector with every multiscale
    /// row, `c_j = 2R c_{j+1}`, `d_j = 2W c_{j+1}`.
    pub fn t_apply(&self, y: &[f64]) -> Vec<f64> {
        let mut c = y.to_vec();
        let mut details: Vec<Vec<f64>> = Vec::with_capacity(self.levels.len());
        for l in self.levels.iter().rev() {
            let mut coarse = vec![0.0; l.n_coarse];
            let mut d = vec![0.0; l.n_wav];
            for (i, j, v) in &l.r {
                coarse[*i] += 2.0 * v * c[*j];
            }
            for (i, j, v) in &l.w {
                d[*i] += 2.0 * v * c[*j];
            }
            details.push(d);
            c = coarse;
        }
        for d in details.into_iter().rev() {
            c.extend(d);
        }
        c
    }
}

/// Exact diagonal `⟨e_i^{(m)}, e_i^{(m)}⟩` of the multiscale Gram; interior
/// elements of one scale share their value, so only boundary elements cost
/// individual windowed sums.
pub fn multiscale_diag(bd: &Boundary, ms: &Multiscale, m: usize) -> Result<Vec<Q>> {
    let a = &bd.spec.bank.primal.a;
    let tab = cell_gram(a, a, m, m)?;
    let mut cache: HashMap<(u32, i64, i64), QMat> = HashMap::new();
    let mut interior: HashMap<(u32, bool, usize), Q> = HashMap::new();
    let mut out = Vec::with_capacity(ms.size());
    for e in ms.elements() {
        let key = match e.place {
            crate::interval::Place::Interior(_, comp) => Some((e.scale, e.wavelet, comp)),
            _ => None,
        };
        if let Some(k) = key {
            if let Some(v) = interior.get(&k) {
                out.push(v.clone());
                continue;
            }
        }
        let v = element_self_inner(&tab, e, m, &mut cache);
        if let Some(k) = key {
            interior.insert(k, v.clone());
        }
        out.push(v);
    }
    Ok(out)
}

fn element_self_inner(
    tab: &CellGram,
    e: &Element,
    m: usize,
    cache: &mut HashMap<(u32, i64, i64), QMat>,
) -> Q {
    let level = e.atom_level;
    let cells = 1i64 << level;
    let factor = pow2(level as i64 * (2 * m as i64) - level as i64);
    let mut acc = Q::zero();
    for ar in &e.atoms {
        for ac in &e.atoms {
            let w = cache
                .entry((level, ar.shift, ac.shift))
                .or_insert_with(|| tab.window(ar.shift, ac.shift, cells));
            let v = &w[(ar.comp, ac.comp)];
            if !v.is_zero() {
                acc += ar.coeff.clone() * ac.coeff.clone() * v.clone();
            }
        }
    }
    acc * factor
}

/// `D^{-1/2} G D^{-1/2}` with `G` either the single-scale Gram itself or its
/// multiscale transform `T G Tᵀ`, applied matrix-free.
pub struct NormalizedGram {
    fine: SparseSym,
    transform: Option<TransformF64>,
    dinv: Vec<f64>,
}

impl NormalizedGram {
    pub fn single_scale(fine: SparseSym) -> Result<Self> {
        let dinv = inv_sqrt_diag(&fine)?;
        Ok(NormalizedGram { fine, transform: None, dinv })
    }

    pub fn multiscale(fine: SparseSym, transform: TransformF64, diag: &[Q]) -> Result<Self> {
        if diag.len() != transform.multiscale_len() {
            return Err(Error::InvalidInput("diagonal length mismatch".into()));
        }
        let mut dinv = Vec::with_capacity(diag.len());
        for v in diag {
            let x = q_to_f64(v);
            if x <= 0.0 {
                return Err(Error::InvalidInput("non-positive diagonal entry".into()));
            }
            dinv.push(1.0 / x.sqrt());
        }
        Ok(NormalizedGram { fine, transform: Some(transform), dinv })
    }
}

fn inv_sqrt_diag(s: &SparseSym) -> Result<Vec<f64>> {
    let mut dinv = vec![0.0; s.n];
    for (i, row) in s.rows.iter().enumerate() {
        let d = row
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, v)| *v)
            .unwrap_or(0.0);
        if d <= 0.0 {
            return Err(Error::InvalidInput("non-positive diagonal entry".into()));
        }
        dinv[i] = 1.0 / d.sqrt();
    }
    Ok(dinv)
}

impl SymOp for NormalizedGram {
    fn dim(&self) -> usize {
        self.dinv.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u: Vec<f64> = x.iter().zip(&self.dinv).map(|(a, b)| a * b).collect();
        let v = match &self.transform {
            Some(t) => {
                let fine_in = t.t_transpose(&u);
                let mut fine_out = vec![0.0; self.fine.n];
                self.fine.apply(&fine_in, &mut fine_out);
                t.t_apply(&fine_out)
            }
            None => {
                let mut out = vec![0.0; self.fine.n];
                self.fine.apply(&u, &mut out);
                out
            }
        };
        for ((yi, vi), di) in y.iter_mut().zip(&v).zip(&self.dinv) {
            *yi = vi * di;
        }
    }
}

/// Spectral condition number of a positive definite operator: direct
/// methods below `dense_cutoff` (tridiagonal bisection or a dense
/// eigendecomposition of the materialized matrix), matrix-free Lanczos with
/// shift-inverted refinement above it.
pub fn condition_number(op: &dyn SymOp, dense_cutoff: usize) -> Result<f64> {
    let n = op.dim();
    let (lo, hi) = if n <= dense_cutoff {
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        dense_extremes(&m)?
    } else {
        spd_extremes(op, 300)?
    };
    if lo <= 0.0 {
        return Err(Error::InvalidInput("operator is not positive definite".into()));
    }
    Ok(hi / lo)
}

/// Basis family for the condition-number experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisFamily {
    /// The scaling functions of the finest level alone.
    SingleScale,
    /// The full multiscale basis from the minimal coarse level up.
    Multiscale,
}

#[derive(Clone, Debug)]
pub struct ConditionRow {
    pub level: u32,
    pub size: usize,
    pub kappa: f64,
}

/// Condition numbers of the diagonally normalized Gram (`m = 0`) or
/// stiffness (`m = 1`) matrices for a range of finest levels.
pub fn condition_table(
    bd: &Boundary,
    family: BasisFamily,
    m: usize,
    levels: impl IntoIterator<Item = u32>,
    dense_cutoff: usize,
) -> Result<Vec<ConditionRow>> {
    let mut rows = Vec::new();
    for n in levels {
        let fine = level_gram(bd, n, m)?.to_sparse();
        let (size, kappa) = match family {
            BasisFamily::SingleScale => {
                let size = fine.n;
                let order = spatial_order(&bd.scaling(n)?);
                let norm = NormalizedGram::single_scale(fine.permuted(&order))?;
                // Normalization preserves the band structure, so tridiagonal
                // systems get the exact bisection path at any size.
                let kappa = if let Some((diag, off)) = normalized_tridiagonal(&norm) {
                    let (lo, hi) = tridiag_extremes(&diag, &off);
                    hi / lo
                } else {
                    condition_number(&norm, dense_cutoff)?
                };
                (size, kappa)
            }
            BasisFamily::Multiscale => {
                let ms = bd.multiscale(bd.j0, n)?;
                let size = ms.size();
                let diag = multiscale_diag(bd, &ms, m)?;
                let norm = NormalizedGram::multiscale(fine, TransformF64::new(&ms), &diag)?;
                (size, condition_number(&norm, dense_cutoff)?)
            }
        };
        rows.push(ConditionRow { level: n, size, kappa });
    }
    Ok(rows)
}

fn normalized_tridiagonal(norm: &NormalizedGram) -> Option<(Vec<f64>, Vec<f64>)> {
    let (diag, off) = norm.fine.tridiagonal()?;
    let d: Vec<f64> = diag
        .iter()
        .zip(&norm.dinv)
        .map(|(v, s)| v * s * s)
        .collect();
    let o: Vec<f64> = off
        .iter()
        .enumerate()
        .map(|(i, v)| v * norm.dinv[i] * norm.dinv[i + 1])
        .collect();
    Some((d, o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::interval::interval_gram;
    use crate::rat::{q, qi};

    fn hat_boundary() -> Boundary {
        Boundary::new(fixtures::cdf22()).unwrap()
    }

    #[test]
    fn hat_gram_matches_closed_form() {
        // In left-to-right order the hat system is the classical tridiagonal
        // mass/stiffness pair scaled by the mesh width.
        let bd = hat_boundary();
        let els = bd.scaling(4).unwrap();
        let order = spatial_order(&els);
        let n = 15;
        for (m, di, off) in [(0usize, q(2, 3 * 16), q(1, 6 * 16)), (1, qi(2 * 16), qi(-16))] {
            let g = level_gram(&bd, 4, m).unwrap().to_qmat();
            let p = QMat::from_fn(n, n, |i, j| g[(order[i], order[j])].clone());
            let want = QMat::from_fn(n, n, |i, j| {
                if i == j {
                    di.clone()
                } else if i.abs_diff(j) == 1 {
                    off.clone()
                } else {
                    Q::zero()
                }
            });
            assert_eq!(p, want);
        }
    }

    #[test]
    fn banded_gram_agrees_with_windowed_route() {
        // The banded assembly takes the shift-invariant line path wherever
        // possible; the generic routine windows every pair. They must agree
        // exactly.
        let bd = hat_boundary();
        let bank = &bd.spec.bank;
        for m in 0..=1usize {
            let tab = cell_gram(&bank.primal.a, &bank.primal.a, m, m).unwrap();
            let els = bd.scaling(4).unwrap();
            let generic = interval_gram(&tab, &els, &els, m, m).unwrap();
            assert_eq!(level_gram(&bd, 4, m).unwrap().to_qmat(), generic);
        }
    }

    #[test]
    fn single_scale_mass_condition_approaches_three() {
        let bd = hat_boundary();
        let rows = condition_table(&bd, BasisFamily::SingleScale, 0, [11], 4096).unwrap();
        assert_eq!(rows[0].size, 2047);
        assert!((rows[0].kappa - 3.0).abs() < 1e-4, "kappa = {}", rows[0].kappa);
    }

    #[test]
    fn single_scale_stiffness_condition_grows_like_mesh() {
        let bd = hat_boundary();
        let rows = condition_table(&bd, BasisFamily::SingleScale, 1, [11], 4096).unwrap();
        let kappa = rows[0].kappa;
        assert!((kappa - 1.6999e6).abs() < 5e-3 * 1.6999e6, "kappa = {kappa}");
    }

    #[test]
    fn operator_condition_matches_dense_route() {
        let bd = hat_boundary();
        let n = 5;
        let ms = bd.multiscale(bd.j0, n).unwrap();
        let fine = level_gram(&bd, n, 0).unwrap();

        // Dense route: exact synthesis matrix times exact Gram.
        let t = ms.synthesis_matrix();
        let g = t.matmul(&fine.to_qmat()).matmul(&t.transpose());
        let mut gd = DMatrix::zeros(ms.size(), ms.size());
        for i in 0..ms.size() {
            for j in 0..ms.size() {
                let s = (q_to_f64(&g[(i, i)]) * q_to_f64(&g[(j, j)])).sqrt();
                gd[(i, j)] = q_to_f64(&g[(i, j)]) / s;
            }
        }
        let (lo, hi) = dense_extremes(&gd).unwrap();
        let dense_kappa = hi / lo;

        // Matrix-free route, forced past the dense cutoff.
        let diag = multiscale_diag(&bd, &ms, 0).unwrap();
        for (d, el) in diag.iter().zip(0..) {
            assert_eq!(*d, g[(el, el)]);
        }
        let norm =
            NormalizedGram::multiscale(fine.to_sparse(), TransformF64::new(&ms), &diag).unwrap();
        let op_kappa = condition_number(&norm, 0).unwrap();
        assert!(
            (op_kappa - dense_kappa).abs() < 1e-8 * dense_kappa,
            "dense {dense_kappa} vs operator {op_kappa}"
        );
    }
}
