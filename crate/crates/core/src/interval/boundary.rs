//! Edge-adapted generators at the left endpoint of `[0, ∞)`.
//!
//! Truncating the integer shifts of a refinable function at zero breaks both
//! refinability and biorthogonality. This module rebuilds them:
//!
//! * [`primal_edge`] selects combinations of truncated shifts that refine
//!   among themselves and keep the requested polynomials reproducible,
//! * [`dual_edge`] biorthogonalises the dual truncated shifts against the
//!   resulting edge functions,
//! * [`wavelet_edge`] and [`dual_wavelet_edge`] complete the two-scale
//!   systems with edge wavelets on each side.
//!
//! All pairings are exact rationals obtained from unit-cell Gram tables and
//! the refinement calculus; no quadrature is involved anywhere.

use crate::filters::{sum_rules, Filter, FilterBank};
use crate::rat::{Q, QMat};
use crate::refinable::{cell_gram, reproduction_coeffs, CellGram};
use crate::{Error, Result};
use num_traits::Zero;

/// Left-edge scaling data: `edge = A_c · (truncated shifts)` with refinement
/// `edge = 2 [A_L · edge(2·) + Σ_k A(k) φ(2·−k)]`.
#[derive(Clone, Debug)]
pub struct EdgeScaling {
    /// First shift treated as interior.
    pub n_int: i64,
    /// Truncated shifts entering the edge combinations, in decreasing order.
    pub cut: Vec<i64>,
    /// Multiplicity of the underlying vector function.
    pub r: usize,
    /// Edge functions in terms of the cut shifts (rows × cut·r columns).
    pub a_c: QMat,
    /// Self part of the edge refinement.
    pub a_l: QMat,
    /// Interior tails of the edge refinement: `k ↦` rows × r block.
    pub a_k: Vec<(i64, QMat)>,
}

impl EdgeScaling {
    pub fn count(&self) -> usize {
        self.a_c.nrows()
    }
}

/// Refinement matrix of the truncated shift vector into itself: entry block
/// `(k, k')` is `a(k' − 2k)`, shifts listed in `cut` order.
fn edge_transition(a: &Filter, cut: &[i64]) -> QMat {
    let r = a.cols();
    QMat::from_fn(cut.len() * r, cut.len() * r, |row, col| {
        let (ki, i) = (row / r, row % r);
        let (mi, ip) = (col / r, col % r);
        a.tap(cut[mi] - 2 * cut[ki])[(i, ip)].clone()
    })
}

/// Grows `seed` to the smallest row space containing it that is invariant
/// under right-multiplication by `e`; returns its reduced basis.
fn invariant_closure(seed: QMat, e: &QMat) -> QMat {
    let mut basis = seed.rref().0.without_zero_rows();
    loop {
        let mapped = basis.matmul(e);
        let ext = basis.vstack(&mapped).rref().0.without_zero_rows();
        if ext.nrows() == basis.nrows() {
            return basis;
        }
        basis = ext;
    }
}

/// Edge scaling functions keeping `x^t` (`t ∈ exponents`) reproducible on
/// the half-line. `n_int` is the first shift left untouched; everything in
/// `[1−hi, n_int)` is eligible for edge combinations.
pub fn primal_edge(a: &Filter, n_int: i64, exponents: &[usize]) -> Result<EdgeScaling> {
    let r = a.cols();
    let jets = sum_rules(a, 12)?;
    for &t in exponents {
        if t >= jets.order {
            return Err(Error::Construction(format!(
                "exponent {t} not covered by sum rules of order {}",
                jets.order
            )));
        }
    }
    if n_int < -a.lo() {
        return Err(Error::Construction(format!(
            "interior start {n_int} leaves truncated shifts outside the edge block"
        )));
    }
    let cut: Vec<i64> = (1 - a.hi()..n_int).rev().collect();
    if cut.is_empty() {
        return Ok(EdgeScaling {
            n_int,
            cut,
            r,
            a_c: QMat::zeros(0, 0),
            a_l: QMat::zeros(0, 0),
            a_k: Vec::new(),
        });
    }
    let e_c = edge_transition(a, &cut);
    let n = cut.len() * r;
    let target = n - (jets.order - exponents.len());

    let mut seed = QMat::zeros(0, n);
    for &t in exponents {
        let mut row = Vec::with_capacity(n);
        for &k in &cut {
            row.extend(reproduction_coeffs(&jets, t, k)?);
        }
        seed.push_row(row);
    }
    let mut basis = invariant_closure(seed, &e_c);
    if basis.nrows() > target {
        return Err(Error::Construction(format!(
            "edge closure needs {} functions, only {target} admissible",
            basis.nrows()
        )));
    }
    // Extend with plain (truncated) shifts, most interior first, as long as
    // the closure stays within the admissible count.
    for idx in 0..n {
        if basis.nrows() == target {
            break;
        }
        let mut row = vec![Q::zero(); n];
        row[idx] = Q::from_integer(1.into());
        let mut trial = basis.clone();
        trial.push_row(row);
        let closed = invariant_closure(trial, &e_c);
        if closed.nrows() <= target {
            basis = closed;
        }
    }
    if basis.nrows() != target {
        return Err(Error::Construction(format!(
            "edge space stalled at {} of {target} functions",
            basis.nrows()
        )));
    }

    finish_edge(a, n_int, cut, r, basis)
}

/// Completes an edge block from its coefficient basis: derives the self part
/// and interior tails of the refinement relation.
fn finish_edge(a: &Filter, n_int: i64, cut: Vec<i64>, r: usize, a_c: QMat) -> Result<EdgeScaling> {
    let e_c = edge_transition(a, &cut);
    let mapped = a_c.matmul(&e_c);
    let mut a_l = QMat::zeros(0, a_c.nrows());
    for i in 0..mapped.nrows() {
        let coords = a_c.row_coordinates(&mapped.row(i)).ok_or_else(|| {
            Error::Construction("edge space is not invariant under refinement".into())
        })?;
        a_l.push_row(coords);
    }

    let mut a_k = Vec::new();
    let mmax = 2 * cut.first().copied().unwrap_or(0) + a.hi();
    for m in n_int..=mmax {
        // Tail block: A_c · (a(m − 2k))_{k ∈ cut}.
        let block = QMat::from_fn(cut.len() * r, r, |row, col| {
            let (ki, i) = (row / r, row % r);
            a.tap(m - 2 * cut[ki])[(i, col)].clone()
        });
        let tail = a_c.matmul(&block);
        if !tail.is_zero() {
            a_k.push((m, tail));
        }
    }
    Ok(EdgeScaling { n_int, cut, r, a_c, a_l, a_k })
}

/// Dual edge data: the biorthogonalised edge block plus the bookkeeping
/// linking its functions to the primal "ring" (primal edge functions
/// followed by the primal interior shifts below `n_int` of the dual).
#[derive(Clone, Debug)]
pub struct DualEdge {
    pub edge: EdgeScaling,
    /// Number of primal interior shifts absorbed into the ring.
    pub ring_interior: usize,
}

/// Pairing `⟨φ̃(·−k̃)χ, edge_i⟩` for every edge function: contraction of the
/// half-line cell Gram with the edge coefficients. `gram` rows are dual.
fn pair_dual_shift_with_edge(gram: &CellGram, edge: &EdgeScaling, ktil: i64) -> Vec<Q> {
    let rd = gram.r_dual;
    let mut out = Vec::with_capacity(edge.count() * rd);
    for i in 0..edge.count() {
        for c in 0..rd {
            let mut acc = Q::zero();
            for (pos, &k) in edge.cut.iter().enumerate() {
                let h = gram.halfline(ktil, k);
                for ip in 0..edge.r {
                    acc += &edge.a_c[(i, pos * edge.r + ip)] * &h[(c, ip)];
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Builds the dual edge functions biorthogonal to the primal ring.
///
/// `n_int_dual` must make every dual shift `k ≥ n_int_dual` (a) supported in
/// `[0,∞)` and (b) orthogonal to all primal edge functions; both are checked.
pub fn dual_edge(
    bank: &FilterBank,
    primal: &EdgeScaling,
    n_int_dual: i64,
    exponents_dual: &[usize],
) -> Result<DualEdge> {
    let a = &bank.primal.a;
    let dual = bank.dual()?;
    let at = &dual.a;
    let r = at.cols();
    let gram = cell_gram(at, a, 0, 0)?;

    if n_int_dual < primal.n_int || n_int_dual < -at.lo() || n_int_dual < -a.lo() {
        return Err(Error::Construction(format!(
            "dual interior start {n_int_dual} violates support constraints"
        )));
    }
    // Condition (b): interior duals never see the primal edge functions.
    for k in n_int_dual..=(primal.n_int - 1 + a.hi() - at.lo()) {
        let p = pair_dual_shift_with_edge(&gram, primal, k);
        if p.iter().any(|x| !x.is_zero()) {
            return Err(Error::Construction(format!(
                "dual shift {k} still pairs with the primal edge; increase the dual interior start"
            )));
        }
    }

    let jets_d = sum_rules(at, 12)?;
    let cut: Vec<i64> = (1 - at.hi()..n_int_dual).rev().collect();
    let n = cut.len() * r;
    let ring_interior = (n_int_dual - primal.n_int) as usize * a.cols();
    let n_ring = primal.count() + ring_interior;

    let mut seed = QMat::zeros(0, n);
    for &t in exponents_dual {
        if t >= jets_d.order {
            return Err(Error::Construction(format!(
                "dual exponent {t} not covered by sum rules of order {}",
                jets_d.order
            )));
        }
        let mut row = Vec::with_capacity(n);
        for &k in &cut {
            row.extend(reproduction_coeffs(&jets_d, t, k)?);
        }
        seed.push_row(row);
    }
    let e_c = edge_transition(at, &cut);
    let mut basis = invariant_closure(seed, &e_c);
    for idx in 0..n {
        if basis.nrows() == n_ring {
            break;
        }
        let mut row = vec![Q::zero(); n];
        row[idx] = Q::from_integer(1.into());
        let mut trial = basis.clone();
        trial.push_row(row);
        let closed = invariant_closure(trial, &e_c);
        if closed.nrows() <= n_ring {
            basis = closed;
        }
    }
    if basis.nrows() != n_ring {
        return Err(Error::Construction(format!(
            "dual edge space has {} functions, need {n_ring}",
            basis.nrows()
        )));
    }

    // Pairings of the dual cut shifts with the primal ring.
    let mut g = QMat::zeros(n, n_ring);
    for (pos, &ktil) in cut.iter().enumerate() {
        let edge_part = pair_dual_shift_with_edge(&gram, primal, ktil);
        for c in 0..r {
            for j in 0..primal.count() {
                g[(pos * r + c, j)] = edge_part[j * r + c].clone();
            }
            for ki in 0..(n_int_dual - primal.n_int) {
                let h = gram.halfline(ktil, primal.n_int + ki);
                for ip in 0..a.cols() {
                    g[(pos * r + c, primal.count() + ki as usize * a.cols() + ip)] =
                        h[(c, ip)].clone();
                }
            }
        }
    }

    let rg = basis.matmul(&g);
    let inv = rg.inverse().ok_or_else(|| {
        Error::Construction("dual edge Gram against the ring is singular".into())
    })?;
    let a_c = inv.matmul(&basis);

    let edge = finish_edge(at, n_int_dual, cut, r, a_c)?;
    Ok(DualEdge { edge, ring_interior })
}

/// Edge wavelet data: rows over the fine-scale generator list
/// `[edge(2·) | φ(2·−k), k = n_int..m_max]`, with the split refinement form
/// `ψ_edge = 2 [B_L edge(2·) + Σ B(k) φ(2·−k)]`.
#[derive(Clone, Debug)]
pub struct EdgeWavelet {
    pub n_int: i64,
    /// First fine interior shift carried by the generator list.
    pub fine_lo: i64,
    /// Last fine interior shift carried by the generator list.
    pub fine_hi: i64,
    pub r: usize,
    /// Wavelet rows in fine-generator coordinates (count × (edge + shifts·r)).
    pub rows: QMat,
    pub b_l: QMat,
    pub b_k: Vec<(i64, QMat)>,
}

fn split_rows(
    rows: QMat,
    edge_count: usize,
    r: usize,
    fine_lo: i64,
    fine_hi: i64,
    n_int: i64,
) -> EdgeWavelet {
    let half = Q::new(1.into(), 2.into());
    let b_l = QMat::from_fn(rows.nrows(), edge_count, |i, j| &rows[(i, j)] * &half);
    let mut b_k = Vec::new();
    for (pos, m) in (fine_lo..=fine_hi).enumerate() {
        let block = QMat::from_fn(rows.nrows(), r, |i, c| {
            &rows[(i, edge_count + pos * r + c)] * &half
        });
        if !block.is_zero() {
            b_k.push((m, block));
        }
    }
    EdgeWavelet { n_int, fine_lo, fine_hi, r, rows, b_l, b_k }
}

/// Primal edge wavelets: the kernel of all coarse dual pairings over the
/// fine generator list, minus the interior wavelet directions. Supplied
/// `fixture_rows` (if any) are validated against the kernel and used as-is.
pub fn wavelet_edge(
    bank: &FilterBank,
    primal: &EdgeScaling,
    dual: &DualEdge,
    n_psi: i64,
    fixture_rows: Option<QMat>,
) -> Result<EdgeWavelet> {
    let a = &bank.primal.a;
    let b = &bank.primal.b;
    let dual_pair = bank.dual()?;
    let at = &dual_pair.a;
    let bt = &dual_pair.b;
    let r = a.cols();
    let gram = cell_gram(at, a, 0, 0)?;

    let n_phi = primal.n_int;
    let n_phi_d = dual.edge.n_int;
    let k_phi = (2 * n_phi + at.hi()).max(2 * n_psi + bt.hi()) - 1;
    let m_phi = k_phi + (a.hi() - at.lo()).max(0);
    let n_eta = primal.count() + ((m_phi - n_phi + 1) as usize) * r;

    // Constraint rows: orthogonality to every coarse dual function that can
    // see the generator span.
    let mut con = QMat::zeros(0, n_eta);

    // Dual edge functions: pairings are read off the dual refinement data.
    for j in 0..dual.edge.count() {
        let mut row = vec![Q::zero(); n_eta];
        for i in 0..primal.count() {
            row[i] = dual.edge.a_l[(j, i)].clone();
        }
        for (m, block) in &dual.edge.a_k {
            if *m >= n_phi && *m <= m_phi {
                let pos = primal.count() + ((*m - n_phi) as usize) * r;
                for c in 0..r {
                    row[pos + c] = block[(j, c)].clone();
                }
            }
        }
        // Ring interiors contribute via the dual self part.
        for kr in 0..(n_phi_d - n_phi) {
            let k = n_phi + kr;
            if k > m_phi {
                continue;
            }
            let pos = primal.count() + (kr as usize) * r;
            for c in 0..r {
                let ring_pos = primal.count() + (kr as usize) * r + c;
                if ring_pos < dual.edge.count() {
                    row[pos + c] += &dual.edge.a_l[(j, ring_pos)];
                }
            }
        }
        con.push_row(row);
    }

    // Interior dual shifts overlapping the generator span.
    let span_hi = m_phi + a.hi(); // support of φ(2·−m) ⊆ [·, (m + hi)/2]
    let k_top = (span_hi - 2 * at.lo() + 1) / 2 + 1;
    for ktil in n_phi_d..=k_top {
        for cd in 0..r {
            let mut row = vec![Q::zero(); n_eta];
            // Against edge fine functions: Σ_n ã(n) ⟨φ̃(·−2k̃−n)χ, cut⟩.
            for i in 0..primal.count() {
                let mut acc = Q::zero();
                for (nn, tap) in at.iter() {
                    let h = pair_shift_cut(&gram, primal, 2 * ktil + nn);
                    for cc in 0..r {
                        let v = &h[i * r + cc];
                        acc += &tap[(cd, cc)] * v;
                    }
                }
                row[i] = acc;
            }
            // Against fine interior shifts: ã(k − 2k̃).
            for m in n_phi..=m_phi {
                let tap = at.tap(m - 2 * ktil);
                let pos = primal.count() + ((m - n_phi) as usize) * r;
                for c in 0..r {
                    row[pos + c] = tap[(cd, c)].clone();
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                con.push_row(row);
            }
        }
    }

    let kernel = con.nullspace();

    // Interior wavelet rows inside the span.
    let mut interior = QMat::zeros(0, n_eta);
    let mut k = n_psi;
    while 2 * k + b.hi() <= m_phi {
        if 2 * k + b.lo() < n_phi {
            return Err(Error::Construction(format!(
                "interior wavelet {k} reaches below the interior fine shifts"
            )));
        }
        for comp in 0..b.rows() {
            let mut row = vec![Q::zero(); n_eta];
            for (m, tap) in b.iter() {
                let fine = 2 * k + m;
                let pos = primal.count() + ((fine - n_phi) as usize) * r;
                for c in 0..r {
                    row[pos + c] = &tap[(comp, c)] * Q::from_integer(2.into());
                }
            }
            interior.push_row(row);
        }
        k += 1;
    }
    // Sanity: interior wavelets are annihilated by every constraint.
    if !con.matmul(&interior.transpose()).is_zero() {
        return Err(Error::Construction(
            "interior wavelets violate coarse dual orthogonality".into(),
        ));
    }
    let n_edge = kernel.nrows().checked_sub(interior.nrows()).ok_or_else(|| {
        Error::Construction("wavelet kernel smaller than the interior wavelet count".into())
    })?;

    let rows = if let Some(v) = fixture_rows {
        if v.ncols() != n_eta {
            return Err(Error::Construction(format!(
                "edge wavelet rows have {} columns, expected {n_eta}",
                v.ncols()
            )));
        }
        if v.nrows() != n_edge {
            return Err(Error::Construction(format!(
                "{} edge wavelet rows supplied, need {n_edge}",
                v.nrows()
            )));
        }
        if !con.matmul(&v.transpose()).is_zero() {
            return Err(Error::Construction(
                "supplied edge wavelet rows are not orthogonal to the coarse duals".into(),
            ));
        }
        let combined = interior.vstack(&v);
        if combined.rank() != kernel.nrows() {
            return Err(Error::Construction(
                "supplied edge wavelet rows do not complete the wavelet space".into(),
            ));
        }
        v
    } else {
        // Deterministic fallback: reduce the kernel with reversed column
        // order so leading entries concentrate near the edge, then keep rows
        // independent of the interior wavelets.
        let rev = QMat::from_fn(kernel.nrows(), n_eta, |i, j| {
            kernel[(i, n_eta - 1 - j)].clone()
        });
        let red = rev.rref().0.without_zero_rows();
        let cand = QMat::from_fn(red.nrows(), n_eta, |i, j| red[(i, n_eta - 1 - j)].clone());
        let mut picked = QMat::zeros(0, n_eta);
        for i in (0..cand.nrows()).rev() {
            if picked.nrows() == n_edge {
                break;
            }
            let trial = interior.vstack(&picked);
            if !trial.row_space_contains(&cand.row(i)) {
                picked.push_row(cand.row(i));
            }
        }
        if picked.nrows() != n_edge {
            return Err(Error::Construction("could not isolate edge wavelet rows".into()));
        }
        picked
    };

    Ok(split_rows(rows, primal.count(), r, n_phi, m_phi, n_psi))
}

/// Pairing `⟨φ̃(·−k̃)χ, φ(·−k)χ⟩` against every cut shift of the primal edge,
/// flattened in cut order (components interleaved).
fn pair_shift_cut(gram: &CellGram, primal: &EdgeScaling, ktil: i64) -> Vec<Q> {
    let mut out = Vec::with_capacity(primal.count() * gram.r_dual);
    for i in 0..primal.count() {
        for cd in 0..gram.r_dual {
            let mut acc = Q::zero();
            for (pos, &k) in primal.cut.iter().enumerate() {
                let h = gram.halfline(ktil, k);
                for ip in 0..primal.r {
                    acc += &primal.a_c[(i, pos * primal.r + ip)] * &h[(cd, ip)];
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Dual edge wavelets: unique solutions of the full biorthogonality
/// conditions over the dual fine generator list.
pub fn dual_wavelet_edge(
    bank: &FilterBank,
    primal: &EdgeScaling,
    dual: &DualEdge,
    psi: &EdgeWavelet,
    n_psi_dual: i64,
) -> Result<EdgeWavelet> {
    let a = &bank.primal.a;
    let b = &bank.primal.b;
    let dual_pair = bank.dual()?;
    let at = &dual_pair.a;
    let r = a.cols();
    // Gram with primal side as rows this time: ⟨φ(·−k)χ, φ̃(·−k̃)χ⟩.
    let gram_pd = cell_gram(a, at, 0, 0)?;

    let n_phi = primal.n_int;
    let n_phi_d = dual.edge.n_int;
    let n_psi = psi.n_int;
    let k_phi_d = (2 * n_phi_d + a.hi()).max(2 * n_psi_dual + b.hi()) - 1;
    let m_phi_d = k_phi_d + (at.hi() - a.lo()).max(0);
    let n_eta = dual.edge.count() + ((m_phi_d - n_phi_d + 1) as usize) * r;

    let mut sys = QMat::zeros(0, n_eta);
    let mut rhs_rows: Vec<Vec<Q>> = Vec::new();
    let n_w = psi.rows.nrows();

    // (a) Orthogonality to the primal edge functions.
    for j in 0..primal.count() {
        let mut row = vec![Q::zero(); n_eta];
        // ⟨φ̃-edge_i(2·), φ-edge_j⟩ = ring coefficient of φ-edge_j refinement.
        for i in 0..dual.edge.count() {
            row[i] = if i < primal.count() {
                primal.a_l[(j, i)].clone()
            } else {
                // Ring interior position: coefficient A(k)_j of the matching
                // interior shift.
                let off = i - primal.count();
                let k = n_phi + (off / r) as i64;
                let c = off % r;
                primal
                    .a_k
                    .iter()
                    .find(|(m, _)| *m == k)
                    .map(|(_, blk)| blk[(j, c)].clone())
                    .unwrap_or_else(Q::zero)
            };
        }
        // ⟨φ̃(2·−k), φ-edge_j⟩ = A(k)_j.
        for (m, block) in &primal.a_k {
            if *m >= n_phi_d && *m <= m_phi_d {
                let pos = dual.edge.count() + ((*m - n_phi_d) as usize) * r;
                for c in 0..r {
                    row[pos + c] = block[(j, c)].clone();
                }
            }
        }
        sys.push_row(row);
        rhs_rows.push(vec![Q::zero(); n_w]);
    }

    // (b) Orthogonality to the coarse primal interior shifts.
    let span_hi = m_phi_d + at.hi();
    let k_top = (span_hi - 2 * a.lo() + 1) / 2 + 1;
    for k in n_phi..=k_top {
        for cp in 0..r {
            let mut row = vec![Q::zero(); n_eta];
            for i in 0..dual.edge.count() {
                let mut acc = Q::zero();
                for (nn, tap) in a.iter() {
                    let h = pair_shift_cut_dual(&gram_pd, &dual.edge, 2 * k + nn);
                    for cc in 0..r {
                        acc += &tap[(cp, cc)] * &h[i * r + cc];
                    }
                }
                row[i] = acc;
            }
            for m in n_phi_d..=m_phi_d {
                let tap = a.tap(m - 2 * k);
                let pos = dual.edge.count() + ((m - n_phi_d) as usize) * r;
                for c in 0..r {
                    row[pos + c] = tap[(cp, c)].clone();
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                sys.push_row(row);
                rhs_rows.push(vec![Q::zero(); n_w]);
            }
        }
    }

    // Fine pairing matrix P: ⟨η̃_i, η_j⟩ = ½ on ring-aligned pairs.
    let fine_pair = |i: usize, j: usize| -> Q {
        let half = Q::new(1.into(), 2.into());
        if i < dual.edge.count() && j < primal.count() {
            return if i == j { half } else { Q::zero() };
        }
        if i < dual.edge.count() {
            // η_j is φ(2·−m): ring alignment.
            let m = n_phi + ((j - primal.count()) / r) as i64;
            let c = (j - primal.count()) % r;
            let ring_pos = primal.count() + ((m - n_phi) as usize) * r + c;
            return if m < n_phi_d && ring_pos == i { half } else { Q::zero() };
        }
        if j < primal.count() {
            return Q::zero();
        }
        let m_dual = n_phi_d + ((i - dual.edge.count()) / r) as i64;
        let cd = (i - dual.edge.count()) % r;
        let m = n_phi + ((j - primal.count()) / r) as i64;
        let c = (j - primal.count()) % r;
        if m_dual == m && cd == c {
            half
        } else {
            Q::zero()
        }
    };

    // (c) Biorthogonality to the primal edge wavelets.
    // η and η̃ lists have different lengths; map η index to pairing.
    let n_eta_primal = primal.count() + ((psi.fine_hi - psi.fine_lo + 1) as usize) * r;
    for t in 0..n_w {
        let mut row = vec![Q::zero(); n_eta];
        for i in 0..n_eta {
            let mut acc = Q::zero();
            for j in 0..n_eta_primal {
                // Translate primal η index to the shared coordinates.
                let pv = &psi.rows[(t, j)];
                if pv.is_zero() {
                    continue;
                }
                // Primal η entry j corresponds to edge (j < count) or shift.
                let pair = if j < primal.count() {
                    fine_pair(i, j)
                } else {
                    let m = psi.fine_lo + ((j - primal.count()) / r) as i64;
                    let c = (j - primal.count()) % r;
                    let jj = primal.count() + ((m - n_phi) as usize) * r + c;
                    fine_pair(i, jj)
                };
                acc += pv * &pair;
            }
            row[i] = acc;
        }
        sys.push_row(row);
        let mut e = vec![Q::zero(); n_w];
        e[t] = Q::from_integer(1.into());
        rhs_rows.push(e);
    }

    // (d) Orthogonality to the interior primal wavelets in range.
    let mut k = n_psi;
    while 2 * k + b.lo() <= m_phi_d + at.hi() - a.lo() {
        for comp in 0..b.rows() {
            let mut row = vec![Q::zero(); n_eta];
            for i in 0..n_eta {
                let mut acc = Q::zero();
                for (m, tap) in b.iter() {
                    let fine = 2 * k + m;
                    if fine < n_phi {
                        continue;
                    }
                    let jj = primal.count() + ((fine - n_phi) as usize) * r;
                    for c in 0..r {
                        let pair = fine_pair(i, jj + c);
                        if !pair.is_zero() {
                            acc += &tap[(comp, c)] * &pair * Q::from_integer(2.into());
                        }
                    }
                }
                row[i] = acc;
            }
            if row.iter().any(|x| !x.is_zero()) {
                sys.push_row(row);
                rhs_rows.push(vec![Q::zero(); n_w]);
            }
        }
        k += 1;
    }

    let rhs = QMat::from_fn(sys.nrows(), n_w, |i, j| rhs_rows[i][j].clone());
    let sol = sys.solve(&rhs).ok_or_else(|| {
        Error::Construction("dual edge wavelet system is singular or inconsistent".into())
    })?;
    let rows = sol.transpose();
    Ok(split_rows(rows, dual.edge.count(), r, n_phi_d, m_phi_d, n_psi_dual))
}

/// Pairing `⟨φ(·−k)χ, dual-edge_i⟩` flattened over edge functions and primal
/// components; `gram` here has primal rows and dual columns.
fn pair_shift_cut_dual(gram: &CellGram, dual_edge: &EdgeScaling, k: i64) -> Vec<Q> {
    let mut out = Vec::with_capacity(dual_edge.count() * gram.r_dual);
    for i in 0..dual_edge.count() {
        for cp in 0..gram.r_dual {
            let mut acc = Q::zero();
            for (pos, &ktil) in dual_edge.cut.iter().enumerate() {
                let h = gram.halfline(k, ktil);
                for ip in 0..dual_edge.r {
                    acc += &dual_edge.a_c[(i, pos * dual_edge.r + ip)] * &h[(cp, ip)];
                }
            }
            out.push(acc);
        }
    }
    out
}
