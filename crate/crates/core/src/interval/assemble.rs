//! Levelled bases on the unit interval assembled from the edge constructions:
//! per-level element sets, two-scale transformation matrices, exact Gram
//! matrices, and the fast transforms between single-scale and multiscale
//! coefficients.
//!
//! Everything here is exact rational arithmetic; numeric code converts the
//! assembled data to its working precision afterwards.

use std::collections::HashMap;

use crate::filters::{moment_vectors, Filter, FilterBank};
use crate::interval::boundary::{
    dual_edge, dual_wavelet_edge, primal_edge, wavelet_edge, DualEdge, EdgeScaling, EdgeWavelet,
};
use crate::rat::{pow2, qi, Q, QMat};
use crate::refinable::{support, CellGram};
use crate::scalar::Real;
use crate::{Error, Result};
use num_traits::Zero;

/// Mirror symmetry of a refinable (vector) function: component `i` satisfies
/// `f_i(x) = signs[i] · f_i(delta − x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reflection {
    pub delta: i64,
    pub signs: Vec<i64>,
}

fn sign_mat(signs: &[i64]) -> QMat {
    QMat::from_fn(signs.len(), signs.len(), |i, j| {
        if i == j {
            qi(signs[i])
        } else {
            qi(0)
        }
    })
}

/// Detects the mirror symmetry of a refinable function from its mask:
/// `a(m) = S a(δ − m) S` with `δ = l_a + h_a`, plus invariance of the zeroth
/// moment vector (which pins the admissible sign patterns).
pub fn mask_reflection(a: &Filter) -> Option<Reflection> {
    let delta = a.lo() + a.hi();
    let r = a.rows();
    let mu0 = moment_vectors(a, 0).ok()?.remove(0);
    for bits in 0..(1u32 << r) {
        let signs: Vec<i64> = (0..r)
            .map(|i| if bits >> i & 1 == 0 { 1 } else { -1 })
            .collect();
        if (0..r).any(|i| signs[i] < 0 && !mu0[i].is_zero()) {
            continue;
        }
        let s = sign_mat(&signs);
        let ok = (a.lo()..=a.hi())
            .all(|m| a.tap(m) == s.matmul(&a.tap(delta - m)).matmul(&s));
        if ok {
            return Some(Reflection { delta, signs });
        }
    }
    None
}

/// Mirror symmetry of the wavelet `ψ = 2 Σ b(k) φ(2·−k)` given the symmetry
/// of `φ`; its own shift offset is `δ_ψ = (l_b + h_b + δ_φ)/2`.
pub fn wavelet_reflection(b: &Filter, phi: &Reflection) -> Option<Reflection> {
    let l = b.lo() + b.hi();
    if (l + phi.delta) % 2 != 0 {
        return None;
    }
    let delta = (l + phi.delta) / 2;
    let sp = sign_mat(&phi.signs);
    for bits in 0..(1u32 << b.rows()) {
        let signs: Vec<i64> = (0..b.rows())
            .map(|i| if bits >> i & 1 == 0 { 1 } else { -1 })
            .collect();
        let sb = sign_mat(&signs);
        let ok = (b.lo()..=b.hi())
            .all(|m| b.tap(m) == sb.matmul(&b.tap(l - m)).matmul(&sp));
        if ok {
            return Some(Reflection { delta, signs });
        }
    }
    None
}

/// Construction parameters for a basis on `[0,1]`.
#[derive(Clone, Debug)]
pub struct IntervalSpec {
    pub bank: FilterBank,
    /// First interior shift of the scaling functions.
    pub n_phi: i64,
    /// Polynomial exponents kept at the endpoints; the missing ones encode
    /// homogeneous boundary conditions.
    pub exponents: Vec<usize>,
    pub n_phi_dual: i64,
    pub exponents_dual: Vec<usize>,
    /// First interior shift of the wavelets.
    pub n_psi: i64,
    pub n_psi_dual: i64,
    /// Boundary-wavelet selection rows (fine-vector coordinates) for the two
    /// endpoints; `None` falls back to the generic completion.
    pub left_rows: Option<QMat>,
    pub right_rows: Option<QMat>,
}

#[derive(serde::Deserialize)]
struct RawInterval {
    n_phi: i64,
    exponents: Vec<usize>,
    n_phi_dual: i64,
    exponents_dual: Vec<usize>,
    n_psi: i64,
    n_psi_dual: i64,
    left_rows: Option<Vec<Vec<String>>>,
    right_rows: Option<Vec<Vec<String>>>,
}

#[derive(serde::Deserialize)]
struct RawSpecFile {
    name: String,
    primal: crate::filters::RawPair,
    dual: Option<crate::filters::RawPair>,
    interval: RawInterval,
}

fn parse_rows(rows: Vec<Vec<String>>) -> Result<QMat> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut r = Vec::with_capacity(row.len());
        for s in row {
            r.push(
                s.parse::<Q>()
                    .map_err(|e| Error::InvalidInput(format!("bad rational '{s}': {e}")))?,
            );
        }
        out.push(r);
    }
    Ok(QMat::from_rows(out))
}

impl IntervalSpec {
    /// Parses a basis description: a filter bank plus the interval section
    /// with edge parameters and (optionally) frozen boundary-wavelet rows.
    pub fn from_json(text: &str) -> Result<IntervalSpec> {
        let raw: RawSpecFile = serde_json::from_str(text)?;
        let bank = FilterBank {
            name: raw.name,
            primal: raw.primal.build()?,
            dual: raw.dual.map(|d| d.build()).transpose()?,
        };
        bank.verify()?;
        let iv = raw.interval;
        Ok(IntervalSpec {
            bank,
            n_phi: iv.n_phi,
            exponents: iv.exponents,
            n_phi_dual: iv.n_phi_dual,
            exponents_dual: iv.exponents_dual,
            n_psi: iv.n_psi,
            n_psi_dual: iv.n_psi_dual,
            left_rows: iv.left_rows.map(parse_rows).transpose()?,
            right_rows: iv.right_rows.map(parse_rows).transpose()?,
        })
    }
}

/// All boundary constructions plus the symmetry data needed to place the
/// reflected copies at the right endpoint.
pub struct Boundary {
    pub spec: IntervalSpec,
    pub phi: EdgeScaling,
    pub phid: DualEdge,
    pub psi_l: EdgeWavelet,
    pub psid_l: EdgeWavelet,
    pub psi_r: EdgeWavelet,
    pub psid_r: EdgeWavelet,
    pub refl_phi: Reflection,
    pub refl_psi: Reflection,
    pub refl_phid: Reflection,
    pub refl_psid: Reflection,
    /// Minimal admissible coarse levels (primal, dual).
    pub j0: u32,
    pub j0_dual: u32,
}

impl Boundary {
    pub fn new(spec: IntervalSpec) -> Result<Self> {
        let bank = spec.bank.clone();
        let dual = bank.dual()?.clone();
        let refl_phi = mask_reflection(&bank.primal.a)
            .ok_or_else(|| Error::Construction("mask has no mirror symmetry".into()))?;
        let refl_psi = wavelet_reflection(&bank.primal.b, &refl_phi)
            .ok_or_else(|| Error::Construction("wavelet mask has no mirror symmetry".into()))?;
        let refl_phid = mask_reflection(&dual.a)
            .ok_or_else(|| Error::Construction("dual mask has no mirror symmetry".into()))?;
        let refl_psid = wavelet_reflection(&dual.b, &refl_phid)
            .ok_or_else(|| Error::Construction("dual wavelet mask has no mirror symmetry".into()))?;

        let phi = primal_edge(&bank.primal.a, spec.n_phi, &spec.exponents)?;
        let phid = dual_edge(&bank, &phi, spec.n_phi_dual, &spec.exponents_dual)?;
        let psi_l = wavelet_edge(&bank, &phi, &phid, spec.n_psi, spec.left_rows.clone())?;
        let psid_l = dual_wavelet_edge(&bank, &phi, &phid, &psi_l, spec.n_psi_dual)?;
        let psi_r = wavelet_edge(&bank, &phi, &phid, spec.n_psi, spec.right_rows.clone())?;
        let psid_r = dual_wavelet_edge(&bank, &phi, &phid, &psi_r, spec.n_psi_dual)?;

        let mut bd = Boundary {
            spec,
            phi,
            phid,
            psi_l,
            psid_l,
            psi_r,
            psid_r,
            refl_phi,
            refl_psi,
            refl_phid,
            refl_psid,
            j0: 0,
            j0_dual: 0,
        };
        let (j0, j0d) = bd.minimal_levels()?;
        bd.j0 = j0;
        bd.j0_dual = j0d;
        Ok(bd)
    }

    fn supp(&self, dual: bool) -> (i64, i64) {
        let pair = if dual {
            self.spec.bank.dual().expect("dual checked at construction")
        } else {
            &self.spec.bank.primal
        };
        support(&pair.a)
    }

    /// Furthest point (in level-`j` shift units) any left-edge scaling
    /// function reaches into the interval.
    fn edge_reach(&self, dual: bool) -> i64 {
        let (edge, h) = if dual {
            (&self.phid.edge, self.supp(true).1)
        } else {
            (&self.phi, self.supp(false).1)
        };
        edge.cut.iter().copied().max().unwrap_or(0) + h
    }

    /// Furthest reach of a left-edge wavelet in fine (level `j+1`) units.
    fn wavelet_reach(&self, dual: bool) -> i64 {
        let (w, h) = if dual {
            (&self.psid_l, self.supp(true).1)
        } else {
            (&self.psi_l, self.supp(false).1)
        };
        let tail = w.b_k.iter().map(|(k, _)| *k).max().unwrap_or(w.fine_lo);
        (tail + h).max(self.edge_reach(dual))
    }

    fn minimal_levels(&self) -> Result<(u32, u32)> {
        let mut j0 = None;
        for j in 0..=16u32 {
            let cells = 1i64 << j;
            if self.edge_reach(false) >= cells || self.wavelet_reach(false) >= 2 * cells {
                continue;
            }
            let (phi_j, psi_j, phi_fine) =
                (self.scaling(j)?, self.wavelets(j)?, self.scaling(j + 1)?);
            if phi_j.len() + psi_j.len() == phi_fine.len() {
                j0 = Some(j);
                break;
            }
        }
        let j0 = j0.ok_or_else(|| Error::Construction("no admissible coarse level".into()))?;
        // The dual system additionally needs every cross-endpoint pairing to
        // vanish: left (dual) reach plus right (primal) reach may not exceed
        // the number of cells, measured at the common fine level (where a
        // coarse scaling function's reach doubles).
        let prim = (2 * self.edge_reach(false)).max(self.wavelet_reach(false));
        let dua = (2 * self.edge_reach(true)).max(self.wavelet_reach(true));
        let mut j0d = j0;
        loop {
            let fine_cells = 2i64 << j0d;
            let sizes_ok = self.scaling_dual(j0d)?.len() == self.scaling(j0d)?.len()
                && self.wavelets_dual(j0d)?.len() == self.wavelets(j0d)?.len();
            if self.edge_reach(true) < (1i64 << j0d) && prim + dua <= fine_cells && sizes_ok {
                break;
            }
            j0d += 1;
            if j0d > 20 {
                return Err(Error::Construction("no admissible dual coarse level".into()));
            }
        }
        Ok((j0, j0d))
    }

    pub fn scaling(&self, j: u32) -> Result<Vec<Element>> {
        scaling_level(&self.phi, &self.refl_phi, self.spec.n_phi, j)
    }

    pub fn scaling_dual(&self, j: u32) -> Result<Vec<Element>> {
        scaling_level(&self.phid.edge, &self.refl_phid, self.spec.n_phi_dual, j)
    }

    pub fn wavelets(&self, j: u32) -> Result<Vec<Element>> {
        wavelet_level(
            &self.phi,
            &self.psi_l,
            &self.psi_r,
            &self.spec.bank.primal.b,
            &self.refl_phi,
            &self.refl_psi,
            self.spec.n_psi,
            j,
        )
    }

    pub fn wavelets_dual(&self, j: u32) -> Result<Vec<Element>> {
        wavelet_level(
            &self.phid.edge,
            &self.psid_l,
            &self.psid_r,
            &self.spec.bank.dual()?.b,
            &self.refl_phid,
            &self.refl_psid,
            self.spec.n_psi_dual,
            j,
        )
    }

    /// Two-scale matrices between levels `j` and `j+1`. Below the dual
    /// minimal level the dual pair is obtained by inverting the primal
    /// square matrix instead of from the dual boundary construction.
    pub fn level_map(&self, j: u32) -> Result<LevelMap> {
        let fine = self.scaling(j + 1)?;
        let index = LevelIndex::new(&fine);
        let coarse = self.scaling(j)?;
        let wav = self.wavelets(j)?;

        let r = scaling_rows(self, j, &coarse, &index, false)?;
        let w = wavelet_rows(self, j, &wav, &index, false)?;

        let (rd, wd) = if j >= self.j0_dual {
            let dual_fine = self.scaling_dual(j + 1)?;
            let dual_index = LevelIndex::new(&dual_fine);
            let dual_coarse = self.scaling_dual(j)?;
            let dual_wav = self.wavelets_dual(j)?;
            if dual_coarse.len() != coarse.len()
                || dual_wav.len() != wav.len()
                || dual_fine.len() != fine.len()
            {
                return Err(Error::Construction(
                    "dual level sizes do not match primal sizes".into(),
                ));
            }
            (
                scaling_rows(self, j, &dual_coarse, &dual_index, true)?,
                wavelet_rows(self, j, &dual_wav, &dual_index, true)?,
            )
        } else {
            // [R̃; W̃] = [2Rᵀ | 2Wᵀ]⁻¹ splits into the two dual maps.
            let nc = coarse.len();
            let mut stacked = QMat::zeros(fine.len(), fine.len());
            let mut fill = |tri: &[(usize, usize, Q)], off: usize| {
                for (row, col, v) in tri {
                    stacked[(*col, off + *row)] = v.clone() * qi(2);
                }
            };
            fill(&r, 0);
            fill(&w, nc);
            let inv = stacked
                .inverse()
                .ok_or_else(|| Error::Construction("two-scale matrix is singular".into()))?;
            let mut rd = Vec::new();
            let mut wd = Vec::new();
            for i in 0..fine.len() {
                for jj in 0..fine.len() {
                    let v = inv[(i, jj)].clone();
                    if v.is_zero() {
                        continue;
                    }
                    if i < nc {
                        rd.push((i, jj, v));
                    } else {
                        wd.push((i - nc, jj, v));
                    }
                }
            }
            (rd, wd)
        };

        Ok(LevelMap {
            j,
            n_coarse: coarse.len(),
            n_fine: fine.len(),
            n_wav: wav.len(),
            r,
            w,
            rd,
            wd,
        })
    }

    /// Truncated multiscale basis `Φ_J ∪ {Ψ_j : J ≤ j < N}` with its maps.
    pub fn multiscale(&self, j_coarse: u32, n: u32) -> Result<Multiscale> {
        if j_coarse < self.j0 {
            return Err(Error::Construction(format!(
                "coarse level {j_coarse} below minimum {}",
                self.j0
            )));
        }
        if n <= j_coarse {
            return Err(Error::Construction("finest level must exceed coarse".into()));
        }
        let phi = self.scaling(j_coarse)?;
        let mut psi = Vec::new();
        let mut maps = Vec::new();
        for j in j_coarse..n {
            psi.push(self.wavelets(j)?);
            maps.push(self.level_map(j)?);
        }
        let fine = self.scaling(n)?;
        Ok(Multiscale {
            j0: j_coarse,
            n,
            phi,
            psi,
            fine,
            maps,
        })
    }
}

/// One term `coeff · φ_comp(2^level x − shift)` of an element expansion
/// (restriction to `[0,1]` implied; the level lives on the element).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub shift: i64,
    pub comp: usize,
    pub coeff: Q,
}

/// Where an element sits within its level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    Left(usize),
    Interior(i64, usize),
    Right(usize),
}

/// A basis element on `[0,1]`: a rational combination of (possibly
/// truncated) generator shifts at one dilation level.
#[derive(Clone, Debug)]
pub struct Element {
    pub place: Place,
    /// Scale the element logically belongs to.
    pub scale: u32,
    /// Dilation level of the atoms: `scale` for scaling functions,
    /// `scale + 1` for wavelets.
    pub atom_level: u32,
    pub wavelet: bool,
    pub atoms: Vec<Atom>,
}

fn canon(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.retain(|a| !a.coeff.is_zero());
    atoms.sort_by_key(|a| (a.shift, a.comp));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.shift == a.shift && last.comp == a.comp => {
                last.coeff = last.coeff.clone() + a.coeff;
            }
            _ => out.push(a),
        }
    }
    out.retain(|a| !a.coeff.is_zero());
    out
}

fn edge_atoms(edge: &EdgeScaling, i: usize) -> Vec<Atom> {
    let r = edge.r;
    let mut atoms = Vec::new();
    for (pos, &k) in edge.cut.iter().enumerate() {
        for comp in 0..r {
            atoms.push(Atom {
                shift: k,
                comp,
                coeff: edge.a_c[(i, pos * r + comp)].clone(),
            });
        }
    }
    canon(atoms)
}

fn reflect_atoms(atoms: &[Atom], level: u32, refl: &Reflection) -> Vec<Atom> {
    let cells = 1i64 << level;
    canon(
        atoms
            .iter()
            .map(|a| Atom {
                shift: cells - a.shift - refl.delta,
                comp: a.comp,
                coeff: a.coeff.clone() * qi(refl.signs[a.comp]),
            })
            .collect(),
    )
}

fn scaling_level(
    edge: &EdgeScaling,
    refl: &Reflection,
    n_int: i64,
    j: u32,
) -> Result<Vec<Element>> {
    let cells = 1i64 << j;
    let hi = cells - n_int - refl.delta;
    let r = edge.r;
    let mut elems: Vec<Element> = Vec::new();
    for i in 0..edge.count() {
        elems.push(Element {
            place: Place::Left(i),
            scale: j,
            atom_level: j,
            wavelet: false,
            atoms: edge_atoms(edge, i),
        });
    }
    for k in n_int..=hi {
        for comp in 0..r {
            elems.push(Element {
                place: Place::Interior(k, comp),
                scale: j,
                atom_level: j,
                wavelet: false,
                atoms: vec![Atom {
                    shift: k,
                    comp,
                    coeff: qi(1),
                }],
            });
        }
    }
    for i in 0..edge.count() {
        let atoms = reflect_atoms(&edge_atoms(edge, i), j, refl);
        if elems.iter().any(|e| e.atoms == atoms) {
            continue; // coincides with an existing element at a low level
        }
        elems.push(Element {
            place: Place::Right(i),
            scale: j,
            atom_level: j,
            wavelet: false,
            atoms,
        });
    }
    Ok(elems)
}

fn edge_wavelet_atoms(w: &EdgeWavelet, edge: &EdgeScaling, i: usize) -> Vec<Atom> {
    let r = w.r;
    let n_edge_cols = w.rows.ncols() - ((w.fine_hi - w.fine_lo + 1) as usize) * r;
    let mut atoms = Vec::new();
    for col in 0..n_edge_cols {
        let c = w.rows[(i, col)].clone();
        if c.is_zero() {
            continue;
        }
        for a in edge_atoms(edge, col) {
            atoms.push(Atom {
                shift: a.shift,
                comp: a.comp,
                coeff: a.coeff * c.clone(),
            });
        }
    }
    for k in w.fine_lo..=w.fine_hi {
        for comp in 0..r {
            let idx = n_edge_cols + ((k - w.fine_lo) as usize) * r + comp;
            atoms.push(Atom {
                shift: k,
                comp,
                coeff: w.rows[(i, idx)].clone(),
            });
        }
    }
    canon(atoms)
}

#[allow(clippy::too_many_arguments)]
fn wavelet_level(
    edge: &EdgeScaling,
    wl: &EdgeWavelet,
    wr: &EdgeWavelet,
    b: &Filter,
    refl_phi: &Reflection,
    refl_psi: &Reflection,
    n_psi: i64,
    j: u32,
) -> Result<Vec<Element>> {
    let cells = 1i64 << j;
    let hi = cells - n_psi - refl_psi.delta;
    let r = b.rows();
    let mut elems = Vec::new();
    for i in 0..wl.rows.nrows() {
        elems.push(Element {
            place: Place::Left(i),
            scale: j,
            atom_level: j + 1,
            wavelet: true,
            atoms: edge_wavelet_atoms(wl, edge, i),
        });
    }
    for k in n_psi..=hi {
        for comp in 0..r {
            let mut atoms = Vec::new();
            for (m, tap) in b.iter() {
                for cp in 0..b.cols() {
                    atoms.push(Atom {
                        shift: m + 2 * k,
                        comp: cp,
                        coeff: tap[(comp, cp)].clone() * qi(2),
                    });
                }
            }
            elems.push(Element {
                place: Place::Interior(k, comp),
                scale: j,
                atom_level: j + 1,
                wavelet: true,
                atoms: canon(atoms),
            });
        }
    }
    for i in 0..wr.rows.nrows() {
        let atoms = reflect_atoms(&edge_wavelet_atoms(wr, edge, i), j + 1, refl_phi);
        if elems.iter().any(|e| e.atoms == atoms) {
            continue;
        }
        elems.push(Element {
            place: Place::Right(i),
            scale: j,
            atom_level: j + 1,
            wavelet: true,
            atoms,
        });
    }
    Ok(elems)
}

/// Index lookup from `Place` to position within a level's element list.
struct LevelIndex {
    map: HashMap<Place, usize>,
}

impl LevelIndex {
    fn new(elems: &[Element]) -> Self {
        let mut map = HashMap::new();
        for (i, e) in elems.iter().enumerate() {
            map.insert(e.place, i);
        }
        LevelIndex { map }
    }

    fn get(&self, p: Place) -> Result<usize> {
        self.map
            .get(&p)
            .copied()
            .ok_or_else(|| Error::Construction(format!("missing fine element {p:?}")))
    }
}

/// Rows of `R_j` (`Φ_j = 2 R_j Φ_{j+1}`) as sparse triplets.
fn scaling_rows(
    bd: &Boundary,
    j: u32,
    coarse: &[Element],
    fine: &LevelIndex,
    dual: bool,
) -> Result<Vec<(usize, usize, Q)>> {
    let (edge, refl, mask) = if dual {
        (&bd.phid.edge, &bd.refl_phid, &bd.spec.bank.dual()?.a)
    } else {
        (&bd.phi, &bd.refl_phi, &bd.spec.bank.primal.a)
    };
    let fine_cells = 2i64 << j;
    let mut tri = Vec::new();
    for (row, e) in coarse.iter().enumerate() {
        match e.place {
            Place::Left(i) => {
                for ip in 0..edge.count() {
                    push_q(&mut tri, row, fine.get(Place::Left(ip))?, &edge.a_l[(i, ip)]);
                }
                for (m, blk) in &edge.a_k {
                    for comp in 0..edge.r {
                        push_q(
                            &mut tri,
                            row,
                            fine.get(Place::Interior(*m, comp))?,
                            &blk[(i, comp)],
                        );
                    }
                }
            }
            Place::Interior(k, comp) => {
                for (m, tap) in mask.iter() {
                    for cp in 0..mask.cols() {
                        push_q(
                            &mut tri,
                            row,
                            fine.get(Place::Interior(m + 2 * k, cp))?,
                            &tap[(comp, cp)],
                        );
                    }
                }
            }
            Place::Right(i) => {
                for ip in 0..edge.count() {
                    push_q(&mut tri, row, fine.get(Place::Right(ip))?, &edge.a_l[(i, ip)]);
                }
                for (m, blk) in &edge.a_k {
                    for comp in 0..edge.r {
                        let v = blk[(i, comp)].clone() * qi(refl.signs[comp]);
                        let shift = fine_cells - *m - refl.delta;
                        push_q(&mut tri, row, fine.get(Place::Interior(shift, comp))?, &v);
                    }
                }
            }
        }
    }
    Ok(tri)
}

/// Rows of `W_j` (`Ψ_j = 2 W_j Φ_{j+1}`) as sparse triplets.
fn wavelet_rows(
    bd: &Boundary,
    j: u32,
    wav: &[Element],
    fine: &LevelIndex,
    dual: bool,
) -> Result<Vec<(usize, usize, Q)>> {
    let (edge, wl, wr, refl, mask) = if dual {
        (
            &bd.phid.edge,
            &bd.psid_l,
            &bd.psid_r,
            &bd.refl_phid,
            &bd.spec.bank.dual()?.b,
        )
    } else {
        (
            &bd.phi,
            &bd.psi_l,
            &bd.psi_r,
            &bd.refl_phi,
            &bd.spec.bank.primal.b,
        )
    };
    let fine_cells = 2i64 << j;
    let mut tri = Vec::new();
    for (row, e) in wav.iter().enumerate() {
        match e.place {
            Place::Left(i) => {
                for ip in 0..edge.count() {
                    push_q(&mut tri, row, fine.get(Place::Left(ip))?, &wl.b_l[(i, ip)]);
                }
                for (m, blk) in &wl.b_k {
                    for comp in 0..edge.r {
                        push_q(
                            &mut tri,
                            row,
                            fine.get(Place::Interior(*m, comp))?,
                            &blk[(i, comp)],
                        );
                    }
                }
            }
            Place::Interior(k, comp) => {
                for (m, tap) in mask.iter() {
                    for cp in 0..mask.cols() {
                        push_q(
                            &mut tri,
                            row,
                            fine.get(Place::Interior(m + 2 * k, cp))?,
                            &tap[(comp, cp)],
                        );
                    }
                }
            }
            Place::Right(i) => {
                for ip in 0..edge.count() {
                    push_q(&mut tri, row, fine.get(Place::Right(ip))?, &wr.b_l[(i, ip)]);
                }
                for (m, blk) in &wr.b_k {
                    for comp in 0..edge.r {
                        let v = blk[(i, comp)].clone() * qi(refl.signs[comp]);
                        let shift = fine_cells - *m - refl.delta;
                        push_q(&mut tri, row, fine.get(Place::Interior(shift, comp))?, &v);
                    }
                }
            }
        }
    }
    Ok(tri)
}

fn push_q(tri: &mut Vec<(usize, usize, Q)>, row: usize, col: usize, v: &Q) {
    if !v.is_zero() {
        tri.push((row, col, v.clone()));
    }
}

/// Two-scale matrices between consecutive levels: `Φ_j = 2 R Φ_{j+1}`,
/// `Ψ_j = 2 W Φ_{j+1}`, and the dual pair satisfying
/// `2 [R̃; W̃] [Rᵀ Wᵀ] = I`.
#[derive(Clone, Debug)]
pub struct LevelMap {
    pub j: u32,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub n_wav: usize,
    pub r: Vec<(usize, usize, Q)>,
    pub w: Vec<(usize, usize, Q)>,
    pub rd: Vec<(usize, usize, Q)>,
    pub wd: Vec<(usize, usize, Q)>,
}

fn densify(tri: &[(usize, usize, Q)], rows: usize, cols: usize) -> QMat {
    let mut m = QMat::zeros(rows, cols);
    for (i, j, v) in tri {
        m[(*i, *j)] = v.clone();
    }
    m
}

impl LevelMap {
    pub fn r_mat(&self) -> QMat {
        densify(&self.r, self.n_coarse, self.n_fine)
    }
    pub fn w_mat(&self) -> QMat {
        densify(&self.w, self.n_wav, self.n_fine)
    }
    pub fn rd_mat(&self) -> QMat {
        densify(&self.rd, self.n_coarse, self.n_fine)
    }
    pub fn wd_mat(&self) -> QMat {
        densify(&self.wd, self.n_wav, self.n_fine)
    }
}

/// A truncated multiscale basis `Φ_{J} ∪ Ψ_J ∪ … ∪ Ψ_{N−1}` with the level
/// maps needed for its transforms.
pub struct Multiscale {
    pub j0: u32,
    pub n: u32,
    pub phi: Vec<Element>,
    pub psi: Vec<Vec<Element>>,
    pub fine: Vec<Element>,
    pub maps: Vec<LevelMap>,
}

impl Multiscale {
    pub fn size(&self) -> usize {
        self.phi.len() + self.psi.iter().map(|p| p.len()).sum::<usize>()
    }

    pub fn fine_size(&self) -> usize {
        self.fine.len()
    }

    /// Multiscale elements in enumeration order (coarse scaling functions,
    /// then wavelet levels from coarse to fine).
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.phi.iter().chain(self.psi.iter().flatten())
    }

    /// Splits a multiscale coefficient slice into (scaling, per-level wavelet)
    /// segments.
    fn split<'a, T>(&self, coeffs: &'a [T]) -> Result<(&'a [T], Vec<&'a [T]>)> {
        if coeffs.len() != self.size() {
            return Err(Error::InvalidInput("multiscale coefficient length".into()));
        }
        let (c, mut rest) = coeffs.split_at(self.phi.len());
        let mut ds = Vec::new();
        for p in &self.psi {
            let (d, r) = rest.split_at(p.len());
            ds.push(d);
            rest = r;
        }
        Ok((c, ds))
    }

    /// Multiscale coefficients → single-scale coefficients at the finest
    /// level: repeated `c_{j+1} = 2(R_jᵀ c_j + W_jᵀ d_j)`.
    pub fn synthesize<T: Real>(&self, coeffs: &[T]) -> Result<Vec<T>> {
        let (c0, ds) = self.split(coeffs)?;
        let mut c = c0.to_vec();
        for (map, d) in self.maps.iter().zip(ds) {
            let mut fine = vec![T::zero(); map.n_fine];
            let two = T::from_i64(2);
            for (row, col, v) in &map.r {
                fine[*col] = fine[*col].clone() + two.clone() * T::from_q(v) * c[*row].clone();
            }
            for (row, col, v) in &map.w {
                fine[*col] = fine[*col].clone() + two.clone() * T::from_q(v) * d[*row].clone();
            }
            c = fine;
        }
        Ok(c)
    }

    /// Single-scale coefficients at the finest level → multiscale:
    /// `c_j = R̃_j c_{j+1}`, `d_j = W̃_j c_{j+1}`.
    pub fn analyze<T: Real>(&self, fine: &[T]) -> Result<Vec<T>> {
        if fine.len() != self.fine.len() {
            return Err(Error::InvalidInput("single-scale coefficient length".into()));
        }
        let mut c = fine.to_vec();
        let mut levels = Vec::new();
        for map in self.maps.iter().rev() {
            let mut coarse = vec![T::zero(); map.n_coarse];
            let mut d = vec![T::zero(); map.n_wav];
            for (row, col, v) in &map.rd {
                coarse[*row] = coarse[*row].clone() + T::from_q(v) * c[*col].clone();
            }
            for (row, col, v) in &map.wd {
                d[*row] = d[*row].clone() + T::from_q(v) * c[*col].clone();
            }
            levels.push(d);
            c = coarse;
        }
        let mut out = c;
        for d in levels.into_iter().rev() {
            out.extend(d);
        }
        Ok(out)
    }

    /// Transforms for the dual basis: synthesis uses the dual maps,
    /// analysis the primal ones.
    pub fn synthesize_dual<T: Real>(&self, coeffs: &[T]) -> Result<Vec<T>> {
        let (c0, ds) = self.split(coeffs)?;
        let mut c = c0.to_vec();
        for (map, d) in self.maps.iter().zip(ds) {
            let mut fine = vec![T::zero(); map.n_fine];
            let two = T::from_i64(2);
            for (row, col, v) in &map.rd {
                fine[*col] = fine[*col].clone() + two.clone() * T::from_q(v) * c[*row].clone();
            }
            for (row, col, v) in &map.wd {
                fine[*col] = fine[*col].clone() + two.clone() * T::from_q(v) * d[*row].clone();
            }
            c = fine;
        }
        Ok(c)
    }

    pub fn analyze_dual<T: Real>(&self, fine: &[T]) -> Result<Vec<T>> {
        if fine.len() != self.fine.len() {
            return Err(Error::InvalidInput("single-scale coefficient length".into()));
        }
        let mut c = fine.to_vec();
        let mut levels = Vec::new();
        for map in self.maps.iter().rev() {
            let mut coarse = vec![T::zero(); map.n_coarse];
            let mut d = vec![T::zero(); map.n_wav];
            for (row, col, v) in &map.r {
                coarse[*row] = coarse[*row].clone() + T::from_q(v) * c[*col].clone();
            }
            for (row, col, v) in &map.w {
                d[*row] = d[*row].clone() + T::from_q(v) * c[*col].clone();
            }
            levels.push(d);
            c = coarse;
        }
        let mut out = c;
        for d in levels.into_iter().rev() {
            out.extend(d);
        }
        Ok(out)
    }

    /// Exact synthesis matrix `T` with `elements = T · Φ_N` row-wise, i.e.
    /// the expansion of every multiscale element in the finest scaling basis.
    pub fn synthesis_matrix(&self) -> QMat {
        self.synthesis_matrix_from(|m| (m.r_mat(), m.w_mat()))
    }

    /// Dual counterpart of [`Multiscale::synthesis_matrix`].
    pub fn synthesis_matrix_dual(&self) -> QMat {
        self.synthesis_matrix_from(|m| (m.rd_mat(), m.wd_mat()))
    }

    fn synthesis_matrix_from(&self, pick: impl Fn(&LevelMap) -> (QMat, QMat)) -> QMat {
        let two = qi(2);
        let mut blocks: Vec<QMat> = Vec::new();
        let mut scaling = QMat::identity(self.phi.len());
        for map in &self.maps {
            let (r, w) = pick(map);
            scaling = scaling.matmul(&r).scale(&two);
            for b in blocks.iter_mut() {
                *b = b.matmul(&r).scale(&two);
            }
            blocks.push(w.scale(&two));
        }
        let mut t = scaling;
        for b in blocks {
            t = t.vstack(&b);
        }
        t
    }
}

/// Exact interval Gram `⟨rows_i^{(m̃)}, cols_j^{(m)}⟩` over `[0,1]` for two
/// element lists living at a common atom level; `tab` must be the unit-cell
/// table of the matching generator pair and derivative orders.
pub fn interval_gram(
    tab: &CellGram,
    rows: &[Element],
    cols: &[Element],
    m_dual: usize,
    m_primal: usize,
) -> Result<QMat> {
    let level = match (rows.first(), cols.first()) {
        (Some(a), Some(b)) => {
            if a.atom_level != b.atom_level {
                return Err(Error::InvalidInput("mismatched atom levels".into()));
            }
            a.atom_level
        }
        _ => return Ok(QMat::zeros(rows.len(), cols.len())),
    };
    if rows.iter().any(|e| e.atom_level != level) || cols.iter().any(|e| e.atom_level != level) {
        return Err(Error::InvalidInput("mismatched atom levels".into()));
    }
    let cells = 1i64 << level;
    let factor = pow2(level as i64 * (m_dual as i64 + m_primal as i64) - level as i64);
    let mut g = QMat::zeros(rows.len(), cols.len());
    let mut cache: HashMap<(i64, i64), QMat> = HashMap::new();
    for (i, er) in rows.iter().enumerate() {
        for (j, ec) in cols.iter().enumerate() {
            let mut acc = Q::zero();
            for ar in &er.atoms {
                for ac in &ec.atoms {
                    let w = cache
                        .entry((ar.shift, ac.shift))
                        .or_insert_with(|| tab.window(ar.shift, ac.shift, cells));
                    let v = &w[(ar.comp, ac.comp)];
                    if !v.is_zero() {
                        acc += ar.coeff.clone() * ac.coeff.clone() * v.clone();
                    }
                }
            }
            g[(i, j)] = acc * factor.clone();
        }
    }
    Ok(g)
}
#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rat::q;
    use crate::refinable::{cell_gram, cell_poly_moments, eval_dyadic, halfline_poly_moment};

    fn hat_boundary() -> Boundary {
        Boundary::new(fixtures::cdf22()).unwrap()
    }

    #[test]
    fn mask_symmetry_detection() {
        let spec = fixtures::cdf22();
        let refl = mask_reflection(&spec.bank.primal.a).unwrap();
        assert_eq!(refl, Reflection { delta: 0, signs: vec![1] });
        let wref = wavelet_reflection(&spec.bank.primal.b, &refl).unwrap();
        assert_eq!(wref.delta, 1);

        let hermite = fixtures::hermite_cubic();
        let hrefl = mask_reflection(&hermite).unwrap();
        assert_eq!(hrefl, Reflection { delta: 0, signs: vec![1, -1] });

        let haar = fixtures::haar();
        let haar_refl = mask_reflection(&haar.primal.a).unwrap();
        assert_eq!(haar_refl.delta, 1);
        let haar_wref = wavelet_reflection(&haar.primal.b, &haar_refl).unwrap();
        assert_eq!(haar_wref, Reflection { delta: 1, signs: vec![-1] });
    }

    #[test]
    fn minimal_levels_for_hat_basis() {
        let bd = hat_boundary();
        assert_eq!((bd.j0, bd.j0_dual), (2, 3));
    }

    #[test]
    fn level_sizes() {
        let bd = hat_boundary();
        assert_eq!(bd.scaling(2).unwrap().len(), 3);
        for j in 2..=6u32 {
            assert_eq!(bd.scaling(j).unwrap().len(), (1 << j) - 1);
            assert_eq!(bd.wavelets(j).unwrap().len(), 1 << j);
        }
        let ms = bd.multiscale(3, 6).unwrap();
        assert_eq!(ms.size(), 63);
        assert_eq!(ms.fine_size(), 63);
    }

    #[test]
    fn two_scale_identity_exact() {
        let bd = hat_boundary();
        // j = 2 exercises the inversion fallback (below the dual minimal
        // level), j = 3 the structural dual construction.
        for j in [2u32, 3] {
            let map = bd.level_map(j).unwrap();
            let stacked = map.r_mat().vstack(&map.w_mat());
            let dual = map.rd_mat().vstack(&map.wd_mat());
            let prod = dual.matmul(&stacked.transpose().scale(&qi(2)));
            assert_eq!(prod, QMat::identity(map.n_fine), "level {j}");
        }
    }

    #[test]
    fn fine_gram_is_biorthogonal() {
        let bd = hat_boundary();
        let bank = &bd.spec.bank;
        let tab = cell_gram(&bank.dual().unwrap().a, &bank.primal.a, 0, 0).unwrap();
        let rows = bd.scaling_dual(4).unwrap();
        let cols = bd.scaling(4).unwrap();
        let g = interval_gram(&tab, &rows, &cols, 0, 0).unwrap();
        assert_eq!(g, QMat::identity(15).scale(&pow2(-4)));
    }

    #[test]
    fn multiscale_gram_is_diagonal() {
        let bd = hat_boundary();
        let bank = &bd.spec.bank;
        let ms = bd.multiscale(3, 6).unwrap();
        let tab = cell_gram(&bank.dual().unwrap().a, &bank.primal.a, 0, 0).unwrap();
        let g = interval_gram(
            &tab,
            &bd.scaling_dual(6).unwrap(),
            &ms.fine,
            0,
            0,
        )
        .unwrap();
        let cross = ms.synthesis_matrix_dual().matmul(&g).matmul(&ms.synthesis_matrix().transpose());
        let scales: Vec<i64> = ms.elements().map(|e| e.scale as i64).collect();
        let want = QMat::from_fn(ms.size(), ms.size(), |i, j| {
            if i == j {
                pow2(-scales[i])
            } else {
                Q::zero()
            }
        });
        assert_eq!(cross, want);
    }

    #[test]
    fn elements_vanish_at_endpoints() {
        let bd = hat_boundary();
        let vals = eval_dyadic(&bd.spec.bank.primal.a, 0).unwrap();
        let at = |m: i64, comp: usize| -> Q {
            vals.iter()
                .find(|(x, _)| *x == qi(m))
                .map(|(_, v)| v[comp].clone())
                .unwrap_or_else(Q::zero)
        };
        for j in [2u32, 3, 4] {
            let mut elems = bd.scaling(j).unwrap();
            elems.extend(bd.wavelets(j).unwrap());
            for e in &elems {
                let cells = 1i64 << e.atom_level;
                let mut left = Q::zero();
                let mut right = Q::zero();
                for a in &e.atoms {
                    left += a.coeff.clone() * at(-a.shift, a.comp);
                    right += a.coeff.clone() * at(cells - a.shift, a.comp);
                }
                assert!(left.is_zero() && right.is_zero(), "{:?} at level {j}", e.place);
            }
        }
    }

    #[test]
    fn boundary_wavelets_annihilate_linears() {
        let bd = hat_boundary();
        let a = &bd.spec.bank.primal.a;
        let ps = cell_poly_moments(a, 1).unwrap();
        for e in bd.wavelets(4).unwrap() {
            if !e.wavelet {
                continue;
            }
            for t in 0..=1usize {
                let mut total = Q::zero();
                for atom in &e.atoms {
                    let m = halfline_poly_moment(a, &ps, t, atom.shift);
                    total += atom.coeff.clone() * m[atom.comp].clone();
                }
                assert!(total.is_zero(), "moment {t} of {:?}", e.place);
            }
        }
    }

    #[test]
    fn transform_round_trip() {
        let bd = hat_boundary();
        let ms = bd.multiscale(3, 6).unwrap();
        let coeffs: Vec<f64> = (0..ms.size()).map(|i| (0.7 * i as f64).sin()).collect();
        let fine = ms.synthesize(&coeffs).unwrap();
        let back = ms.analyze(&fine).unwrap();
        for (x, y) in coeffs.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
        let fine_d = ms.synthesize_dual(&coeffs).unwrap();
        let back_d = ms.analyze_dual(&fine_d).unwrap();
        for (x, y) in coeffs.iter().zip(&back_d) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_polynomial_has_no_dual_detail() {
        // The primal side vanishes at both endpoints, so it reproduces no
        // nonzero linear; the dual side reproduces {1, x}. Expanding x in
        // the dual basis (its coefficients pair against the primal shifts:
        // shift/2⁶ each) must leave every dual wavelet level empty.
        let bd = hat_boundary();
        let ms = bd.multiscale(3, 6).unwrap();
        let mut c = QMat::zeros(ms.fine_size(), 1);
        for (i, e) in ms.fine.iter().enumerate() {
            assert_eq!(e.atoms.len(), 1);
            c[(i, 0)] = q(e.atoms[0].shift, 64);
        }
        for map in ms.maps.iter().rev() {
            let d = map.w_mat().matmul(&c);
            assert!(d.is_zero(), "dual detail at level {}", map.j);
            c = map.r_mat().matmul(&c);
        }
        for (i, e) in bd.scaling(3).unwrap().iter().enumerate() {
            assert_eq!(c[(i, 0)], q(e.atoms[0].shift, 8));
        }
    }
}
