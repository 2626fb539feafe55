//! Dense complex linear algebra for the model-problem systems.
//!
//! The Galerkin matrices assembled here are small (at most a few thousand
//! unknowns) and are often built in software extended precision, so a
//! self-contained partial-pivoting LU over [`Cx<R>`] keeps a single code
//! path for every scalar type. Spectral-norm condition numbers reduce to
//! extremal eigenvalues of `AᴴA`, which is Hermitian and therefore embeds
//! as the real symmetric matrix `[[Re, −Im], [Im, Re]]` (each eigenvalue
//! doubled); that reuses the existing symmetric eigensolver instead of
//! pulling in a complex SVD.

use crate::eigen::dense_extremes;
use crate::scalar::{Cx, Real};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Dense complex matrix in row-major storage.
#[derive(Clone, Debug)]
pub struct CxMat<R> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Cx<R>>,
}

impl<R: Real> CxMat<R> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CxMat { n_rows, n_cols, data: vec![Cx::zero(); n_rows * n_cols] }
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> Cx<R>) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                data.push(f(i, j));
            }
        }
        CxMat { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn mul_vec(&self, x: &[Cx<R>]) -> Vec<Cx<R>> {
        assert_eq!(x.len(), self.n_cols);
        let mut out = vec![Cx::zero(); self.n_rows];
        for i in 0..self.n_rows {
            let row = &self.data[i * self.n_cols..(i + 1) * self.n_cols];
            let mut acc = Cx::zero();
            for (a, xi) in row.iter().zip(x) {
                acc = acc + a.clone() * xi.clone();
            }
            out[i] = acc;
        }
        out
    }

    /// Submatrix by half-open row/column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CxMat<R> {
        CxMat::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows.start + i, cols.start + j)].clone()
        })
    }

    pub fn matmul(&self, rhs: &CxMat<R>) -> CxMat<R> {
        assert_eq!(self.n_cols, rhs.n_rows);
        let mut out = CxMat::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for l in 0..self.n_cols {
                let a = self[(i, l)].clone();
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * rhs[(l, j)].clone();
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &CxMat<R>) -> CxMat<R> {
        assert_eq!((self.n_rows, self.n_cols), (rhs.n_rows, rhs.n_cols));
        CxMat::from_fn(self.n_rows, self.n_cols, |i, j| {
            self[(i, j)].clone() - rhs[(i, j)].clone()
        })
    }

    pub fn to_f64(&self) -> CxMat<f64> {
        CxMat {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            data: self
                .data
                .iter()
                .map(|z| Cx::new(z.re.to_f64(), z.im.to_f64()))
                .collect(),
        }
    }
}

impl<R> std::ops::Index<(usize, usize)> for CxMat<R> {
    type Output = Cx<R>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<R> {
        &self.data[i * self.n_cols + j]
    }
}

impl<R> std::ops::IndexMut<(usize, usize)> for CxMat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<R> {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Solves `A X = B` for several right-hand sides by LU with partial
/// pivoting on the squared magnitude.
pub fn solve_columns<R: Real>(a: &CxMat<R>, rhs: &CxMat<R>) -> Result<CxMat<R>> {
    let n = a.n_rows();
    if a.n_cols() != n || rhs.n_rows() != n {
        return Err(Error::InvalidInput("linear solve dimensions".into()));
    }
    let mut lu = a.clone();
    let mut x = rhs.clone();
    for col in 0..n {
        let mut piv = col;
        let mut best = lu[(col, col)].norm_sqr();
        for r in col + 1..n {
            let m = lu[(r, col)].norm_sqr();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best == R::zero() || !best.is_finite() {
            return Err(Error::Singular(format!("pivot {col} vanished")));
        }
        if piv != col {
            for j in 0..n {
                let t = lu[(col, j)].clone();
                lu[(col, j)] = lu[(piv, j)].clone();
                lu[(piv, j)] = t;
            }
            for j in 0..x.n_cols() {
                let t = x[(col, j)].clone();
                x[(col, j)] = x[(piv, j)].clone();
                x[(piv, j)] = t;
            }
        }
        let d = lu[(col, col)].clone();
        for r in col + 1..n {
            let factor = lu[(r, col)].clone() / d.clone();
            if factor.is_zero() {
                continue;
            }
            for j in col + 1..n {
                lu[(r, j)] = lu[(r, j)].clone() - factor.clone() * lu[(col, j)].clone();
            }
            for j in 0..x.n_cols() {
                x[(r, j)] = x[(r, j)].clone() - factor.clone() * x[(col, j)].clone();
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[(col, col)].clone();
        for j in 0..x.n_cols() {
            let mut acc = x[(col, j)].clone();
            for l in col + 1..n {
                acc = acc - lu[(col, l)].clone() * x[(l, j)].clone();
            }
            x[(col, j)] = acc / d.clone();
        }
    }
    Ok(x)
}

pub fn solve<R: Real>(a: &CxMat<R>, b: &[Cx<R>]) -> Result<Vec<Cx<R>>> {
    let rhs = CxMat::from_fn(b.len(), 1, |i, _| b[i].clone());
    let x = solve_columns(a, &rhs)?;
    Ok((0..b.len()).map(|i| x[(i, 0)].clone()).collect())
}

pub fn cx_norm<R: Real>(v: &[Cx<R>]) -> R {
    let mut acc = R::zero();
    for z in v {
        acc = acc + z.norm_sqr();
    }
    acc.sqrt()
}

/// Real symmetric embedding of the Hermitian matrix `AᴴA`.
fn gram_embedding(a: &CxMat<f64>) -> DMatrix<f64> {
    let (m, n) = (a.n_rows(), a.n_cols());
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in i..n {
            let mut h = Cx::<f64>::zero();
            for l in 0..m {
                h = h + a[(l, i)].conj() * a[(l, j)].clone();
            }
            e[(i, j)] = h.re;
            e[(j, i)] = h.re;
            e[(i + n, j + n)] = h.re;
            e[(j + n, i + n)] = h.re;
            e[(i, j + n)] = -h.im;
            e[(j + n, i)] = -h.im;
            e[(j, i + n)] = h.im;
            e[(i + n, j)] = h.im;
        }
    }
    e
}

/// Spectral-norm condition number `σ_max/σ_min`; infinite when numerically
/// singular.
pub fn cond2(a: &CxMat<f64>) -> Result<f64> {
    let (lo, hi) = dense_extremes(&gram_embedding(a))?;
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((hi / lo).sqrt())
}

/// Rescales so every diagonal entry has modulus one: `D A D` with
/// `D_ii = |a_ii|^{-1/2}`.
pub fn unit_modulus_diagonal<R: Real>(a: &CxMat<R>) -> Result<CxMat<R>> {
    let n = a.n_rows();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let m = a[(i, i)].abs();
        if m == R::zero() {
            return Err(Error::Singular(format!("zero diagonal entry {i}")));
        }
        d.push(m.sqrt().recip());
    }
    Ok(CxMat::from_fn(n, n, |i, j| a[(i, j)].scale(&(d[i].clone() * d[j].clone()))))
}

/// Leading Schur complement `A₁ − A₂ A₄⁻¹ A₃` for a trailing block of size
/// `n2`.
pub fn leading_schur<R: Real>(a: &CxMat<R>, n2: usize) -> Result<CxMat<R>> {
    let n = a.n_rows();
    if n2 == 0 || n2 >= n {
        return Err(Error::InvalidInput("trailing block size".into()));
    }
    let n1 = n - n2;
    let a1 = a.block(0..n1, 0..n1);
    let a2 = a.block(0..n1, n1..n);
    let a3 = a.block(n1..n, 0..n1);
    let a4 = a.block(n1..n, n1..n);
    let x = solve_columns(&a4, &a3)?;
    Ok(a1.sub(&a2.matmul(&x)))
}
