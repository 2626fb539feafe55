//! Exact rational scalars and dense matrices.
//!
//! All boundary-construction algebra runs over `BigRational`, so results such
//! as refinement coefficient matrices are reproduced bit for bit rather than
//! to a floating tolerance.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

/// Rational from an integer pair; panics when `den == 0`.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(num: i64) -> Q {
    Q::from_integer(BigInt::from(num))
}

/// `2^e` as an exact rational, for any sign of `e`.
pub fn pow2(e: i64) -> Q {
    let mag = BigInt::from(2).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Q::from(mag)
    } else {
        Q::new(BigInt::from(1), mag)
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    // Scale the fraction so the i128 casts cannot truncate large operands.
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    let limit = BigInt::from(i128::MAX / 4);
    while num.abs() > limit || den.abs() > limit {
        num >>= 32;
        den >>= 32;
        if den.is_zero() {
            return if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
    }
    let n: i128 = num.try_into().unwrap_or(0);
    let d: i128 = den.try_into().unwrap_or(1);
    n as f64 / d as f64
}

/// Dense row-major matrix over `Q`.
#[derive(Clone, PartialEq, Eq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows.into_iter().flatten().collect();
        QMat { rows: 0, cols, data }.with_rows_fixed(cols)
    }

    fn with_rows_fixed(mut self, cols: usize) -> Self {
        self.rows = self.data.len() / cols;
        self
    }

    /// 1x1 matrix, occasionally convenient for scalar-valued products.
    pub fn scalar(x: Q) -> Self {
        QMat { rows: 1, cols: 1, data: vec![x] }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row(&self, i: usize) -> Vec<Q> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn push_row(&mut self, row: Vec<Q>) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols);
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> QMat {
        QMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        QMat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Q::zero();
            for k in 0..self.cols {
                if !self[(i, k)].is_zero() && !rhs[(k, j)].is_zero() {
                    acc += &self[(i, k)] * &rhs[(k, j)];
                }
            }
            acc
        })
    }

    pub fn add(&self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }

    pub fn scale(&self, s: &Q) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * s)
    }

    pub fn hstack(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.rows, rhs.rows);
        QMat::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols { self[(i, j)].clone() } else { rhs[(i, j - self.cols)].clone() }
        })
    }

    pub fn vstack(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.cols, rhs.cols);
        QMat::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows { self[(i, j)].clone() } else { rhs[(i - self.rows, j)].clone() }
        })
    }

    /// Kronecker product, row-major convention: `vec(A X Bᵀ) = (A ⊗ B) vec(X)`.
    pub fn kron(&self, rhs: &QMat) -> QMat {
        QMat::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            &self[(i / rhs.rows, j / rhs.cols)] * &rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    pub fn vec_rows(&self) -> Vec<Q> {
        self.data.clone()
    }

    /// Reduced row echelon form; returns the reduced matrix and pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else { continue };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in c..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in c..m.cols {
                        let v = &m[(i, j)] - &f * &m[(r, j)];
                        m[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Drops all-zero rows (useful after echelonizing constraint stacks).
    pub fn without_zero_rows(&self) -> QMat {
        let mut out = QMat { rows: 0, cols: self.cols, data: Vec::new() };
        for i in 0..self.rows {
            if !self.row(i).iter().all(|x| x.is_zero()) {
                out.push_row(self.row(i));
            }
        }
        out
    }

    /// Basis of the right kernel `{x : A x = 0}`, one vector per row.
    pub fn nullspace(&self) -> QMat {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = QMat { rows: 0, cols: self.cols, data: Vec::new() };
        for &f in &free {
            let mut v = vec![Q::zero(); self.cols];
            v[f] = Q::one();
            for (pi, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[(pi, f)].clone();
            }
            out.push_row(v);
        }
        if out.rows == 0 {
            out = QMat::zeros(0, self.cols);
        }
        out
    }

    /// A particular exact solution of `A x = b` with free variables set to
    /// zero; `None` only when the system is inconsistent.
    pub fn solve_any(&self, b: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, b.rows);
        let aug = self.hstack(b);
        let (r, pivots) = aug.rref();
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = QMat::zeros(self.cols, b.cols);
        for (pi, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(pc, j)] = r[(pi, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    /// Unique exact solution of `A x = b` (b, x matrices); `None` when the
    /// system is inconsistent or underdetermined.
    pub fn solve(&self, b: &QMat) -> Option<QMat> {
        assert_eq!(self.rows, b.rows);
        let aug = self.hstack(b);
        let (r, pivots) = aug.rref();
        // Any pivot falling in the augmented block marks inconsistency.
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        if pivots.len() < self.cols {
            return None;
        }
        let mut x = QMat::zeros(self.cols, b.cols);
        for (pi, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x[(pc, j)] = r[(pi, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        self.solve(&QMat::identity(self.rows))
    }

    pub fn det(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        let mut det = Q::one();
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                return Q::zero();
            };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            det *= &m[(c, c)];
            let inv = m[(c, c)].recip();
            for i in c + 1..m.rows {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = &m[(i, c)] * &inv;
                for j in c..m.cols {
                    let v = &m[(i, j)] - &f * &m[(c, j)];
                    m[(i, j)] = v;
                }
            }
        }
        det
    }

    /// Coefficients of `det(λI − A)`, ascending in λ (Faddeev–LeVerrier).
    pub fn char_poly(&self) -> Vec<Q> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut coeffs = vec![Q::zero(); n + 1];
        coeffs[n] = Q::one();
        let mut m = QMat::zeros(n, n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I, c_{n-k} = -tr(A M_k)/k
            let mut am = self.matmul(&m);
            for i in 0..n {
                let v = &am[(i, i)] + &coeffs[n - k + 1];
                am[(i, i)] = v;
            }
            m = am;
            let tr = self.matmul(&m).trace();
            coeffs[n - k] = -tr / qi(k as i64);
        }
        coeffs
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).sum()
    }

    /// Whether `v` lies in the row space.
    pub fn row_space_contains(&self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.cols);
        let rank = self.rank();
        let mut ext = self.clone();
        ext.push_row(v.to_vec());
        ext.rank() == rank
    }

    /// Coordinates of `v` in the rows of `self` (which must be independent).
    pub fn row_coordinates(&self, v: &[Q]) -> Option<Vec<Q>> {
        let vt = QMat { rows: v.len(), cols: 1, data: v.to_vec() };
        self.transpose().solve(&vt).map(|x| x.col(0))
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(&self[(i, j)]))
    }

    pub fn map(&self, f: impl Fn(&Q) -> Q) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| f(&self[(i, j)]))
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl std::fmt::Debug for QMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "QMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_rank() {
        let m = QMat::from_rows(vec![
            vec![qi(1), qi(2), qi(3)],
            vec![qi(2), qi(4), qi(6)],
            vec![qi(1), qi(0), qi(1)],
        ]);
        let (r, pivots) = m.rref();
        assert_eq!(pivots, vec![0, 1]);
        assert_eq!(m.rank(), 2);
        assert_eq!(r[(0, 0)], qi(1));
        assert_eq!(r[(0, 1)], qi(0));
    }

    #[test]
    fn solve_inverse_det() {
        let a = QMat::from_rows(vec![vec![qi(2), qi(1)], vec![qi(1), qi(1)]]);
        assert_eq!(a.det(), qi(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.matmul(&inv), QMat::identity(2));
        let b = QMat::from_rows(vec![vec![qi(3)], vec![qi(2)]]);
        let x = a.solve(&b).unwrap();
        assert_eq!(x.col(0), vec![qi(1), qi(1)]);
    }

    #[test]
    fn nullspace_is_kernel() {
        let a = QMat::from_rows(vec![vec![qi(1), qi(2), qi(3)], vec![qi(0), qi(1), qi(1)]]);
        let ns = a.nullspace();
        assert_eq!(ns.nrows(), 1);
        let prod = a.matmul(&ns.transpose());
        assert!(prod.is_zero());
    }

    #[test]
    fn kron_matches_vectorization() {
        // vec(A X Bᵀ) = (A ⊗ B) vec(X) in the row-major convention.
        let a = QMat::from_rows(vec![vec![qi(1), qi(2)], vec![qi(3), qi(4)]]);
        let b = QMat::from_rows(vec![vec![qi(0), qi(1)], vec![qi(1), qi(1)]]);
        let x = QMat::from_rows(vec![vec![qi(5), qi(6)], vec![qi(7), qi(8)]]);
        let lhs = a.matmul(&x).matmul(&b.transpose());
        let k = a.kron(&b);
        let xv = QMat { rows: 4, cols: 1, data: x.vec_rows() };
        let rhs = k.matmul(&xv);
        assert_eq!(lhs.vec_rows(), rhs.col(0));
    }

    #[test]
    fn char_poly_of_companion() {
        // λ² − 3λ + 2 has roots 1 and 2.
        let a = QMat::from_rows(vec![vec![qi(0), qi(-2)], vec![qi(1), qi(3)]]);
        let p = a.char_poly();
        assert_eq!(p, vec![qi(2), qi(-3), qi(1)]);
    }

    #[test]
    fn row_space_membership() {
        let a = QMat::from_rows(vec![vec![qi(1), qi(1), qi(0)], vec![qi(0), qi(1), qi(1)]]);
        assert!(a.row_space_contains(&[qi(1), qi(2), qi(1)]));
        assert!(!a.row_space_contains(&[qi(1), qi(0), qi(1)]));
        let c = a.row_coordinates(&[qi(1), qi(2), qi(1)]).unwrap();
        assert_eq!(c, vec![qi(1), qi(1)]);
    }

    #[test]
    fn big_rational_to_f64() {
        assert_eq!(q_to_f64(&q(1, 2)), 0.5);
        let huge = Q::new(BigInt::from(1) << 200, BigInt::from(3) << 150);
        let expect = 2f64.powi(50) / 3.0;
        assert!((q_to_f64(&huge) - expect).abs() / expect < 1e-12);
    }
}
