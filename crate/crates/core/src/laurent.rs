//! Laurent polynomials and Laurent-polynomial matrices over `Q`.
//!
//! Filter banks act in the frequency domain as matrices of trigonometric
//! polynomials; with `z = e^{-iξ}` these become Laurent-polynomial matrices,
//! and statements like perfect reconstruction turn into exact algebraic
//! identities that can be checked without any floating point.

use crate::rat::{Q, QMat};
use num_traits::{One, Zero};

/// Laurent polynomial `Σ c[i] z^(lo+i)` with exact rational coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct LPoly {
    lo: i64,
    c: Vec<Q>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly { lo: 0, c: Vec::new() }
    }

    pub fn one() -> Self {
        LPoly::monomial(0, Q::one())
    }

    pub fn monomial(k: i64, coeff: Q) -> Self {
        LPoly { lo: k, c: vec![coeff] }.normalized()
    }

    pub fn from_coeffs(lo: i64, c: Vec<Q>) -> Self {
        LPoly { lo, c }.normalized()
    }

    fn normalized(mut self) -> Self {
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        let lead = self.c.iter().take_while(|x| x.is_zero()).count();
        if lead > 0 {
            self.c.drain(..lead);
            self.lo += lead as i64;
        }
        if self.c.is_empty() {
            self.lo = 0;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Exponent range `(lowest, highest)`; `None` for the zero polynomial.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.is_zero() {
            None
        } else {
            Some((self.lo, self.lo + self.c.len() as i64 - 1))
        }
    }

    pub fn coeff(&self, k: i64) -> Q {
        let idx = k - self.lo;
        if idx < 0 || idx >= self.c.len() as i64 {
            Q::zero()
        } else {
            self.c[idx as usize].clone()
        }
    }

    pub fn add(&self, rhs: &LPoly) -> LPoly {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = (self.lo + self.c.len() as i64).max(rhs.lo + rhs.c.len() as i64);
        let mut c = vec![Q::zero(); (hi - lo) as usize];
        for (i, x) in self.c.iter().enumerate() {
            c[(self.lo - lo) as usize + i] += x;
        }
        for (i, x) in rhs.c.iter().enumerate() {
            c[(rhs.lo - lo) as usize + i] += x;
        }
        LPoly { lo, c }.normalized()
    }

    pub fn neg(&self) -> LPoly {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn sub(&self, rhs: &LPoly) -> LPoly {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &LPoly) -> LPoly {
        if self.is_zero() || rhs.is_zero() {
            return LPoly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + rhs.c.len() - 1];
        for (i, x) in self.c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in rhs.c.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        LPoly { lo: self.lo + rhs.lo, c }.normalized()
    }

    pub fn scale(&self, s: &Q) -> LPoly {
        LPoly { lo: self.lo, c: self.c.iter().map(|x| x * s).collect() }.normalized()
    }

    /// Substitution `z → -z` (frequency shift by half a period).
    pub fn modulate(&self) -> LPoly {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, x)| if (self.lo + i as i64).rem_euclid(2) == 1 { -x } else { x.clone() })
            .collect();
        LPoly { lo: self.lo, c }
    }

    /// Substitution `z → 1/z`; for real coefficients this is complex
    /// conjugation of the underlying trigonometric polynomial.
    pub fn reverse(&self) -> LPoly {
        if self.is_zero() {
            return LPoly::zero();
        }
        let hi = self.lo + self.c.len() as i64 - 1;
        LPoly { lo: -hi, c: self.c.iter().rev().cloned().collect() }
    }

    pub fn eval(&self, z: &Q) -> Q {
        // Horner on the polynomial part, then the z^lo prefactor.
        let mut acc = Q::zero();
        for x in self.c.iter().rev() {
            acc = acc * z + x;
        }
        let mut pre = Q::one();
        if self.lo >= 0 {
            for _ in 0..self.lo {
                pre *= z;
            }
        } else {
            let inv = z.recip();
            for _ in 0..(-self.lo) {
                pre *= &inv;
            }
        }
        acc * pre
    }
}

impl std::fmt::Debug for LPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| format!("({})z^{}", x, self.lo + i as i64))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Matrix with [`LPoly`] entries, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LMat {
    rows: usize,
    cols: usize,
    e: Vec<LPoly>,
}

impl LMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LMat { rows, cols, e: vec![LPoly::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = LMat::zeros(n, n);
        for i in 0..n {
            m.e[i * n + i] = LPoly::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LPoly) -> Self {
        let mut e = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                e.push(f(i, j));
            }
        }
        LMat { rows, cols, e }
    }

    pub fn entry(&self, i: usize, j: usize) -> &LPoly {
        &self.e[i * self.cols + j]
    }

    pub fn add(&self, rhs: &LMat) -> LMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        LMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).add(rhs.entry(i, j)))
    }

    pub fn sub(&self, rhs: &LMat) -> LMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        LMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).sub(rhs.entry(i, j)))
    }

    pub fn matmul(&self, rhs: &LMat) -> LMat {
        assert_eq!(self.cols, rhs.rows);
        LMat::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = LPoly::zero();
            for k in 0..self.cols {
                acc = acc.add(&self.entry(i, k).mul(rhs.entry(k, j)));
            }
            acc
        })
    }

    pub fn modulate(&self) -> LMat {
        LMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).modulate())
    }

    /// Conjugate transpose for real-coefficient symbols: transpose entries
    /// and substitute `z → 1/z`.
    pub fn adjoint(&self) -> LMat {
        LMat::from_fn(self.cols, self.rows, |i, j| self.entry(j, i).reverse())
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|p| p.is_zero())
    }

    pub fn eval(&self, z: &Q) -> QMat {
        QMat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qi};

    fn p(lo: i64, c: &[i64]) -> LPoly {
        LPoly::from_coeffs(lo, c.iter().map(|&x| qi(x)).collect())
    }

    #[test]
    fn arithmetic_and_normalization() {
        let a = p(-1, &[1, 2, 1]);
        let b = p(0, &[0, 3]);
        assert_eq!(b.support(), Some((1, 1)));
        let s = a.add(&b);
        assert_eq!(s.coeff(1), qi(4));
        assert_eq!(a.mul(&p(0, &[1])), a);
        assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn modulate_and_reverse() {
        let a = p(-1, &[1, 2, 3]);
        let m = a.modulate();
        assert_eq!(m.coeff(-1), qi(-1));
        assert_eq!(m.coeff(0), qi(2));
        assert_eq!(m.coeff(1), qi(-3));
        let r = a.reverse();
        assert_eq!(r.support(), Some((-1, 1)));
        assert_eq!(r.coeff(1), qi(1));
        assert_eq!(r.coeff(-1), qi(3));
    }

    #[test]
    fn eval_with_negative_powers() {
        let a = p(-2, &[1, 0, 4]); // z^-2 + 4
        assert_eq!(a.eval(&q(1, 2)), qi(8));
    }

    #[test]
    fn matrix_product_matches_scalar_expansion() {
        // (z + z^-1) * (z - z^-1) = z^2 - z^-2 via 1x1 matrices.
        let u = LMat::from_fn(1, 1, |_, _| p(-1, &[1, 0, 1]));
        let v = LMat::from_fn(1, 1, |_, _| p(-1, &[-1, 0, 1]));
        let w = u.matmul(&v);
        assert_eq!(w.entry(0, 0), &p(-2, &[-1, 0, 0, 0, 1]));
    }
}
