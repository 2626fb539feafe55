//! Scalar abstraction for the numerical kernels.
//!
//! Solvers are generic over [`Real`] so the same code path runs in native
//! double precision and in software extended precision (see [`crate::xr`]).
//! [`Cx`] is the matching complex type; it stays deliberately small because
//! only ring operations, conjugation and `e^{iθ}` are needed.

use crate::rat::{q_to_f64, Q};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_q(x: &Q) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn pi() -> Self;
    fn is_finite(&self) -> bool;
    /// Unit roundoff of the current working precision; used to terminate
    /// adaptive series.
    fn epsilon() -> Self;

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Complex number over an arbitrary [`Real`].
#[derive(Clone, Debug, PartialEq)]
pub struct Cx<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Cx<R> {
    pub fn new(re: R, im: R) -> Self {
        Cx { re, im }
    }

    pub fn zero() -> Self {
        Cx::new(R::zero(), R::zero())
    }

    pub fn one() -> Self {
        Cx::new(R::one(), R::zero())
    }

    pub fn i() -> Self {
        Cx::new(R::zero(), R::one())
    }

    pub fn from_re(re: R) -> Self {
        Cx::new(re, R::zero())
    }

    pub fn conj(&self) -> Self {
        Cx::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> R {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    pub fn abs(&self) -> R {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: &R) -> Self {
        Cx::new(self.re.clone() * s.clone(), self.im.clone() * s.clone())
    }

    /// `e^{iθ}`.
    pub fn exp_i(theta: &R) -> Self {
        Cx::new(theta.cos(), theta.sin())
    }

    /// Complex exponential `e^{re} (cos im + i sin im)`.
    pub fn exp(&self) -> Self {
        Cx::exp_i(&self.im).scale(&self.re.exp())
    }

    pub fn is_zero(&self) -> bool {
        self.re == R::zero() && self.im == R::zero()
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl<R: Real> Add for Cx<R> {
    type Output = Cx<R>;
    fn add(self, rhs: Cx<R>) -> Cx<R> {
        Cx::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl<R: Real> Sub for Cx<R> {
    type Output = Cx<R>;
    fn sub(self, rhs: Cx<R>) -> Cx<R> {
        Cx::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl<R: Real> Mul for Cx<R> {
    type Output = Cx<R>;
    fn mul(self, rhs: Cx<R>) -> Cx<R> {
        Cx::new(
            self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl<R: Real> Div for Cx<R> {
    type Output = Cx<R>;
    fn div(self, rhs: Cx<R>) -> Cx<R> {
        let d = rhs.norm_sqr();
        let n = self * rhs.conj();
        Cx::new(n.re / d.clone(), n.im / d)
    }
}

impl<R: Real> Neg for Cx<R> {
    type Output = Cx<R>;
    fn neg(self) -> Cx<R> {
        Cx::new(-self.re, -self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn complex_field_ops() {
        let a = Cx::new(1.0, 2.0);
        let b = Cx::new(3.0, -1.0);
        let p = a.clone() * b.clone();
        assert_eq!(p, Cx::new(5.0, 5.0));
        let q = p / b;
        assert_relative_eq!(q.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(q.im, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_circle_exponential() {
        let t = std::f64::consts::FRAC_PI_3;
        let z = Cx::exp_i(&t);
        assert_relative_eq!(z.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(z.abs(), 1.0, epsilon = 1e-15);
    }
}
