//! Software extended-precision scalar backed by `astro-float`.
//!
//! [`XR`] implements [`Real`], so every generic kernel can be re-run with a
//! few hundred bits of mantissa when double precision runs out of headroom
//! (residual norms of highly oscillatory solutions cancel to ~40 significant
//! digits before the answer emerges). Precision is a thread-local setting so
//! callers don't have to thread a context through arithmetic-heavy code;
//! use [`with_precision_digits`] to scope it.

use crate::rat::Q;
use crate::scalar::Real;
use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, WORD_BIT_SIZE};
use std::cell::RefCell;

const RM: RoundingMode = RoundingMode::ToEven;

struct Ctx {
    p: usize,
    cc: Consts,
}

thread_local! {
    static CTX: RefCell<Ctx> = RefCell::new(Ctx {
        p: 192,
        cc: Consts::new().expect("constants cache"),
    });
}

fn ctx<T>(f: impl FnOnce(usize, &mut Consts) -> T) -> T {
    CTX.with(|c| {
        let c = &mut *c.borrow_mut();
        f(c.p, &mut c.cc)
    })
}

/// Sets the working mantissa length in bits for the current thread.
pub fn set_precision_bits(bits: usize) {
    let bits = bits.max(2 * WORD_BIT_SIZE);
    CTX.with(|c| c.borrow_mut().p = bits);
}

pub fn precision_bits() -> usize {
    CTX.with(|c| c.borrow().p)
}

/// Sets the precision to hold roughly `digits` significant decimal digits
/// (plus guard bits).
pub fn set_precision_digits(digits: usize) {
    set_precision_bits((digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64);
}

/// Runs `f` with the given decimal precision, restoring the previous value.
pub fn with_precision_digits<T>(digits: usize, f: impl FnOnce() -> T) -> T {
    let saved = precision_bits();
    set_precision_digits(digits);
    let out = f();
    set_precision_bits(saved);
    out
}

/// Extended-precision real number; see the module docs.
#[derive(Clone, Debug)]
pub struct XR(BigFloat);

impl XR {
    pub fn from_bigfloat(x: BigFloat) -> Self {
        XR(x)
    }

    pub fn bigfloat(&self) -> &BigFloat {
        &self.0
    }

    /// Parses a decimal literal at the current working precision.
    pub fn parse(s: &str) -> Self {
        XR(ctx(|p, cc| BigFloat::parse(s, Radix::Dec, p, RM, cc)))
    }
}

fn bf_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    // value = sign · 0.mantissa · 2^exp with little-endian mantissa words;
    // the top two words carry more than an f64 can hold.
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let wb = WORD_BIT_SIZE as i32;
    let n = words.len();
    let mut v = 0.0f64;
    for i in 0..n.min(2) {
        v += (words[n - 1 - i] as f64) * 2f64.powi(exp - wb * (i as i32 + 1));
    }
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

impl PartialEq for XR {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for XR {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl std::ops::Add for XR {
    type Output = XR;
    fn add(self, rhs: XR) -> XR {
        XR(ctx(|p, _| self.0.add(&rhs.0, p, RM)))
    }
}

impl std::ops::Sub for XR {
    type Output = XR;
    fn sub(self, rhs: XR) -> XR {
        XR(ctx(|p, _| self.0.sub(&rhs.0, p, RM)))
    }
}

impl std::ops::Mul for XR {
    type Output = XR;
    fn mul(self, rhs: XR) -> XR {
        XR(ctx(|p, _| self.0.mul(&rhs.0, p, RM)))
    }
}

impl std::ops::Div for XR {
    type Output = XR;
    fn div(self, rhs: XR) -> XR {
        XR(ctx(|p, _| self.0.div(&rhs.0, p, RM)))
    }
}

impl std::ops::Neg for XR {
    type Output = XR;
    fn neg(self) -> XR {
        XR(self.0.neg())
    }
}

impl Real for XR {
    fn zero() -> Self {
        XR(BigFloat::from_f64(0.0, ctx(|p, _| p)))
    }

    fn one() -> Self {
        XR(BigFloat::from_f64(1.0, ctx(|p, _| p)))
    }

    fn from_i64(n: i64) -> Self {
        XR::parse(&n.to_string())
    }

    fn from_f64(x: f64) -> Self {
        XR(BigFloat::from_f64(x, ctx(|p, _| p)))
    }

    fn from_q(x: &Q) -> Self {
        let num = XR::parse(&x.numer().to_string());
        let den = XR::parse(&x.denom().to_string());
        num / den
    }

    fn to_f64(&self) -> f64 {
        bf_to_f64(&self.0)
    }

    fn abs(&self) -> Self {
        XR(self.0.abs())
    }

    fn sqrt(&self) -> Self {
        XR(ctx(|p, _| self.0.sqrt(p, RM)))
    }

    fn sin(&self) -> Self {
        XR(ctx(|p, cc| self.0.sin(p, RM, cc)))
    }

    fn cos(&self) -> Self {
        XR(ctx(|p, cc| self.0.cos(p, RM, cc)))
    }

    fn exp(&self) -> Self {
        XR(ctx(|p, cc| self.0.exp(p, RM, cc)))
    }

    fn pi() -> Self {
        XR(ctx(|p, cc| cc.pi(p, RM)))
    }

    fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    fn epsilon() -> Self {
        ctx(|p, _| {
            let mut one = BigFloat::from_f64(1.0, p);
            one.set_exponent(1 - p as astro_float::Exponent);
            XR(one)
        })
    }
}

impl std::fmt::Display for XR {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_doubles() {
        for &x in &[0.0, 1.0, -0.375, 1e-30, 12345.6789, -3.5e40] {
            assert_eq!(XR::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn rational_conversion() {
        let third = XR::from_q(&crate::rat::q(1, 3));
        assert!((third.to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn pi_and_trig() {
        let pi = XR::pi();
        assert!((pi.to_f64() - std::f64::consts::PI).abs() < 1e-15);
        // sin(pi) cancels to the working precision, far below double epsilon.
        let s = pi.sin();
        assert!(s.to_f64().abs() < 1e-55);
    }

    #[test]
    fn extended_cancellation_survives() {
        // (1 + 1e-30) - 1 is unrepresentable in f64 but exact here.
        let tiny = XR::parse("1e-30");
        let one = XR::one();
        let diff = (one.clone() + tiny) - one;
        assert!((diff.to_f64() - 1e-30).abs() < 1e-45);
    }

    #[test]
    fn precision_scoping() {
        let base = precision_bits();
        with_precision_digits(100, || {
            assert!(precision_bits() >= 100 * 3);
        });
        assert_eq!(precision_bits(), base);
    }
}
