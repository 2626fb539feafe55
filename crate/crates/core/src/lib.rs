//! Biorthogonal wavelet bases on the unit interval and wavelet Galerkin
//! solvers for one-dimensional model problems.
//!
//! The crate is organised bottom-up:
//!
//! - [`rat`] — exact rational linear algebra underlying every construction;
//! - [`scalar`] / [`xr`] — the `Real` abstraction with `f64` and software
//!   extended-precision backends;
//! - [`laurent`] / [`filters`] — filter banks as Laurent-polynomial matrices,
//!   perfect-reconstruction and sum-rule analysis;
//! - [`piecewise`] / [`oscpiece`] — exact piecewise-polynomial calculus and
//!   integration of polynomials against oscillatory exponentials;
//! - [`refinable`] — refinable vector functions: point evaluation, moments,
//!   and exact Gram tables of (derivatives of) integer shifts;
//! - [`interval`] — adaptation of a biorthogonal system to `[0,1]`: boundary
//!   refinable functions, boundary wavelets, dual counterparts, and
//!   multiscale bases with their refinement/transform matrices;
//! - [`galerkin`] — Galerkin matrices, normalisation, condition numbers;
//! - [`solvers`] — Helmholtz (with oscillation-adapted enrichment) and
//!   biharmonic model solvers plus classical baselines.

pub mod eigen;
pub mod filters;
pub mod fixtures;
pub mod galerkin;
pub mod interval;
pub mod laurent;
pub mod oscpiece;
pub mod piecewise;
pub mod rat;
pub mod refinable;
pub mod scalar;
pub mod solvers;
pub mod xr;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid filter bank: {0}")]
    InvalidFilterBank(String),
    #[error("basis construction failed: {0}")]
    Construction(String),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
