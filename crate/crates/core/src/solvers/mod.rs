//! Model-problem solvers built on the interval bases.
//!
//! [`helmholtz`] discretises a high-wavenumber Helmholtz equation with an
//! impedance condition, optionally enriching the wavelet basis with
//! piecewise plane waves matched to a piecewise-smooth source.
//! [`biharmonic`] solves the clamped fourth-order problem with a basis
//! whose stiffness matrix is exactly the identity. [`fd`] provides a
//! classical finite-difference baseline for comparison.

pub mod biharmonic;
pub mod helmholtz;
pub mod linear;
pub mod shapes;

pub use helmholtz::{HelmholtzOptions, HelmholtzProblem};
pub use linear::CxMat;

pub(crate) fn parse_q(s: &str) -> crate::Result<crate::rat::Q> {
    s.parse::<crate::rat::Q>()
        .map_err(|e| crate::Error::InvalidInput(format!("rational `{s}`: {e}")))
}
