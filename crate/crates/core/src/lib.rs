pub mod convergence;
pub mod error;
mod fixed;
pub mod integrator;
pub mod linalg;
pub mod minors;
pub mod mtx;
pub mod pade;
pub mod poly;
pub mod problems;
pub mod quadrature;
pub mod scalar;
pub mod verify;

use num_rational::BigRational;

pub use error::{CtgError, Result};
pub use scalar::Real;

/// Polynomial with double-precision coefficients.
pub type RealPolynomial = poly::Polynomial<f64>;
/// Polynomial with exact rational coefficients.
pub type ExactPolynomial = poly::Polynomial<BigRational>;
