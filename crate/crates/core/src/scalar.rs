//! Scalar abstraction shared by the floating-point parts of the crate.
//!
//! Everything that touches matrices is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Exact polynomial work uses
//! [`num_rational::BigRational`] coefficients instead (see [`crate::poly`]).

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar usable by the integrator and the solvers.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::LowerExp + 'static {
    /// Lossy conversion from `f64`; panics only for non-finite input on
    /// exotic scalar types, never for `f32`/`f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex counterpart of a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

pub(crate) fn cplx_of<T: Real>(z: Complex<f64>) -> Cplx<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}
