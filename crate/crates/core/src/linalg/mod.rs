//! Operator abstraction and the solve kernels used by the integrator.
//!
//! The integrator only ever needs `y ↦ Dy`, `y ↦ My`, `M⁻¹`, and solves of
//! `(τD + ζM) w = v` for complex shifts `ζ`. [`DenseOperator`] provides all
//! of these with cached LU factorizations; other backends (sparse, matrix
//! free, iterative) implement [`LinearOperator`] directly.

mod block_tridiag;
mod dense;
mod real_form;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use crate::error::{arg_err, CtgError, Result};
use crate::scalar::{Cplx, Real};

pub use block_tridiag::{block_tridiagonal_solve, BlockTridiagonalSystem, PIVOT_CONDITION_LIMIT};
pub use dense::{
    assemble_full_system, condition_estimate_1, dense_full_system_solve, dense_shifted_solve,
    max_symmetric_part_eigenvalue, FULL_SYSTEM_MAX_DIM,
};
pub use real_form::{
    gmres, preconditioned_real_form, real_equivalent_solve, real_form_condition_number, GmresOptions, RealFormMode,
};

/// What the time stepper needs from the spatial operator.
///
/// Implementations must be callable from several threads at once.
pub trait LinearOperator<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn apply_d(&self, v: &DVector<T>) -> DVector<T>;

    /// `y ↦ My`; identity unless the system carries a mass matrix.
    fn apply_mass(&self, v: &DVector<T>) -> DVector<T> {
        v.clone()
    }

    fn has_mass(&self) -> bool {
        false
    }

    /// `M⁻¹ v`.
    fn solve_mass(&self, v: &DVector<T>) -> Result<DVector<T>> {
        Ok(v.clone())
    }

    /// Solve `(τD + ζM) w = v`.
    fn shifted_solve(&self, tau: T, zeta: Cplx<T>, v: &DVector<Cplx<T>>) -> Result<DVector<Cplx<T>>>;

    fn dense_d(&self) -> Option<&DMatrix<T>> {
        None
    }

    fn dense_mass(&self) -> Option<&DMatrix<T>> {
        None
    }
}

/// `Dv` for a complex vector, applied to real and imaginary parts.
pub fn apply_d_complex<T: Real, O: LinearOperator<T> + ?Sized>(op: &O, v: &DVector<Cplx<T>>) -> DVector<Cplx<T>> {
    let re = op.apply_d(&v.map(|z| z.re));
    let im = op.apply_d(&v.map(|z| z.im));
    re.zip_map(&im, Cplx::new)
}

/// How [`DenseOperator`] performs its shifted solves.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolveStrategy {
    /// Complex LU with partial pivoting.
    #[default]
    ComplexLu,
    /// Real `2M×2M` equivalent form for complex shifts.
    RealEquivalent(RealFormMode),
}

enum Factor<T: Real> {
    Complex(LU<Cplx<T>, Dyn, Dyn>),
    Real(LU<T, Dyn, Dyn>),
}

type CacheKey = (u64, u64, u64);

const CACHE_CAPACITY: usize = 256;

/// Dense `D` and optional SPD mass matrix with factorization caching.
///
/// Factorizations of `τD + ζM` are cached per `(τ, ζ)`. The cache lock is
/// held only for lookup and insertion, so concurrent solves with distinct
/// shifts do not serialize on each other once factored.
pub struct DenseOperator<T: Real> {
    d: DMatrix<T>,
    mass: Option<DMatrix<T>>,
    mass_chol: Option<Cholesky<T, Dyn>>,
    strategy: SolveStrategy,
    cache: Mutex<HashMap<CacheKey, Arc<Factor<T>>>>,
}

impl<T: Real> std::fmt::Debug for DenseOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseOperator")
            .field("dim", &self.d.nrows())
            .field("has_mass", &self.mass.is_some())
            .field("strategy", &self.strategy)
            .finish()
    }
}

impl<T: Real> Clone for DenseOperator<T> {
    fn clone(&self) -> Self {
        Self {
            d: self.d.clone(),
            mass: self.mass.clone(),
            mass_chol: self.mass_chol.clone(),
            strategy: self.strategy,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<T: Real> DenseOperator<T> {
    pub fn new(d: DMatrix<T>) -> Result<Self> {
        if !d.is_square() || d.nrows() == 0 {
            return arg_err(format!("D must be square and non-empty, got {}x{}", d.nrows(), d.ncols()));
        }
        Ok(Self {
            d,
            mass: None,
            mass_chol: None,
            strategy: SolveStrategy::default(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Operator for `M Y' = D Y + R`; `M` must be symmetric positive definite.
    pub fn with_mass(d: DMatrix<T>, mass: DMatrix<T>) -> Result<Self> {
        let mut op = Self::new(d)?;
        if mass.shape() != op.d.shape() {
            return Err(CtgError::Dimension { expected: op.d.nrows(), got: mass.nrows() });
        }
        let tol = T::of(1e-12) * mass.amax().max(T::one());
        if (&mass - mass.transpose()).amax() > tol {
            return arg_err("mass matrix is not symmetric");
        }
        let chol = Cholesky::new(mass.clone())
            .ok_or_else(|| CtgError::Argument("mass matrix is not positive definite".into()))?;
        op.mass = Some(mass);
        op.mass_chol = Some(chol);
        Ok(op)
    }

    pub fn with_strategy(mut self, strategy: SolveStrategy) -> Self {
        self.strategy = strategy;
        self.cache.lock().expect("cache lock").clear();
        self
    }

    pub fn strategy(&self) -> SolveStrategy {
        self.strategy
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn mass(&self) -> Option<&DMatrix<T>> {
        self.mass.as_ref()
    }

    /// Number of cached factorizations.
    pub fn cached_factorizations(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn key(tau: T, zeta: Cplx<T>) -> CacheKey {
        (tau.to_f64_lossy().to_bits(), zeta.re.to_f64_lossy().to_bits(), zeta.im.to_f64_lossy().to_bits())
    }

    fn factor(&self, tau: T, zeta: Cplx<T>) -> Result<Arc<Factor<T>>> {
        let key = Self::key(tau, zeta);
        if let Some(f) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(match self.strategy {
            SolveStrategy::RealEquivalent(RealFormMode::Direct) if zeta.im != T::zero() => {
                let a = real_form::real_form_matrix(&self.d, self.mass.as_ref(), tau, zeta);
                let lu = a.lu();
                dense::check_lu_real(&lu)?;
                Factor::Real(lu)
            }
            _ => {
                let a = dense::shifted_matrix(&self.d, self.mass.as_ref(), tau, zeta);
                let lu = a.lu();
                dense::check_lu_complex(&lu)?;
                Factor::Complex(lu)
            }
        });
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        Ok(Arc::clone(cache.entry(key).or_insert(f)))
    }
}

impl<T: Real> LinearOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.d.nrows()
    }

    fn apply_d(&self, v: &DVector<T>) -> DVector<T> {
        &self.d * v
    }

    fn apply_mass(&self, v: &DVector<T>) -> DVector<T> {
        match &self.mass {
            Some(m) => m * v,
            None => v.clone(),
        }
    }

    fn has_mass(&self) -> bool {
        self.mass.is_some()
    }

    fn solve_mass(&self, v: &DVector<T>) -> Result<DVector<T>> {
        match &self.mass_chol {
            Some(c) => Ok(c.solve(v)),
            None => Ok(v.clone()),
        }
    }

    fn shifted_solve(&self, tau: T, zeta: Cplx<T>, v: &DVector<Cplx<T>>) -> Result<DVector<Cplx<T>>> {
        if v.len() != self.dim() {
            return Err(CtgError::Dimension { expected: self.dim(), got: v.len() });
        }
        if let SolveStrategy::RealEquivalent(mode @ RealFormMode::Iterative(_)) = self.strategy {
            if zeta.im != T::zero() {
                return real_equivalent_solve(&self.d, self.mass.as_ref(), tau, zeta, v, mode);
            }
        }
        match &*self.factor(tau, zeta)? {
            Factor::Complex(lu) => lu
                .solve(v)
                .ok_or_else(|| CtgError::Solver { reason: "singular shifted matrix".into(), condition: f64::INFINITY }),
            Factor::Real(lu) => {
                let m = self.dim();
                let mut rhs = DVector::<T>::zeros(2 * m);
                for i in 0..m {
                    rhs[i] = v[i].re;
                    rhs[m + i] = -v[i].im;
                }
                let x = lu.solve(&rhs).ok_or_else(|| CtgError::Solver {
                    reason: "singular real form".into(),
                    condition: f64::INFINITY,
                })?;
                Ok(DVector::from_fn(m, |i, _| Cplx::new(x[i], x[m + i])))
            }
        }
    }

    fn dense_d(&self) -> Option<&DMatrix<T>> {
        Some(&self.d)
    }

    fn dense_mass(&self) -> Option<&DMatrix<T>> {
        self.mass.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn cache_reuses_factorizations() {
        let op = DenseOperator::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -2.0])).unwrap();
        let v = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let z = Complex64::new(-3.0, 3f64.sqrt());
        let a = op.shifted_solve(0.5, z, &v).unwrap();
        let b = op.shifted_solve(0.5, z, &v).unwrap();
        assert_eq!(a, b);
        assert_eq!(op.cached_factorizations(), 1);
        op.shifted_solve(0.25, z, &v).unwrap();
        assert_eq!(op.cached_factorizations(), 2);
    }

    #[test]
    fn rejects_bad_mass() {
        let d = DMatrix::<f64>::identity(2, 2);
        let not_spd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(DenseOperator::with_mass(d.clone(), not_spd), Err(CtgError::Argument(_))));
        let not_sym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(DenseOperator::with_mass(d, not_sym).is_err());
    }

    #[test]
    fn dimension_mismatch_reported() {
        let op = DenseOperator::new(DMatrix::<f64>::identity(3, 3)).unwrap();
        let v = DVector::from_element(2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            op.shifted_solve(1.0, Complex64::new(-2.0, 0.0), &v),
            Err(CtgError::Dimension { expected: 3, got: 2 })
        ));
    }
}
