use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, LU};

use crate::error::{arg_err, CtgError, Result};
use crate::minors::StiffnessSymbol;
use crate::scalar::{Cplx, Real};

/// Largest `(r+1)·M` accepted by [`dense_full_system_solve`].
pub const FULL_SYSTEM_MAX_DIM: usize = 4000;

pub(crate) fn shifted_matrix<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    zeta: Cplx<T>,
) -> DMatrix<Cplx<T>> {
    let mut a = d.map(|x| Cplx::new(tau * x, T::zero()));
    match mass {
        Some(m) => a.zip_apply(m, |x, mij| *x += zeta * mij),
        None => {
            for i in 0..a.nrows() {
                a[(i, i)] += zeta;
            }
        }
    }
    a
}

fn pivot_ratio<T: Real, N: nalgebra::ComplexField<RealField = T>>(u_diag: impl Iterator<Item = N>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for p in u_diag {
        let m = p.modulus().to_f64_lossy();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

fn singular<T: Real>(ratio: f64) -> Result<()> {
    if ratio <= T::eps().to_f64_lossy() {
        let condition = if ratio == 0.0 { f64::INFINITY } else { 1.0 / ratio };
        return Err(CtgError::Solver { reason: "matrix is singular to working precision".into(), condition });
    }
    Ok(())
}

pub(crate) fn check_lu_complex<T: Real>(lu: &LU<Cplx<T>, Dyn, Dyn>) -> Result<()> {
    singular::<T>(pivot_ratio(lu.u().diagonal().iter().copied()))
}

pub(crate) fn check_lu_real<T: Real>(lu: &LU<T, Dyn, Dyn>) -> Result<()> {
    singular::<T>(pivot_ratio(lu.u().diagonal().iter().copied()))
}

/// Solve `(τD + ζM) w = v` by complex LU with partial pivoting.
///
/// `mass = None` means `M = I`.
pub fn dense_shifted_solve<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    zeta: Cplx<T>,
    v: &DVector<Cplx<T>>,
) -> Result<DVector<Cplx<T>>> {
    if tau <= T::zero() {
        return arg_err("step size must be positive");
    }
    if v.len() != d.nrows() {
        return Err(CtgError::Dimension { expected: d.nrows(), got: v.len() });
    }
    let lu = shifted_matrix(d, mass, tau, zeta).lu();
    check_lu_complex(&lu)?;
    lu.solve(v).ok_or_else(|| CtgError::Solver { reason: "singular shifted matrix".into(), condition: f64::INFINITY })
}

/// `‖A‖₁·‖A⁻¹‖₁`, infinite when `A` is singular.
pub fn condition_estimate_1<T: Real>(a: &DMatrix<T>) -> f64 {
    let norm1 = |m: &DMatrix<T>| {
        m.column_iter().map(|c| c.iter().map(|x| x.abs().to_f64_lossy()).sum::<f64>()).fold(0.0, f64::max)
    };
    match a.clone().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

/// Largest eigenvalue of `D + Dᵀ`; nonpositive for a semi-dissipative `D`.
pub fn max_symmetric_part_eigenvalue<T: Real>(d: &DMatrix<T>) -> T {
    let s = d + d.transpose();
    SymmetricEigen::new(s).eigenvalues.iter().copied().fold(T::min_value().unwrap(), |a, b| a.max(b))
}

/// Assemble the full `(r+1)M × (r+1)M` step matrix `E_{r+1}(τD)`.
///
/// With a mass matrix the `-1` entries of the first `r` block rows become
/// `-M`; the final row (the left-endpoint constraint) keeps identity blocks.
pub fn assemble_full_system<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    r: usize,
) -> Result<DMatrix<T>> {
    let m = d.nrows();
    if r == 0 {
        return arg_err("order must be at least 1");
    }
    if (r + 1) * m > FULL_SYSTEM_MAX_DIM {
        return arg_err(format!("full system of size {} exceeds {}", (r + 1) * m, FULL_SYSTEM_MAX_DIM));
    }
    let symbol = StiffnessSymbol::new(r).materialize();
    let td = d * tau;
    let eye = DMatrix::<T>::identity(m, m);
    let mut a = DMatrix::<T>::zeros((r + 1) * m, (r + 1) * m);
    for (row, entries) in symbol.iter().enumerate() {
        let constant = match mass {
            Some(mm) if row < r => mm,
            _ => &eye,
        };
        for (col, p) in entries.iter().enumerate() {
            let p = p.to_f64();
            let (c0, c1) = (T::of(p.coeff(0)), T::of(p.coeff(1)));
            if c0 == T::zero() && c1 == T::zero() {
                continue;
            }
            let block = &td * c1 + constant * c0;
            a.view_mut((row * m, col * m), (m, m)).copy_from(&block);
        }
    }
    Ok(a)
}

/// Solve the full coupled step system for `a_0..a_r` with one dense LU.
///
/// `blocks` holds `b_0..b_r`, so `r = blocks.len() - 1`.
pub fn dense_full_system_solve<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    blocks: &[DVector<T>],
) -> Result<Vec<DVector<T>>> {
    let m = d.nrows();
    if blocks.len() < 2 {
        return arg_err("need at least two right-hand side blocks");
    }
    if let Some(b) = blocks.iter().find(|b| b.len() != m) {
        return Err(CtgError::Dimension { expected: m, got: b.len() });
    }
    let r = blocks.len() - 1;
    let a = assemble_full_system(d, mass, tau, r)?;
    let rhs = DVector::from_iterator((r + 1) * m, blocks.iter().flat_map(|b| b.iter().copied()));
    let lu = a.lu();
    check_lu_real(&lu)?;
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| CtgError::Solver { reason: "singular step system".into(), condition: f64::INFINITY })?;
    Ok((0..=r).map(|j| x.rows(j * m, m).into_owned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn scalar_shift() {
        let d = DMatrix::from_element(1, 1, -1.0);
        let v = DVector::from_element(1, Complex64::new(3.0, 0.0));
        let w = dense_shifted_solve(&d, None, 1.0, Complex64::new(-2.0, 0.0), &v).unwrap();
        assert!((w[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_operator_divides_by_shift() {
        let d = DMatrix::<f64>::zeros(3, 3);
        let z = Complex64::new(-3.0, 1.5);
        let v = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 4.0)]);
        let w = dense_shifted_solve(&d, None, 0.7, z, &v).unwrap();
        for i in 0..3 {
            assert!((w[i] - v[i] / z).norm() < 1e-15);
        }
    }

    #[test]
    fn singular_reports_condition() {
        let d = DMatrix::from_element(1, 1, 2.0);
        let v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let err = dense_shifted_solve(&d, None, 1.0, Complex64::new(-2.0, 0.0), &v).unwrap_err();
        assert!(matches!(err, CtgError::Solver { condition, .. } if condition.is_infinite()));
    }

    #[test]
    fn first_order_scalar_system() {
        let lambda: f64 = -1.0;
        let d = DMatrix::from_element(1, 1, lambda);
        let b = vec![DVector::from_element(1, 0.0), DVector::from_element(1, 1.0)];
        let a = dense_full_system_solve(&d, None, 1.0, &b).unwrap();
        assert!((a[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((a[1][0] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn oversize_rejected() {
        let d = DMatrix::<f64>::zeros(1000, 1000);
        assert!(assemble_full_system(&d, None, 1.0, 4).is_err());
    }
}
