//! Real `2M×2M` form of a complex-shifted solve.
//!
//! For `ζ = a + ib` and `X = τD`, `(X + ζM)(w₁ + iw₂) = v₁ + iv₂` is
//! equivalent to
//!
//! ```text
//! [ X + aM   -bM      ] [w₁]   [ v₁]
//! [ -bM     -(X + aM) ] [w₂] = [-v₂]
//! ```
//!
//! and the block-diagonal matrix `F = diag(X + (a+b)M, X + (a+b)M)` is a
//! preconditioner whose action keeps the spectral condition number of
//! `F⁻¹D̃` at most `√2` whenever `X` is symmetric negative semidefinite,
//! `M = I` and `b < 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{arg_err, CtgError, Result};
use crate::scalar::{Cplx, Real};

use super::dense::check_lu_real;

/// Options for the restarted GMRES used by the iterative real form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-13, restart: 60, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RealFormMode {
    #[default]
    Direct,
    Iterative(GmresOptions),
}

pub(crate) fn real_form_matrix<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    zeta: Cplx<T>,
) -> DMatrix<T> {
    let m = d.nrows();
    let eye;
    let mm = match mass {
        Some(mm) => mm,
        None => {
            eye = DMatrix::identity(m, m);
            &eye
        }
    };
    let xa = d * tau + mm * zeta.re;
    let off = mm * (-zeta.im);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(&xa);
    out.view_mut((0, m), (m, m)).copy_from(&off);
    out.view_mut((m, 0), (m, m)).copy_from(&off);
    out.view_mut((m, m), (m, m)).copy_from(&(-xa));
    out
}

fn preconditioner_block<T: Real>(d: &DMatrix<T>, mass: Option<&DMatrix<T>>, tau: T, zeta: Cplx<T>) -> DMatrix<T> {
    let shift = zeta.re + zeta.im;
    match mass {
        Some(mm) => d * tau + mm * shift,
        None => {
            let mut x = d * tau;
            for i in 0..x.nrows() {
                x[(i, i)] += shift;
            }
            x
        }
    }
}

fn check_shift<T: Real>(tau: T, zeta: Cplx<T>) -> Result<()> {
    if tau <= T::zero() {
        return arg_err("step size must be positive");
    }
    if zeta.im >= T::zero() {
        return arg_err("real form requires a shift with negative imaginary part");
    }
    Ok(())
}

/// Solve `(τD + ζM) w = v` through the real equivalent form.
pub fn real_equivalent_solve<T: Real>(
    d: &DMatrix<T>,
    mass: Option<&DMatrix<T>>,
    tau: T,
    zeta: Cplx<T>,
    v: &DVector<Cplx<T>>,
    mode: RealFormMode,
) -> Result<DVector<Cplx<T>>> {
    check_shift(tau, zeta)?;
    let m = d.nrows();
    if v.len() != m {
        return Err(CtgError::Dimension { expected: m, got: v.len() });
    }
    let mut rhs = DVector::<T>::zeros(2 * m);
    for i in 0..m {
        rhs[i] = v[i].re;
        rhs[m + i] = -v[i].im;
    }
    let a = real_form_matrix(d, mass, tau, zeta);
    let x = match mode {
        RealFormMode::Direct => {
            let lu = a.lu();
            check_lu_real(&lu)?;
            lu.solve(&rhs)
                .ok_or_else(|| CtgError::Solver { reason: "singular real form".into(), condition: f64::INFINITY })?
        }
        RealFormMode::Iterative(opts) => {
            let f = preconditioner_block(d, mass, tau, zeta).lu();
            check_lu_real(&f)?;
            let precond = |y: &DVector<T>| -> DVector<T> {
                let top = f.solve(&y.rows(0, m).into_owned()).expect("checked factorization");
                let bottom = f.solve(&y.rows(m, m).into_owned()).expect("checked factorization");
                let mut out = DVector::zeros(2 * m);
                out.rows_mut(0, m).copy_from(&top);
                out.rows_mut(m, m).copy_from(&bottom);
                out
            };
            let b = precond(&rhs);
            let (x, _) = gmres(|y| precond(&(&a * y)), &b, opts)?;
            x
        }
    };
    Ok(DVector::from_fn(m, |i, _| Cplx::new(x[i], x[m + i])))
}

/// The preconditioned real-form matrix `F⁻¹D̃` with `M = I`.
pub fn preconditioned_real_form<T: Real>(d: &DMatrix<T>, tau: T, zeta: Cplx<T>) -> Result<DMatrix<T>> {
    check_shift(tau, zeta)?;
    let m = d.nrows();
    let f = preconditioner_block(d, None, tau, zeta).lu();
    check_lu_real(&f)?;
    let a = real_form_matrix(d, None, tau, zeta);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for (rows, start) in [(0, 0), (m, m)] {
        let block = a.rows(rows, m).into_owned();
        let solved = f.solve(&block).expect("checked factorization");
        out.view_mut((start, 0), (m, 2 * m)).copy_from(&solved);
    }
    Ok(out)
}

/// Spectral condition number `κ₂(F⁻¹D̃)`.
pub fn real_form_condition_number<T: Real>(d: &DMatrix<T>, tau: T, zeta: Cplx<T>) -> Result<f64> {
    let p = preconditioned_real_form(d, tau, zeta)?;
    let sv = p.singular_values();
    let max = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let min = sv.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
    if min == T::zero() {
        return Ok(f64::INFINITY);
    }
    Ok((max / min).to_f64_lossy())
}

/// Restarted GMRES for `A x = b` with a zero initial guess.
///
/// Returns the solution and the number of inner iterations performed.
pub fn gmres<T: Real>(
    apply: impl Fn(&DVector<T>) -> DVector<T>,
    b: &DVector<T>,
    opts: GmresOptions,
) -> Result<(DVector<T>, usize)> {
    let n = b.len();
    let mut x = DVector::<T>::zeros(n);
    let bnorm = b.norm();
    if bnorm == T::zero() {
        return Ok((x, 0));
    }
    let tol = T::of(opts.rel_tol) * bnorm;
    let restart = opts.restart.clamp(1, n.max(1));
    let mut total = 0;
    while total < opts.max_iter {
        let r0 = b - apply(&x);
        let beta = r0.norm();
        if beta <= tol {
            return Ok((x, total));
        }
        let mut basis: Vec<DVector<T>> = vec![r0 / beta];
        let mut h = DMatrix::<T>::zeros(restart + 1, restart);
        let mut cs = vec![T::zero(); restart];
        let mut sn = vec![T::zero(); restart];
        let mut g = DVector::<T>::zeros(restart + 1);
        g[0] = beta;
        let mut k = 0;
        while k < restart && total < opts.max_iter {
            let mut w = apply(&basis[k]);
            for (i, q) in basis.iter().enumerate() {
                h[(i, k)] = w.dot(q);
                w.axpy(-h[(i, k)], q, T::one());
            }
            h[(k + 1, k)] = w.norm();
            for i in 0..k {
                let t = cs[i] * h[(i, k)] + sn[i] * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let denom = h[(k, k)].hypot(h[(k + 1, k)]);
            let (c, s) =
                if denom == T::zero() { (T::one(), T::zero()) } else { (h[(k, k)] / denom, h[(k + 1, k)] / denom) };
            cs[k] = c;
            sn[k] = s;
            h[(k, k)] = denom;
            h[(k + 1, k)] = T::zero();
            g[k + 1] = -s * g[k];
            g[k] *= c;
            let wnorm = w.norm();
            total += 1;
            k += 1;
            if g[k].abs() <= tol || wnorm == T::zero() {
                break;
            }
            basis.push(w / wnorm);
        }
        let mut y = DVector::<T>::zeros(k);
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for (i, q) in basis.iter().take(k).enumerate() {
            x.axpy(y[i], q, T::one());
        }
    }
    let res = (b - apply(&x)).norm();
    if res <= tol {
        return Ok((x, total));
    }
    Err(CtgError::Solver {
        reason: format!("GMRES did not converge in {} iterations", opts.max_iter),
        condition: (res / bnorm).to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn scalar_division() {
        let d = DMatrix::from_element(1, 1, -1.0);
        let z = Complex64::new(-3.0, -3f64.sqrt());
        let v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let expected = Complex64::new(-4.0, 3f64.sqrt()) / 19.0;
        for mode in [RealFormMode::Direct, RealFormMode::Iterative(GmresOptions::default())] {
            let w = real_equivalent_solve(&d, None, 1.0, z, &v, mode).unwrap();
            assert!((w[0] - expected).norm() < 1e-15, "{mode:?}: {}", w[0]);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let d = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, -1.0, -1.0]);
        let v = DVector::from_element(2, Complex64::new(0.0, 0.0));
        let w = real_equivalent_solve(&d, None, 0.5, Complex64::new(-3.0, -1.0), &v, RealFormMode::default()).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn positive_imaginary_rejected() {
        let d = DMatrix::from_element(1, 1, -1.0);
        let v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        assert!(real_equivalent_solve(&d, None, 1.0, Complex64::new(-3.0, 1.0), &v, RealFormMode::Direct).is_err());
    }

    #[test]
    fn gmres_solves_small_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, 2.0, 5.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, _) = gmres(|y| &a * y, &b, GmresOptions::default()).unwrap();
        assert!((&a * &x - &b).norm() < 1e-12);
    }
}
