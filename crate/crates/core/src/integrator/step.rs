use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{arg_err, CtgError, Result};
use crate::linalg::{apply_d_complex, block_tridiagonal_solve, BlockTridiagonalSystem, LinearOperator};
use crate::scalar::{cplx_of, Cplx, Real};
use crate::RealPolynomial;

use super::grid::RhsBlocks;
use super::weights::StageWeights;

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check<T: Real, O: LinearOperator<T> + ?Sized>(op: &O, w: &StageWeights, rhs: &RhsBlocks<T>, tau: T) -> Result<()> {
    if rhs.order() != w.order() {
        return arg_err(format!("right-hand side has order {}, weights have order {}", rhs.order(), w.order()));
    }
    if let Some(b) = rhs.blocks.iter().chain(std::iter::once(&rhs.source_mean)).find(|b| b.len() != op.dim()) {
        return Err(CtgError::Dimension { expected: op.dim(), got: b.len() });
    }
    if tau.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return arg_err("step size must be positive");
    }
    Ok(())
}

/// `M⁻¹b_0, …, M⁻¹b_{r-1}, Y_n`; the blocks themselves when `M = I`.
fn mass_scaled<T: Real, O: LinearOperator<T> + ?Sized>(op: &O, rhs: &RhsBlocks<T>) -> Result<Vec<DVector<T>>> {
    let r = rhs.order();
    if !op.has_mass() {
        return Ok(rhs.blocks.clone());
    }
    let mut out = rhs.blocks[..r].iter().map(|b| op.solve_mass(b)).collect::<Result<Vec<_>>>()?;
    out.push(rhs.state().clone());
    Ok(out)
}

/// Right-hand side blocks of the homogenized pencil: `b_0..b_{r-1}, M·Y_n`.
fn pencil_blocks<T: Real, O: LinearOperator<T> + ?Sized>(op: &O, rhs: &RhsBlocks<T>) -> Vec<DVector<T>> {
    let mut out = rhs.blocks.clone();
    if op.has_mass() {
        let r = rhs.order();
        out[r] = op.apply_mass(rhs.state());
    }
    out
}

fn combine<T: Real>(blocks: &[DVector<T>], coeff: impl Fn(usize) -> Cplx<T>) -> DVector<Cplx<T>> {
    let mut acc = DVector::<Cplx<T>>::zeros(blocks[0].len());
    for (k, b) in blocks.iter().enumerate() {
        let c = coeff(k + 1);
        if c.re == T::zero() && c.im == T::zero() {
            continue;
        }
        acc.zip_apply(b, |a, x| *a += c * x);
    }
    acc
}

/// Advance the nodal value across one interval.
///
/// Each conjugate group of Padé zeros contributes one shifted solve; the
/// solves run concurrently and are summed in a fixed order.
pub fn nodal_step<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    rhs: &RhsBlocks<T>,
    tau: T,
) -> Result<DVector<T>> {
    check(op, w, rhs, tau)?;
    let r = w.order();
    let scaled = mass_scaled(op, rhs)?;
    let stages: Vec<DVector<T>> = (0..w.shifts().len())
        .into_par_iter()
        .map(|g| -> Result<DVector<T>> {
            let u = combine(&scaled, |k| cplx_of::<T>(w.residue(k, 1, g) * sign(k + 1)));
            let v = apply_d_complex(op, &u) * Cplx::new(tau, T::zero());
            let sol = op.shifted_solve(tau, cplx_of(w.shifts()[g]), &v)?;
            Ok(sol.map(|z| z.re * T::of(w.multiplicity(g))))
        })
        .collect::<Result<_>>()?;
    let mut y = rhs.state().clone();
    for s in &stages {
        y += s;
    }
    let polynomial_part: Vec<(usize, f64)> =
        (1..=r + 1).map(|k| (k, w.constant(k, 1) * sign(k + 1))).filter(|&(_, c)| c != 0.0).collect();
    if !polynomial_part.is_empty() {
        let mut acc = DVector::<T>::zeros(op.dim());
        for (k, c) in polynomial_part {
            acc.axpy(T::of(c), &scaled[k - 1], T::one());
        }
        let d_acc = op.apply_d(&acc) * tau;
        y += op.solve_mass(&d_acc)?;
    }
    let source = op.solve_mass(&rhs.source_mean)?;
    y.axpy(tau, &source, T::one());
    Ok(y)
}

/// Nodal step for `M Y' = D Y + R`; coincides with [`nodal_step`].
pub fn mass_matrix_nodal_step<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    rhs: &RhsBlocks<T>,
    tau: T,
) -> Result<DVector<T>> {
    nodal_step(op, w, rhs, tau)
}

fn poly_times_vector<T: Real>(p: &RealPolynomial, d: &DMatrix<T>, tau: T, v: &DVector<T>) -> DVector<T> {
    let c = p.coeffs();
    let mut acc = v * T::of(c[c.len() - 1]);
    for &ci in c.iter().rev().skip(1) {
        acc = d * &acc * tau;
        acc.axpy(T::of(ci), v, T::one());
    }
    acc
}

fn poly_matrix<T: Real>(p: &RealPolynomial, x: &DMatrix<T>) -> DMatrix<T> {
    let n = x.nrows();
    let c = p.coeffs();
    let eye = DMatrix::<T>::identity(n, n);
    let mut acc = &eye * T::of(c[c.len() - 1]);
    for &ci in c.iter().rev().skip(1) {
        acc = x * acc + &eye * T::of(ci);
    }
    acc
}

/// Nodal step through the rational matrix functions
/// `Y_{n+1} = P_r(τD)P_r(-τD)⁻¹ Y_n + Σ_k (-1)^{k+1} τD φ_{k1}(τD) P_r(-τD)⁻¹ b_{k-1} + τR_0`.
///
/// Needs a dense `D` and no mass matrix.
pub fn nodal_step_pade_form<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    rhs: &RhsBlocks<T>,
    tau: T,
) -> Result<DVector<T>> {
    check(op, w, rhs, tau)?;
    if op.has_mass() {
        return arg_err("the rational nodal formula is only available without a mass matrix");
    }
    let d =
        op.dense_d().ok_or_else(|| CtgError::Argument("the rational nodal formula needs a dense operator".into()))?;
    let r = w.order();
    let p = w.spectrum().numerator();
    let mut numer = poly_times_vector(p, d, tau, rhs.state());
    for k in 1..=r {
        let t = poly_times_vector(w.first_column_minor(k), d, tau, &rhs.blocks[k - 1]);
        numer.axpy(T::of(sign(k + 1)), &(d * t * tau), T::one());
    }
    let denom = poly_matrix(&p.reflect(), &(d * tau));
    let mut y = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| CtgError::Solver { reason: "singular denominator matrix".into(), condition: f64::INFINITY })?;
    y.axpy(tau, &rhs.source_mean, T::one());
    Ok(y)
}

fn coefficient_terms<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    scaled: &[DVector<T>],
    pencil: &[DVector<T>],
    tau: T,
    columns: &[usize],
) -> Result<Vec<DVector<T>>> {
    let groups = w.shifts().len();
    let r = w.order();
    let solves: Vec<DVector<T>> = columns
        .iter()
        .flat_map(|&i| (0..groups).map(move |g| (i, g)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, g)| -> Result<DVector<T>> {
            let u = combine(pencil, |k| cplx_of::<T>(w.residue(k, i, g) * sign(i + k)));
            let sol = op.shifted_solve(tau, cplx_of(w.shifts()[g]), &u)?;
            Ok(sol.map(|z| z.re * T::of(w.multiplicity(g))))
        })
        .collect::<Result<_>>()?;
    Ok(columns
        .iter()
        .enumerate()
        .map(|(c, &i)| {
            let mut a = DVector::<T>::zeros(op.dim());
            for k in 1..=r + 1 {
                let q = w.constant(k, i);
                if q != 0.0 {
                    a.axpy(T::of(q * sign(i + k)), &scaled[k - 1], T::one());
                }
            }
            for s in &solves[c * groups..(c + 1) * groups] {
                a += s;
            }
            a
        })
        .collect())
}

/// All Legendre coefficients `a_0..a_r` of the local solution.
///
/// The `(r+1)·groups` shifted solves are mutually independent.
pub fn interior_coefficients<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    rhs: &RhsBlocks<T>,
    tau: T,
) -> Result<Vec<DVector<T>>> {
    check(op, w, rhs, tau)?;
    let scaled = mass_scaled(op, rhs)?;
    let pencil = pencil_blocks(op, rhs);
    let columns: Vec<usize> = (1..=w.order() + 1).collect();
    coefficient_terms(op, w, &scaled, &pencil, tau, &columns)
}

/// The mean `a_0` alone.
pub fn leading_coefficient<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    w: &StageWeights,
    rhs: &RhsBlocks<T>,
    tau: T,
) -> Result<DVector<T>> {
    check(op, w, rhs, tau)?;
    let scaled = mass_scaled(op, rhs)?;
    let pencil = pencil_blocks(op, rhs);
    Ok(coefficient_terms(op, w, &scaled, &pencil, tau, &[1])?.remove(0))
}

/// `a_1..a_r` from a known `a_0` through block tridiagonal elimination.
///
/// Returns [`CtgError::PivotBreakdown`] when a pivot block is too badly
/// conditioned; [`interior_coefficients`] is the natural fallback.
pub fn interior_coefficients_dissipative<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    rhs: &RhsBlocks<T>,
    a0: &DVector<T>,
    tau: T,
) -> Result<Vec<DVector<T>>> {
    let d = op.dense_d().ok_or_else(|| CtgError::Argument("block elimination needs a dense operator".into()))?;
    let r = rhs.order();
    let sys = BlockTridiagonalSystem::from_ctg(d, op.dense_mass(), tau, &rhs.blocks[..r], a0)?;
    block_tridiagonal_solve(&sys)
}
