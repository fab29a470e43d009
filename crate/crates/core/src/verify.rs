//! Self-check suite: exact identities, oracle equivalences, stability
//! properties and determinism, each reported as a named pass/fail line.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::integrator::{
    assemble_rhs, integrate, interior_coefficients, interior_coefficients_dissipative, nodal_step,
    nodal_step_pade_form, stage_weights, IntegrateOptions, SourceFn, SourceProjection, StepMode, TimeGrid,
};
use crate::linalg::{
    dense_full_system_solve, dense_shifted_solve, real_equivalent_solve, real_form_condition_number, DenseOperator,
    RealFormMode,
};
use crate::minors::{build_minor_table, identities, minor_oracle, psi, MinorTable, ORACLE_MAX_ORDER};
use crate::pade::{newton_polish, pade_numerator, pade_spectrum, polynomial_roots, MAX_ORDER};
use crate::problems::random_semidissipative_matrix;

/// Deliberate defects used to demonstrate that the suite detects failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    CorruptMinorTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Orders `1..=max_order` are swept (capped per check).
    pub max_order: usize,
    pub seed: u64,
    pub random_instances: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { max_order: 8, seed: 2024, random_instances: 50, fault: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<String>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(e) => (false, e.to_string()),
    };
    CheckResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn fail(msg: String) -> crate::CtgError {
    crate::CtgError::Internal(msg)
}

fn gaussian(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| -> f64 { StandardNormal.sample(rng) })
}

fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn rel_blocks(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / scale).fold(0.0, f64::max)
}

fn tables(max: usize, fault: Option<Fault>) -> Result<Vec<MinorTable>> {
    let mut out = (1..=max).map(build_minor_table).collect::<Result<Vec<_>>>()?;
    if fault == Some(Fault::CorruptMinorTable) {
        if let Some(t) = out.last_mut() {
            t.corrupt_for_fault_injection();
        }
    }
    Ok(out)
}

/// Run every check and return one result per check, in a fixed order.
pub fn run_verification(opts: &VerifyOptions) -> Vec<CheckResult> {
    let rmax = opts.max_order.clamp(1, MAX_ORDER);
    let mut results = Vec::new();
    let built = tables(rmax, opts.fault);
    let tabs = match &built {
        Ok(t) => t.as_slice(),
        Err(e) => {
            results.push(CheckResult { name: "minor-tables", passed: false, detail: e.to_string(), seconds: 0.0 });
            return results;
        }
    };

    results.push(timed("determinant-is-pade-denominator", || {
        for t in tabs {
            identities::determinant_is_pade_denominator(t)?;
        }
        Ok(format!("r = 1..{rmax}, exact"))
    }));
    results.push(timed("first-column-minor-identity", || {
        for t in tabs.iter().take(10) {
            identities::first_column_minor_identity(t)?;
        }
        Ok(format!("r = 1..{}, exact", rmax.min(10)))
    }));
    results.push(timed("corner-minor-identity", || {
        for t in tabs {
            identities::corner_minor_identity(t)?;
        }
        Ok(format!("r = 1..{rmax}, exact"))
    }));
    results.push(timed("chi-identities", || {
        for (i, t) in tabs.iter().enumerate() {
            identities::chi_square_identity(t)?;
            identities::chi_cross_identity(if i == 0 { None } else { Some(&tabs[i - 1]) }, t)?;
        }
        Ok(format!("r = 1..{rmax}, exact"))
    }));
    results.push(timed("minor-recurrence-oracle", || {
        let top = rmax.min(ORACLE_MAX_ORDER);
        for t in tabs.iter().take(top) {
            let oracle = minor_oracle(t.order())?;
            if t.phi_rows() != oracle.phi_rows() || t.varphi() != oracle.varphi() {
                return Err(fail(format!("recurrence and cofactor oracle differ at r = {}", t.order())));
            }
        }
        Ok(format!("r = 1..{top}, exact"))
    }));
    results.push(timed("pade-zeros", || {
        let mut worst_re = f64::NEG_INFINITY;
        let mut worst_res = 0.0f64;
        for r in 1..=MAX_ORDER {
            let s = pade_spectrum(r)?;
            worst_re = s.zeros().iter().map(|z| z.re).fold(worst_re, f64::max);
            worst_res = worst_res.max(s.max_residual());
        }
        if worst_re > -2.0 + 1e-9 || worst_res > 1e-12 {
            return Err(fail(format!("max Re = {worst_re}, max residual = {worst_res:e}")));
        }
        Ok(format!("max Re = {worst_re:.6}, max |P(zeta)| = {worst_res:.1e}"))
    }));
    results.push(timed("psi-roots-imaginary", || {
        let mut worst = 0.0f64;
        for t in tabs.iter().take(10) {
            let p = psi(t).to_f64();
            if p.degree() == 0 {
                continue;
            }
            let dp = p.derivative();
            for z in polynomial_roots(&p)? {
                worst = worst.max(newton_polish(&p, &dp, z)?.re.abs());
            }
        }
        if worst > 1e-8 {
            return Err(fail(format!("max |Re| = {worst:e}")));
        }
        Ok(format!("max |Re| = {worst:.1e}"))
    }));
    results.push(timed("scalar-pade-step", || {
        let op = DenseOperator::new(DMatrix::from_element(1, 1, -1.0))?;
        let mut worst = 0.0f64;
        for r in 1..=rmax {
            let p = pade_numerator(r)?;
            let expected = p.eval(-1.0) / p.eval(1.0);
            let rhs = assemble_rhs(&SourceProjection::zero(r, 1), &DVector::from_element(1, 1.0), 1.0, r)?;
            let y: f64 = nodal_step(&op, &*stage_weights(r)?, &rhs, 1.0)?[0];
            worst = worst.max(((y - expected) / expected).abs());
        }
        if worst > 1e-13 {
            return Err(fail(format!("max relative error {worst:e}")));
        }
        Ok(format!("max relative error {worst:.1e}"))
    }));
    results.push(timed("dense-oracle-equivalence", || oracle_equivalence(opts, rmax.min(6))));
    results.push(timed("real-form-agreement", || real_form_agreement(opts)));
    results.push(timed("real-form-condition-bound", || real_form_bound(opts)));
    results.push(timed("conservation-and-contractivity", || conservation(opts, rmax.min(6))));
    results.push(timed("stability-bound", || stability_bound(opts)));
    results.push(timed("parallel-determinism", || determinism(opts)));
    results
}

fn oracle_equivalence(opts: &VerifyOptions, rmax: usize) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut worst_a, mut worst_y, mut worst_diss, mut worst_pade) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for case in 0..opts.random_instances {
        let m = rng.random_range(1..=12);
        let r = 1 + case % rmax;
        let tau = if rng.random_bool(0.5) { 0.1 } else { 0.5 };
        let skew = [0.0, 0.5, 1.0][case % 3];
        let d = random_semidissipative_matrix(m, opts.seed.wrapping_add(case as u64), skew)?.0;
        let op = DenseOperator::new(d.clone())?;
        let w = stage_weights(r)?;
        let proj = SourceProjection { coeffs: (0..r).map(|_| gaussian(&mut rng, m)).collect() };
        let rhs = assemble_rhs(&proj, &gaussian(&mut rng, m), tau, r)?;
        let oracle = dense_full_system_solve(&d, None, tau, &rhs.blocks)?;
        let a = interior_coefficients(&op, &w, &rhs, tau)?;
        worst_a = worst_a.max(rel_blocks(&a, &oracle));
        let y_oracle = rhs.state() + (&d * &oracle[0] + &rhs.source_mean) * tau;
        let y = nodal_step(&op, &w, &rhs, tau)?;
        worst_y = worst_y.max(rel(&y, &y_oracle));
        worst_pade = worst_pade.max(rel(&nodal_step_pade_form(&op, &w, &rhs, tau)?, &y));
        if skew < 1.0 {
            let rest = interior_coefficients_dissipative(&op, &rhs, &a[0], tau)?;
            worst_diss = worst_diss.max(rel_blocks(&rest, &oracle[1..]));
        }
    }
    let worst = worst_a.max(worst_y).max(worst_diss).max(worst_pade);
    let detail = format!(
        "{} instances: coefficients {worst_a:.1e}, nodal {worst_y:.1e}, block elimination {worst_diss:.1e}, rational form {worst_pade:.1e}",
        opts.random_instances
    );
    if worst > 1e-9 {
        return Err(fail(detail));
    }
    Ok(detail)
}

fn real_form_agreement(opts: &VerifyOptions) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut worst = 0.0f64;
    for case in 0..10 {
        let m = rng.random_range(2..=12);
        let d = random_semidissipative_matrix(m, opts.seed.wrapping_add(100 + case), 0.5)?.0;
        for r in 2..=6 {
            for &z in pade_spectrum(r)?.zeros().iter().filter(|z| z.im < 0.0) {
                let v = DVector::from_fn(m, |_, _| {
                    Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                });
                let reference = dense_shifted_solve(&d, None, 0.5, z, &v)?;
                let direct = real_equivalent_solve(&d, None, 0.5, z, &v, RealFormMode::Direct)?;
                let iterative =
                    real_equivalent_solve(&d, None, 0.5, z, &v, RealFormMode::Iterative(Default::default()))?;
                let scale = reference.norm();
                worst = worst.max((direct - &reference).norm() / scale).max((iterative - &reference).norm() / scale);
            }
        }
    }
    if worst > 1e-9 {
        return Err(fail(format!("max relative difference {worst:e}")));
    }
    Ok(format!("max relative difference {worst:.1e}"))
}

fn real_form_bound(opts: &VerifyOptions) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xb0b);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = rng.random_range(2..=10);
        let b = DMatrix::from_fn(m, m, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let scale: f64 = 10f64.powf(rng.random_range(-2.0..2.0));
        let td = -(&b * b.transpose()) * scale;
        for r in 2..=6 {
            for &z in pade_spectrum(r)?.zeros().iter().filter(|z| z.im < 0.0) {
                worst = worst.max(real_form_condition_number(&td, 1.0, z)?);
            }
        }
    }
    let bound = 2f64.sqrt() + 1e-8;
    if worst > bound {
        return Err(fail(format!("max condition number {worst} exceeds {bound}")));
    }
    Ok(format!("max condition number {worst:.6}"))
}

fn conservation(opts: &VerifyOptions, rmax: usize) -> Result<String> {
    let m = 8;
    let skew = random_semidissipative_matrix(m, opts.seed, 1.0)?.0;
    let b = random_semidissipative_matrix(m, opts.seed + 1, 0.0)?.0;
    let sym = (&b + b.transpose()) * 0.5;
    let grid = TimeGrid::uniform(0.0, 10.0, 100)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let y0 = gaussian(&mut rng, m).normalize();
    let (mut drift, mut growth) = (0.0f64, f64::NEG_INFINITY);
    for r in 1..=rmax {
        let traj = integrate(&DenseOperator::new(skew.clone())?, r, &grid, &y0, None, &IntegrateOptions::default())?;
        for w in traj.nodal_values().windows(2) {
            drift = drift.max((w[1].norm() - w[0].norm()).abs());
        }
        let traj = integrate(&DenseOperator::new(sym.clone())?, r, &grid, &y0, None, &IntegrateOptions::default())?;
        for w in traj.nodal_values().windows(2) {
            growth = growth.max(w[1].norm() - w[0].norm());
        }
    }
    let detail = format!("max per-step norm drift {drift:.1e}, max growth {growth:.1e}");
    if drift > 1e-13 || growth > 1e-13 {
        return Err(fail(detail));
    }
    Ok(detail)
}

fn stability_bound(opts: &VerifyOptions) -> Result<String> {
    let m = 6;
    let t_end = 2.0;
    let grid = TimeGrid::uniform(0.0, t_end, 20)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x57ab);
    let y0 = gaussian(&mut rng, m);
    let dirs = gaussian(&mut rng, m);
    let src: Box<SourceFn<f64>> = Box::new(move |t: f64| dirs.map(|c| c * (3.0 * t).cos()));
    let (xs, ws) = crate::quadrature::gauss_legendre(8)?;
    let mut src_l2 = 0.0;
    for n in 0..grid.intervals() {
        let (t0, h) = (grid.nodes()[n], grid.step(n) / 2.0);
        for (x, w) in xs.iter().zip(&ws) {
            src_l2 += h * w * src(t0 + h * (1.0 + x)).norm_squared();
        }
    }
    let src_l2 = src_l2.sqrt();
    let skew = random_semidissipative_matrix(m, opts.seed + 7, 1.0)?.0;
    let b = random_semidissipative_matrix(m, opts.seed + 8, 0.0)?.0;
    let sym = (&b + b.transpose()) * 0.5;
    let mut worst = 0.0f64;
    for d in [skew, sym] {
        for r in 1..=4 {
            let opts = IntegrateOptions { want_interior: true, ..Default::default() };
            let traj = integrate(&DenseOperator::new(d.clone())?, r, &grid, &y0, Some(&*src), &opts)?;
            let c = (traj.l2_norm()? - t_end.sqrt() * y0.norm()) / (t_end * src_l2);
            worst = worst.max(c);
        }
    }
    if worst > 10.0 {
        return Err(fail(format!("measured constant {worst:.3} exceeds 10")));
    }
    Ok(format!("measured constant {worst:.3}"))
}

fn determinism(opts: &VerifyOptions) -> Result<String> {
    let m = 10;
    let d = random_semidissipative_matrix(m, opts.seed + 3, 0.4)?.0;
    let op = DenseOperator::new(d)?;
    let grid = TimeGrid::uniform(0.0, 1.0, 16)?;
    let y0 = DVector::from_fn(m, |i, _| (i as f64 + 1.0).sin());
    let src: Box<SourceFn<f64>> = Box::new(move |t: f64| DVector::from_fn(m, |i, _| (t * (i + 1) as f64).cos()));
    for mode in [StepMode::Spectral, StepMode::Dissipative, StepMode::PadeForm] {
        let run = |threads| {
            let o = IntegrateOptions { mode, want_interior: true, quadrature_points: None, threads: Some(threads) };
            integrate(&op, 5, &grid, &y0, Some(&*src), &o)
        };
        let (a, b) = (run(1)?, run(4)?);
        if a != b {
            return Err(fail(format!("{mode:?}: trajectories differ between 1 and 4 threads")));
        }
    }
    Ok("bitwise identical for 1 and 4 threads".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let results = run_verification(&VerifyOptions { max_order: 4, random_instances: 12, ..Default::default() });
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn corrupted_table_is_caught() {
        let opts = VerifyOptions {
            max_order: 3,
            random_instances: 3,
            fault: Some(Fault::CorruptMinorTable),
            ..Default::default()
        };
        let results = run_verification(&opts);
        let first = results.iter().find(|r| r.name == "determinant-is-pade-denominator").unwrap();
        assert!(!first.passed);
    }
}
