//! Temporal convergence measurement and order-selection advice.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{arg_err, CtgError, Result};
use crate::integrator::{integrate, CtgTrajectory, IntegrateOptions, StepMode, TimeGrid};
use crate::problems::TestProblem;
use crate::scalar::Real;

/// Errors below this many machine epsilons of the solution scale count as
/// round-off.
pub const ROUND_OFF_ULPS: f64 = 450.0;

/// `log2(e_{k-1}/e_k)` for consecutive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Order from the last consecutive pair whose finer error is still above
/// `floor`; `None` if no such pair exists.
pub fn finest_reliable_order(errors: &[f64], floor: f64) -> Option<f64> {
    errors.windows(2).rev().find(|w| w[1] > floor && w[0] > 0.0).map(|w| (w[0] / w[1]).log2())
}

/// `‖Y_N - Y(t_N)‖₂`.
pub fn nodal_error<T: Real>(traj: &CtgTrajectory<T>, exact: &dyn Fn(T) -> DVector<T>) -> f64 {
    let t_end = traj.grid().end();
    (traj.final_value() - exact(t_end)).norm().to_f64_lossy()
}

/// `max ‖Y_r(t) - Y(t)‖₂` over `t = t_n + kτ_n/samples`, `k = 0..samples`.
pub fn max_in_time_error<T: Real>(
    traj: &CtgTrajectory<T>,
    exact: &dyn Fn(T) -> DVector<T>,
    samples: usize,
) -> Result<f64> {
    let grid = traj.grid();
    let samples = samples.max(1);
    let mut worst = 0.0f64;
    for n in 0..grid.intervals() {
        let (t0, tau) = (grid.nodes()[n], grid.step(n));
        for k in 0..=samples {
            let t = if k == samples { grid.nodes()[n + 1] } else { t0 + tau * T::of(k as f64 / samples as f64) };
            let e = (traj.evaluate(t)? - exact(t)).norm().to_f64_lossy();
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub tau: f64,
    pub nodal_error: f64,
    pub max_error: f64,
    pub nodal_order: Option<f64>,
    pub max_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub order: usize,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Largest nodal norm of the exact solution.
    pub solution_scale: f64,
    /// Absolute error level below which orders are not trusted.
    pub round_off_floor: f64,
}

impl ConvergenceReport {
    pub fn nodal_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.nodal_error).collect()
    }

    pub fn max_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_error).collect()
    }

    pub fn finest_nodal_order(&self) -> Option<f64> {
        finest_reliable_order(&self.nodal_errors(), self.round_off_floor)
    }

    pub fn finest_max_order(&self) -> Option<f64> {
        finest_reliable_order(&self.max_errors(), self.round_off_floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub order: usize,
    pub t_end: f64,
    pub initial_steps: usize,
    pub refinements: usize,
    pub mode: StepMode,
    pub samples_per_interval: usize,
    pub threads: Option<usize>,
}

impl Default for ConvergenceSetup {
    fn default() -> Self {
        Self {
            order: 2,
            t_end: 1.0,
            initial_steps: 4,
            refinements: 5,
            mode: StepMode::Spectral,
            samples_per_interval: 10,
            threads: None,
        }
    }
}

/// Integrate on `initial_steps · 2^k` uniform steps for `k = 0..=refinements`
/// and record nodal and max-in-time errors.
pub fn convergence_study<T: Real>(problem: &TestProblem<T>, setup: &ConvergenceSetup) -> Result<ConvergenceReport> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| CtgError::Argument(format!("problem {} has no exact solution", problem.name)))?;
    if setup.initial_steps == 0 || setup.refinements == 0 {
        return arg_err("need at least one step and one refinement");
    }
    let opts =
        IntegrateOptions { mode: setup.mode, want_interior: true, quadrature_points: None, threads: setup.threads };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(setup.refinements + 1);
    let mut scale = 0.0f64;
    for k in 0..=setup.refinements {
        let steps = setup.initial_steps << k;
        let grid = TimeGrid::uniform(T::zero(), T::of(setup.t_end), steps)?;
        let traj = integrate(&problem.operator, setup.order, &grid, &problem.y0, problem.source_fn(), &opts)?;
        for &t in grid.nodes() {
            scale = scale.max(exact(t).norm().to_f64_lossy());
        }
        let nodal = nodal_error(&traj, exact.as_ref());
        let max = max_in_time_error(&traj, exact.as_ref(), setup.samples_per_interval)?;
        let (nodal_order, max_order) = match rows.last() {
            Some(prev) => (Some((prev.nodal_error / nodal).log2()), Some((prev.max_error / max).log2())),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            steps,
            tau: setup.t_end / steps as f64,
            nodal_error: nodal,
            max_error: max,
            nodal_order,
            max_order,
        });
    }
    Ok(ConvergenceReport {
        problem: problem.name.clone(),
        order: setup.order,
        t_end: setup.t_end,
        rows,
        solution_scale: scale,
        round_off_floor: ROUND_OFF_ULPS * T::eps().to_f64_lossy() * scale,
    })
}

/// Largest integer strictly below `a`.
fn strict_floor(a: f64) -> i64 {
    a.ceil() as i64 - 1
}

/// Order minimizing the sequential cost `r·β^{1/r}` for nodal accuracy:
/// `⌊ln β⌋ + 1`, at least 1.
pub fn sequential_nodal_order(beta: f64) -> usize {
    (strict_floor(beta.ln()) + 1).max(1) as usize
}

/// Continuous minimizer of `r·γ^{1/(r+1)}`; `None` when `ln γ < 4`.
pub fn r_star(gamma: f64) -> Option<f64> {
    let l = gamma.ln();
    (l >= 4.0).then(|| (-(2.0 - l) + ((2.0 - l).powi(2) - 4.0).max(0.0).sqrt()) / 2.0)
}

/// Continuous minimizer of `r(r+1)·μ^{1/(r+1)}`; `None` when `ln μ < 6`.
pub fn r_double_star(mu: f64) -> Option<f64> {
    let l = mu.ln();
    (l >= 6.0).then(|| (-(3.0 - l) + ((3.0 - l).powi(2) - 8.0).max(0.0).sqrt()) / 4.0)
}

/// `max(1, ⌊x⌋ + 1)` applied to an optional continuous minimizer.
pub fn integer_order(x: Option<f64>) -> usize {
    x.map_or(1, |v| (strict_floor(v) + 1).max(1) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderAdvice {
    pub nodal: usize,
    pub uniform_dissipative: usize,
    pub uniform_general: usize,
    pub r_star: Option<f64>,
    pub r_double_star: Option<f64>,
}

/// Advisory orders for mesh size `h` and spatial order `p`, using
/// `β = h^{-(p+1)/2}` and `γ = μ = h^{-(p+1)}`.
pub fn order_advice(h: f64, p: usize) -> Result<OrderAdvice> {
    if !(h > 0.0 && h < 1.0) {
        return arg_err("mesh size must lie in (0, 1)");
    }
    let k = (p + 1) as f64;
    let beta = h.powf(-k / 2.0);
    let gamma = h.powf(-k);
    let rs = r_star(gamma);
    let rss = r_double_star(gamma);
    Ok(OrderAdvice {
        nodal: sequential_nodal_order(beta),
        uniform_dissipative: integer_order(rs),
        uniform_general: integer_order(rss),
        r_star: rs,
        r_double_star: rss,
    })
}
