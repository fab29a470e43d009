//! The CTG time stepper.
//!
//! On each interval `I_n = [t_n, t_{n+1}]` the discrete solution is a
//! polynomial `Σ_j a_j L̃_j(t)` in shifted Legendre polynomials. The nodal
//! sweep advances `Y(t_n) → Y(t_{n+1})` with one shifted solve per Padé zero
//! group; the interior coefficients are then recovered independently on
//! every interval.

mod grid;
mod step;
mod trajectory;
mod weights;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, CtgError, Result};
use crate::linalg::LinearOperator;
use crate::pade::{check_order, MAX_ORDER};
use crate::scalar::Real;

pub use grid::{
    assemble_rhs, default_quadrature_points, project_source, RhsBlocks, SourceFn, SourceProjection, TimeGrid,
};
pub use step::{
    interior_coefficients, interior_coefficients_dissipative, leading_coefficient, mass_matrix_nodal_step, nodal_step,
    nodal_step_pade_form,
};
pub use trajectory::CtgTrajectory;
pub use weights::{stage_weights, StageWeights};

/// Which route computes the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// Partial fractions over the Padé zeros for nodes and interior.
    #[default]
    Spectral,
    /// Partial fractions for the nodes, block tridiagonal elimination for the interior.
    Dissipative,
    /// Rational matrix functions for the nodes (dense operators only).
    PadeForm,
}

impl std::str::FromStr for StepMode {
    type Err = CtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "dissipative" => Ok(Self::Dissipative),
            "pade-form" => Ok(Self::PadeForm),
            other => arg_err(format!("unknown mode '{other}' (expected spectral, dissipative or pade-form)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntegrateOptions {
    pub mode: StepMode,
    pub want_interior: bool,
    /// Gauss points per interval for source projection.
    pub quadrature_points: Option<usize>,
    /// Size of a dedicated thread pool; the global pool when `None`.
    pub threads: Option<usize>,
}

/// Integrate `M Y' = D Y + R` over `grid` from `y0` with order `r`.
pub fn integrate<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    r: usize,
    grid: &TimeGrid<T>,
    y0: &DVector<T>,
    source: Option<&SourceFn<T>>,
    opts: &IntegrateOptions,
) -> Result<CtgTrajectory<T>> {
    check_order(r, MAX_ORDER)?;
    if y0.len() != op.dim() {
        return Err(CtgError::Dimension { expected: op.dim(), got: y0.len() });
    }
    match opts.threads {
        Some(0) => arg_err("thread count must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CtgError::Internal(format!("thread pool: {e}")))?
            .install(|| run(op, r, grid, y0, source, opts)),
        None => run(op, r, grid, y0, source, opts),
    }
}

fn run<T: Real, O: LinearOperator<T> + ?Sized>(
    op: &O,
    r: usize,
    grid: &TimeGrid<T>,
    y0: &DVector<T>,
    source: Option<&SourceFn<T>>,
    opts: &IntegrateOptions,
) -> Result<CtgTrajectory<T>> {
    let weights = stage_weights(r)?;
    let q = opts.quadrature_points.unwrap_or_else(|| default_quadrature_points(r));
    let nodes = grid.nodes();
    let projections: Vec<SourceProjection<T>> = match source {
        Some(f) => (0..grid.intervals())
            .into_par_iter()
            .map(|n| project_source(f, nodes[n], nodes[n + 1], r, q))
            .collect::<Result<_>>()?,
        None => vec![SourceProjection::zero(r, op.dim()); grid.intervals()],
    };

    let mut nodal = Vec::with_capacity(nodes.len());
    nodal.push(y0.clone());
    for (n, proj) in projections.iter().enumerate() {
        let tau = grid.step(n);
        let rhs = assemble_rhs(proj, &nodal[n], tau, r)?;
        let next = match opts.mode {
            StepMode::PadeForm => nodal_step_pade_form(op, &weights, &rhs, tau)?,
            StepMode::Spectral | StepMode::Dissipative => nodal_step(op, &weights, &rhs, tau)?,
        };
        nodal.push(next);
    }

    let mut fallbacks = 0;
    let interior = if opts.want_interior {
        let per_interval: Vec<(Vec<DVector<T>>, bool)> = projections
            .par_iter()
            .enumerate()
            .map(|(n, proj)| -> Result<_> {
                let tau = grid.step(n);
                let rhs = assemble_rhs(proj, &nodal[n], tau, r)?;
                if opts.mode == StepMode::Dissipative {
                    let a0 = leading_coefficient(op, &weights, &rhs, tau)?;
                    match interior_coefficients_dissipative(op, &rhs, &a0, tau) {
                        Ok(rest) => return Ok((std::iter::once(a0).chain(rest).collect(), false)),
                        Err(CtgError::PivotBreakdown { .. }) => {}
                        Err(e) => return Err(e),
                    }
                    return Ok((interior_coefficients(op, &weights, &rhs, tau)?, true));
                }
                Ok((interior_coefficients(op, &weights, &rhs, tau)?, false))
            })
            .collect::<Result<_>>()?;
        fallbacks = per_interval.iter().filter(|(_, f)| *f).count();
        Some(per_interval.into_iter().map(|(c, _)| c).collect())
    } else {
        None
    };

    Ok(CtgTrajectory { grid: grid.clone(), order: r, nodal, interior, fallbacks })
}
