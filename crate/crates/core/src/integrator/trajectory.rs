use nalgebra::DVector;

use crate::error::{CtgError, Result};
use crate::quadrature::{gauss_legendre, legendre_values};
use crate::scalar::Real;

use super::grid::TimeGrid;

/// Piecewise polynomial solution produced by [`super::integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CtgTrajectory<T: Real> {
    pub(crate) grid: TimeGrid<T>,
    pub(crate) order: usize,
    pub(crate) nodal: Vec<DVector<T>>,
    pub(crate) interior: Option<Vec<Vec<DVector<T>>>>,
    pub(crate) fallbacks: usize,
}

impl<T: Real> CtgTrajectory<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `Y(t_0), …, Y(t_N)`.
    pub fn nodal_values(&self) -> &[DVector<T>] {
        &self.nodal
    }

    pub fn final_value(&self) -> &DVector<T> {
        &self.nodal[self.nodal.len() - 1]
    }

    pub fn has_interior(&self) -> bool {
        self.interior.is_some()
    }

    /// `a_0..a_r` on interval `n`, when reconstructed.
    pub fn coefficients(&self, n: usize) -> Option<&[DVector<T>]> {
        self.interior.as_ref().and_then(|c| c.get(n)).map(Vec::as_slice)
    }

    /// Intervals where block elimination broke down and the spectral
    /// reconstruction was used instead.
    pub fn dissipative_fallbacks(&self) -> usize {
        self.fallbacks
    }

    fn interval_value(&self, n: usize, xi: T) -> Result<DVector<T>> {
        let coeffs = self
            .coefficients(n)
            .ok_or_else(|| CtgError::State("interior coefficients were not reconstructed".into()))?;
        let basis = legendre_values(self.order, xi);
        let mut y = DVector::zeros(coeffs[0].len());
        for (a, l) in coeffs.iter().zip(basis) {
            y.axpy(l, a, T::one());
        }
        Ok(y)
    }

    /// `Y(t)` for `t` in `[t_0, t_N]`. At grid nodes the stored nodal value
    /// is returned unchanged.
    pub fn evaluate(&self, t: T) -> Result<DVector<T>> {
        let n = self.grid.locate(t)?;
        if self.interior.is_none() {
            return Err(CtgError::State("interior coefficients were not reconstructed".into()));
        }
        let nodes = self.grid.nodes();
        if let Some(i) = nodes.iter().position(|&s| s == t) {
            return Ok(self.nodal[i].clone());
        }
        let xi = (t + t - nodes[n] - nodes[n + 1]) / self.grid.step(n);
        self.interval_value(n, xi)
    }

    /// `‖Y‖_{L²(t_0, t_N)}` by Gauss quadrature on each interval.
    pub fn l2_norm(&self) -> Result<T> {
        let (xs, ws) = gauss_legendre(self.order + 2)?;
        let mut total = T::zero();
        for n in 0..self.grid.intervals() {
            let half = self.grid.step(n) / T::of(2.0);
            for (&x, &w) in xs.iter().zip(&ws) {
                let y = self.interval_value(n, T::of(x))?;
                total += half * T::of(w) * y.norm_squared();
            }
        }
        Ok(total.sqrt())
    }
}
