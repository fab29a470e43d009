use nalgebra::DVector;

use crate::error::{arg_err, CtgError, Result};
use crate::quadrature::{gauss_legendre, legendre_values};
use crate::scalar::Real;

/// Time-dependent source term `t ↦ R(t)`.
pub type SourceFn<T> = dyn Fn(T) -> DVector<T> + Send + Sync;

/// Partition `t_0 < t_1 < … < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T: Real> {
    nodes: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 {
            return arg_err("a time grid needs at least two nodes");
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return arg_err("time grid nodes must be finite");
        }
        if let Some(n) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return arg_err(format!("time grid is not strictly increasing at node {}", n + 1));
        }
        Ok(Self { nodes })
    }

    /// `n` equal steps covering `[t0, t_end]`.
    pub fn uniform(t0: T, t_end: T, n: usize) -> Result<Self> {
        if n == 0 {
            return arg_err("number of steps must be at least 1");
        }
        let tau = (t_end - t0) / T::of(n as f64);
        let mut nodes: Vec<T> = (0..n).map(|i| t0 + tau * T::of(i as f64)).collect();
        nodes.push(t_end);
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self, n: usize) -> T {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn start(&self) -> T {
        self.nodes[0]
    }

    pub fn end(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interval index holding `t`, with intervals closed on the right.
    pub fn locate(&self, t: T) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return arg_err(format!("t = {:e} lies outside [{:e}, {:e}]", t, self.start(), self.end()));
        }
        let idx = self.nodes.partition_point(|&s| s < t);
        Ok(idx.saturating_sub(1).min(self.intervals() - 1))
    }
}

/// Legendre coefficients `R_0..R_{r-1}` of the projected source on one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceProjection<T: Real> {
    pub coeffs: Vec<DVector<T>>,
}

impl<T: Real> SourceProjection<T> {
    pub fn zero(r: usize, dim: usize) -> Self {
        Self { coeffs: vec![DVector::zeros(dim); r] }
    }
}

/// Default number of Gauss points for source projection.
pub fn default_quadrature_points(r: usize) -> usize {
    (r + 2).max(6)
}

/// Project `source` onto polynomials of degree `r-1` on `[t0, t1]`.
pub fn project_source<T: Real>(source: &SourceFn<T>, t0: T, t1: T, r: usize, q: usize) -> Result<SourceProjection<T>> {
    if r == 0 {
        return arg_err("order must be at least 1");
    }
    if q < r + 1 {
        return arg_err(format!("{q} quadrature points are too few for order {r}"));
    }
    if t1 <= t0 {
        return arg_err("interval must have positive length");
    }
    let (xs, ws) = gauss_legendre(q)?;
    let half = (t1 - t0) / T::of(2.0);
    let mid = (t1 + t0) / T::of(2.0);
    let mut coeffs: Option<Vec<DVector<T>>> = None;
    for (&x, &w) in xs.iter().zip(&ws) {
        let xi = T::of(x);
        let value = source(mid + half * xi);
        let acc = coeffs.get_or_insert_with(|| vec![DVector::zeros(value.len()); r]);
        if value.len() != acc[0].len() {
            return Err(CtgError::Dimension { expected: acc[0].len(), got: value.len() });
        }
        let basis = legendre_values(r - 1, xi);
        for (j, c) in acc.iter_mut().enumerate() {
            c.axpy(T::of(w) * basis[j], &value, T::one());
        }
    }
    let mut coeffs = coeffs.expect("at least one quadrature point");
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c *= T::of((2 * j + 1) as f64 / 2.0);
    }
    Ok(SourceProjection { coeffs })
}

/// Right-hand side `b_0..b_r` of one step together with the source mean `R_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsBlocks<T: Real> {
    pub blocks: Vec<DVector<T>>,
    pub source_mean: DVector<T>,
}

impl<T: Real> RhsBlocks<T> {
    pub fn order(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn state(&self) -> &DVector<T> {
        &self.blocks[self.blocks.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.source_mean.len()
    }
}

/// `b_{k-1} = -(τ/2)(R_{k-1}/(2k-1) - R_{k+1}/(2k+3))` with `R_j = 0` for
/// `j ≥ r`, and `b_r = Y_n`.
pub fn assemble_rhs<T: Real>(proj: &SourceProjection<T>, yn: &DVector<T>, tau: T, r: usize) -> Result<RhsBlocks<T>> {
    if proj.coeffs.len() != r {
        return arg_err(format!("projection has {} modes, order is {r}", proj.coeffs.len()));
    }
    if let Some(c) = proj.coeffs.iter().find(|c| c.len() != yn.len()) {
        return Err(CtgError::Dimension { expected: yn.len(), got: c.len() });
    }
    let half = tau / T::of(2.0);
    let mut blocks = Vec::with_capacity(r + 1);
    for k in 1..=r {
        let mut b = &proj.coeffs[k - 1] * (-half / T::of((2 * k - 1) as f64));
        if k + 1 < r {
            b.axpy(half / T::of((2 * k + 3) as f64), &proj.coeffs[k + 1], T::one());
        }
        blocks.push(b);
    }
    blocks.push(yn.clone());
    Ok(RhsBlocks { blocks, source_mean: proj.coeffs[0].clone() })
}
