#![allow(dead_code)]

use ctg::integrator::{assemble_rhs, RhsBlocks, SourceProjection};
use ctg::problems::random_semidissipative_matrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    DVector::from_fn(m, |_, _| -> f64 { StandardNormal.sample(rng) })
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| -> f64 { StandardNormal.sample(rng) })
}

/// Semi-dissipative `D` (strictly dissipative when `skew < 1`).
pub fn random_d(seed: u64, m: usize, skew: f64) -> DMatrix<f64> {
    random_semidissipative_matrix(m, seed, skew).unwrap().0
}

/// Random SPD matrix with spectrum in `[1, 1.5]`.
pub fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, m, m);
    let qq = &q * q.transpose();
    let qq = (&qq + qq.transpose()) * 0.5;
    let norm = qq.clone().symmetric_eigenvalues().amax();
    DMatrix::identity(m, m) + qq * (0.5 / norm)
}

/// Random right-hand side from random Legendre source modes and state.
pub fn random_rhs(rng: &mut ChaCha8Rng, m: usize, r: usize, tau: f64) -> RhsBlocks<f64> {
    let proj = SourceProjection { coeffs: (0..r).map(|_| gaussian_vector(rng, m)).collect() };
    let yn = gaussian_vector(rng, m);
    assemble_rhs(&proj, &yn, tau, r).unwrap()
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn max_rel_err(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / scale).fold(0.0, f64::max)
}

pub fn sym_sqrt(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let s = eig.eigenvalues.map(f64::sqrt);
    let v = &eig.eigenvectors;
    let half = v * DMatrix::from_diagonal(&s) * v.transpose();
    let inv_half = v * DMatrix::from_diagonal(&s.map(|x| 1.0 / x)) * v.transpose();
    (half, inv_half)
}

pub fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}
