//! Model systems with closed-form solutions.
//!
//! Spatial operators are periodic finite-difference circulants, so the exact
//! solution of the semi-discrete system is available and any measured error
//! is purely temporal.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::integrator::SourceFn;
use crate::linalg::{max_symmetric_part_eigenvalue, DenseOperator, LinearOperator};
use crate::scalar::Real;

/// Exact solution `t ↦ Y(t)`.
pub type ExactFn<T> = dyn Fn(T) -> DVector<T> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemClass {
    /// `D + Dᵀ` negative definite.
    Dissipative,
    /// `D + Dᵀ = 0`.
    Skew,
    /// `D + Dᵀ` negative semidefinite.
    SemiDissipative,
    /// `M Y' = D Y + R` with a nontrivial mass matrix.
    MassMatrix,
}

#[derive(Clone)]
pub struct TestProblem<T: Real> {
    pub name: String,
    pub operator: DenseOperator<T>,
    pub y0: DVector<T>,
    pub source: Option<Arc<SourceFn<T>>>,
    pub exact: Option<Arc<ExactFn<T>>>,
    pub class: ProblemClass,
}

impl<T: Real> std::fmt::Debug for TestProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("dim", &self.operator.dim())
            .field("class", &self.class)
            .field("has_source", &self.source.is_some())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Real> TestProblem<T> {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn source_fn(&self) -> Option<&SourceFn<T>> {
        self.source.as_deref()
    }

    pub fn exact_at(&self, t: T) -> Option<DVector<T>> {
        self.exact.as_ref().map(|e| e(t))
    }

    /// Largest relative residual of `M Y' - D Y - R` for the exact solution at
    /// `samples` pseudo-random times in `[0, 1]`, with `Y'` from a centered
    /// difference of width `1e-6`. `None` without an exact solution.
    pub fn max_exact_residual(&self, samples: usize, seed: u64) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let t = rand::Rng::random_range(&mut rng, 0.1..1.0);
            let (tp, tm) = (exact(T::of(t + h)), exact(T::of(t - h)));
            let dy = (tp - tm) / T::of(2.0 * h);
            let y = exact(T::of(t));
            let lhs = self.operator.apply_mass(&dy);
            let dy_term = self.operator.apply_d(&y);
            let r = self.source.as_ref().map_or_else(|| DVector::zeros(y.len()), |s| s(T::of(t)));
            let scale = lhs.norm().max(dy_term.norm()).max(r.norm()).max(T::one());
            let res = (&lhs - &dy_term - &r).norm() / scale;
            worst = worst.max(res.to_f64_lossy());
        }
        Some(worst)
    }

    /// Wrap an arbitrary dense `D` (and optional mass) with `Y_0 = (1, …, 1)/√M`
    /// and no source.
    pub fn from_matrices(name: &str, d: DMatrix<T>, mass: Option<DMatrix<T>>) -> Result<Self> {
        let m = d.nrows();
        let has_mass = mass.is_some();
        let operator = match mass {
            Some(mm) => DenseOperator::with_mass(d, mm)?,
            None => DenseOperator::new(d)?,
        };
        let class = if has_mass { ProblemClass::MassMatrix } else { classify(operator.d()) };
        let y0 = DVector::from_element(m, T::one() / T::of(m as f64).sqrt());
        Ok(Self { name: name.to_string(), operator, y0, source: None, exact: None, class })
    }
}

fn classify<T: Real>(d: &DMatrix<T>) -> ProblemClass {
    let scale = d.amax().max(T::one()).to_f64_lossy();
    if (d + d.transpose()).amax().to_f64_lossy() <= 1e-14 * scale {
        return ProblemClass::Skew;
    }
    if max_symmetric_part_eigenvalue(d).to_f64_lossy() < -1e-12 * scale {
        ProblemClass::Dissipative
    } else {
        ProblemClass::SemiDissipative
    }
}

fn cast<T: Real>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::of)
}

fn cast_vec<T: Real>(v: &DVector<f64>) -> DVector<T> {
    v.map(T::of)
}

/// Default manufactured profile `g(t) = e^{-t} sin 3t + 2` and its derivative.
pub fn manufactured_profile(t: f64) -> (f64, f64) {
    let e = (-t).exp();
    (e * (3.0 * t).sin() + 2.0, e * (3.0 * (3.0 * t).cos() - (3.0 * t).sin()))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| -> f64 { StandardNormal.sample(rng) })
}

fn unit_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    let v = DVector::<f64>::from_fn(m, |_, _| -> f64 { StandardNormal.sample(rng) });
    let n = v.norm();
    if n == 0.0 {
        DVector::from_element(m, 1.0 / (m as f64).sqrt())
    } else {
        v / n
    }
}

/// `D = f·S - (1-f)·BBᵀ` with `S` skew and `B` Gaussian, normalized so the
/// entries of `S` and `BBᵀ` are of unit size. The exact solution is
/// `g(t)·v` for a random unit vector `v`.
pub fn random_semidissipative_matrix(m: usize, seed: u64, skew_fraction: f64) -> Result<(DMatrix<f64>, ChaCha8Rng)> {
    if m == 0 {
        return arg_err("dimension must be positive");
    }
    if !(0.0..=1.0).contains(&skew_fraction) {
        return arg_err("skew fraction must lie in [0, 1]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, m, m);
    let s = (&a - a.transpose()) * (0.5 / (m as f64).sqrt());
    let b = gaussian_matrix(&mut rng, m, m) / (m as f64).sqrt();
    let sym = &b * b.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    Ok((s * skew_fraction - sym * (1.0 - skew_fraction), rng))
}

pub fn make_random_semidissipative<T: Real>(m: usize, seed: u64, skew_fraction: f64) -> Result<TestProblem<T>> {
    let (d, mut rng) = random_semidissipative_matrix(m, seed, skew_fraction)?;
    let v = unit_vector(&mut rng, m);
    let dv = &d * &v;
    let class = classify(&d);
    let (v_t, dv_t): (DVector<T>, DVector<T>) = (cast_vec(&v), cast_vec(&dv));
    let (v2, dv2) = (v_t.clone(), dv_t.clone());
    let source: Arc<SourceFn<T>> = Arc::new(move |t: T| {
        let (g, dg) = manufactured_profile(t.to_f64_lossy());
        &v2 * T::of(dg) - &dv2 * T::of(g)
    });
    let v3 = v_t.clone();
    let exact: Arc<ExactFn<T>> = Arc::new(move |t: T| &v3 * T::of(manufactured_profile(t.to_f64_lossy()).0));
    Ok(TestProblem {
        name: format!("random(m={m}, seed={seed}, skew={skew_fraction})"),
        operator: DenseOperator::new(cast(&d))?,
        y0: v_t * T::of(manufactured_profile(0.0).0),
        source: Some(source),
        exact: Some(exact),
        class,
    })
}

fn circulant(m: usize, stencil: &[(isize, f64)]) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for &(off, c) in stencil {
            let j = (i as isize + off).rem_euclid(m as isize) as usize;
            d[(i, j)] += c;
        }
    }
    d
}

fn grid_points(m: usize) -> Vec<f64> {
    (0..m).map(|i| i as f64 / m as f64).collect()
}

/// Periodic `u_t + β u_x = ε u_xx` on `[0, 1)` with `m` points and
/// `u(x, 0) = sin 2πx`.
pub fn make_convection_diffusion_1d<T: Real>(m: usize, eps: f64, beta: f64) -> Result<TestProblem<T>> {
    if m < 4 {
        return arg_err("need at least 4 grid points");
    }
    if eps.is_nan() || eps < 0.0 || !beta.is_finite() {
        return arg_err("diffusivity must be nonnegative and velocity finite");
    }
    let h = 1.0 / m as f64;
    let d = circulant(m, &[(-1, eps / (h * h)), (0, -2.0 * eps / (h * h)), (1, eps / (h * h))])
        - circulant(m, &[(-1, -beta / (2.0 * h)), (1, beta / (2.0 * h))]);
    let theta = 2.0 * PI;
    let decay = eps * (2.0 - 2.0 * (theta * h).cos()) / (h * h);
    let omega = beta * (theta * h).sin() / h;
    let xs = grid_points(m);
    let xs2 = xs.clone();
    let exact: Arc<ExactFn<T>> = Arc::new(move |t: T| {
        let t = t.to_f64_lossy();
        DVector::from_iterator(
            xs2.len(),
            xs2.iter().map(|&x| T::of((-decay * t).exp() * (theta * x - omega * t).sin())),
        )
    });
    let class = if eps == 0.0 { ProblemClass::Skew } else { ProblemClass::SemiDissipative };
    Ok(TestProblem {
        name: format!("convection-diffusion(m={m}, eps={eps}, beta={beta})"),
        operator: DenseOperator::new(cast(&d))?,
        y0: DVector::from_iterator(m, xs.iter().map(|&x| T::of((theta * x).sin()))),
        source: None,
        exact: Some(exact),
        class,
    })
}

/// Periodic heat equation, the `β = 0` case of [`make_convection_diffusion_1d`].
pub fn make_heat_1d<T: Real>(m: usize, eps: f64) -> Result<TestProblem<T>> {
    let mut p = make_convection_diffusion_1d(m, eps, 0.0)?;
    p.name = format!("heat(m={m}, eps={eps})");
    Ok(p)
}

/// First-order periodic wave system `u_t = q_x`, `q_t = u_x` with the
/// traveling mode `u = q = sin(2πx + st)` as exact solution.
pub fn make_wave_1d<T: Real>(m: usize) -> Result<TestProblem<T>> {
    if m < 4 {
        return arg_err("need at least 4 grid points");
    }
    let h = 1.0 / m as f64;
    let dx = circulant(m, &[(-1, -1.0 / (2.0 * h)), (1, 1.0 / (2.0 * h))]);
    let mut d = DMatrix::zeros(2 * m, 2 * m);
    d.view_mut((0, m), (m, m)).copy_from(&dx);
    d.view_mut((m, 0), (m, m)).copy_from(&dx);
    let theta = 2.0 * PI;
    let speed = (theta * h).sin() / h;
    let xs = grid_points(m);
    let profile = move |xs: &[f64], t: f64| -> DVector<T> {
        DVector::from_iterator(2 * xs.len(), xs.iter().chain(xs).map(|&x| T::of((theta * x + speed * t).sin())))
    };
    let xs2 = xs.clone();
    let exact: Arc<ExactFn<T>> = Arc::new(move |t: T| profile(&xs2, t.to_f64_lossy()));
    Ok(TestProblem {
        name: format!("wave(m={m})"),
        operator: DenseOperator::new(cast(&d))?,
        y0: profile(&xs, 0.0),
        source: None,
        exact: Some(exact),
        class: ProblemClass::Skew,
    })
}

/// `M Y' = D Y + R` with `M = I + 0.5·QQᵀ/‖QQᵀ‖₂` and a random dissipative
/// `D`; the exact solution is `g(t)·v`.
pub fn make_mass_matrix_problem<T: Real>(m: usize, seed: u64) -> Result<TestProblem<T>> {
    let (d, mut rng) = random_semidissipative_matrix(m, seed, 0.5)?;
    let q = gaussian_matrix(&mut rng, m, m);
    let qq = &q * q.transpose();
    let qq = (&qq + qq.transpose()) * 0.5;
    let norm = qq.clone().symmetric_eigenvalues().amax();
    let mass = DMatrix::identity(m, m) + qq * (0.5 / norm.max(f64::MIN_POSITIVE));
    let v = unit_vector(&mut rng, m);
    let (mv, dv): (DVector<T>, DVector<T>) = (cast_vec(&(&mass * &v)), cast_vec(&(&d * &v)));
    let source: Arc<SourceFn<T>> = Arc::new(move |t: T| {
        let (g, dg) = manufactured_profile(t.to_f64_lossy());
        &mv * T::of(dg) - &dv * T::of(g)
    });
    let v_t: DVector<T> = cast_vec(&v);
    let v2 = v_t.clone();
    let exact: Arc<ExactFn<T>> = Arc::new(move |t: T| &v2 * T::of(manufactured_profile(t.to_f64_lossy()).0));
    Ok(TestProblem {
        name: format!("mass-matrix(m={m}, seed={seed})"),
        operator: DenseOperator::with_mass(cast(&d), cast(&mass))?,
        y0: v_t * T::of(manufactured_profile(0.0).0),
        source: Some(source),
        exact: Some(exact),
        class: ProblemClass::MassMatrix,
    })
}

/// A problem selected by name, as used in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemKind {
    Random {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        skew_fraction: f64,
    },
    ConvectionDiffusion {
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_eps")]
        diffusivity: f64,
        #[serde(default = "default_beta")]
        velocity: f64,
    },
    Heat {
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_eps")]
        diffusivity: f64,
    },
    Wave {
        #[serde(default = "default_points")]
        points: usize,
    },
    MassMatrix {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_dim() -> usize {
    8
}
fn default_points() -> usize {
    32
}
fn default_eps() -> f64 {
    0.01
}
fn default_beta() -> f64 {
    1.0
}

impl ProblemKind {
    /// Names accepted by [`ProblemKind::from_name`].
    pub const NAMES: [&'static str; 5] = ["random", "convection-diffusion", "heat", "wave", "mass-matrix"];

    /// The named problem with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "random" => Self::Random { dim: default_dim(), seed: 0, skew_fraction: 0.0 },
            "convection-diffusion" => Self::ConvectionDiffusion {
                points: default_points(),
                diffusivity: default_eps(),
                velocity: default_beta(),
            },
            "heat" => Self::Heat { points: default_points(), diffusivity: default_eps() },
            "wave" => Self::Wave { points: default_points() },
            "mass-matrix" => Self::MassMatrix { dim: default_dim(), seed: 0 },
            other => return arg_err(format!("unknown problem '{other}' (expected one of {})", Self::NAMES.join(", "))),
        })
    }

    pub fn build<T: Real>(&self) -> Result<TestProblem<T>> {
        match *self {
            Self::Random { dim, seed, skew_fraction } => make_random_semidissipative(dim, seed, skew_fraction),
            Self::ConvectionDiffusion { points, diffusivity, velocity } => {
                make_convection_diffusion_1d(points, diffusivity, velocity)
            }
            Self::Heat { points, diffusivity } => make_heat_1d(points, diffusivity),
            Self::Wave { points } => make_wave_1d(points),
            Self::MassMatrix { dim, seed } => make_mass_matrix_problem(dim, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_heat_eigenvalue() {
        let p = make_heat_1d::<f64>(4, 1.0).unwrap();
        let d = p.operator.d();
        let mode = DVector::from_fn(4, |i, _| (2.0 * PI * i as f64 / 4.0).sin());
        let dm = d * &mode;
        assert!((dm - &mode * -32.0).amax() < 1e-12);
    }

    #[test]
    fn pure_skew_when_fraction_is_one() {
        let p = make_random_semidissipative::<f64>(6, 3, 1.0).unwrap();
        assert_eq!(p.class, ProblemClass::Skew);
        let d = p.operator.d();
        assert_eq!((d + d.transpose()).amax(), 0.0);
    }

    #[test]
    fn names_round_trip() {
        for name in ProblemKind::NAMES {
            let kind = ProblemKind::from_name(name).unwrap();
            assert!(kind.build::<f64>().is_ok());
        }
        assert!(ProblemKind::from_name("nope").is_err());
    }
}
