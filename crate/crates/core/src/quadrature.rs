//! Gauss-Legendre rules and Legendre polynomial evaluation on `[-1, 1]`.

use crate::error::{arg_err, Result};
use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss-Legendre rule, nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return arg_err("quadrature needs at least one point");
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let dp = legendre_with_derivative(n, x).1;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(L_n(x), L_n'(x))` via the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        x.powi(n as i32 + 1) * n * (n + 1.0) / 2.0
    } else {
        n * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, d)
}

/// `L_0(x), …, L_n(x)`.
pub fn legendre_values<T: Real>(n: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(T::one());
    if n >= 1 {
        out.push(x);
    }
    for k in 2..=n {
        let kf = T::of(k as f64);
        let v = ((kf + kf - T::one()) * x * out[k - 1] - (kf - T::one()) * out[k - 2]) / kf;
        out.push(v);
    }
    out
}
