//! Diagonal Padé numerators for `e^z`, their zeros, and the partial-fraction
//! weights that decouple a rational matrix function into shifted solves.
//!
//! The numerator `P_r` is built exactly over the rationals. Its zeros are
//! simple and satisfy `Re ζ ≤ -2`; complex zeros come in conjugate pairs,
//! which lets callers solve only one member of each pair.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{arg_err, CtgError, Result};
use crate::fixed::{self, FixedComplex};
use crate::{ExactPolynomial, RealPolynomial};

/// Largest supported order.
pub const MAX_ORDER: usize = 12;

const POLISH_ITERS: usize = 5;

pub(crate) fn check_order(r: usize, cap: usize) -> Result<()> {
    if r == 0 || r > cap {
        return arg_err(format!("order r = {r} outside 1..={cap}"));
    }
    Ok(())
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `P_r` from the three-term recurrence
/// `P_m = P_{m-1} + z^2 / (4(2m-1)(2m-3)) P_{m-2}`, exact.
pub fn pade_numerator_exact(r: usize) -> Result<ExactPolynomial> {
    check_order(r, MAX_ORDER)?;
    Ok(pade_recurrence(r))
}

pub(crate) fn pade_recurrence(r: usize) -> ExactPolynomial {
    let mut prev = ExactPolynomial::one();
    let mut cur = ExactPolynomial::new(vec![BigRational::one(), rat(1, 2)]);
    if r == 0 {
        return prev;
    }
    for m in 2..=r as i64 {
        let c = rat(1, 4 * (2 * m - 1) * (2 * m - 3));
        let next = &cur + &prev.shift(2).scale(&c);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `P_r` from the closed form `sum_j (2r-j)! r! / ((2r)! j! (r-j)!) z^j`.
pub fn pade_numerator_closed_form(r: usize) -> ExactPolynomial {
    let fact = |n: usize| -> BigInt { (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k)) };
    let coeffs = (0..=r)
        .map(|j| {
            let num = fact(2 * r - j) * fact(r);
            let den = fact(2 * r) * fact(j) * fact(r - j);
            let g = num.gcd(&den);
            BigRational::new(num / &g, den / g)
        })
        .collect();
    ExactPolynomial::new(coeffs)
}

/// `P_r` rounded to double precision.
pub fn pade_numerator(r: usize) -> Result<RealPolynomial> {
    Ok(pade_numerator_exact(r)?.to_f64())
}

/// How a zero participates in the conjugate-pair reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroGroup {
    /// A real zero, solved on its own.
    Real(usize),
    /// A conjugate pair; `rep` has negative imaginary part.
    Pair { rep: usize, conj: usize },
}

impl ZeroGroup {
    pub fn representative(&self) -> usize {
        match *self {
            ZeroGroup::Real(j) => j,
            ZeroGroup::Pair { rep, .. } => rep,
        }
    }

    /// Multiplicity applied to `Re` of the representative's contribution.
    pub fn weight(&self) -> f64 {
        match self {
            ZeroGroup::Real(_) => 1.0,
            ZeroGroup::Pair { .. } => 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PadeSpectrum {
    order: usize,
    numerator: RealPolynomial,
    zeros: Vec<Complex64>,
    dp: Vec<Complex64>,
    groups: Vec<ZeroGroup>,
    precise: Vec<FixedComplex>,
}

impl PadeSpectrum {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `P_r` in double precision.
    pub fn numerator(&self) -> &RealPolynomial {
        &self.numerator
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// `P_r'(ζ_j)`.
    pub fn derivative_at_zeros(&self) -> &[Complex64] {
        &self.dp
    }

    pub fn groups(&self) -> &[ZeroGroup] {
        &self.groups
    }

    /// Largest `|P_r(ζ_j)|` over all zeros.
    pub fn max_residual(&self) -> f64 {
        self.zeros.iter().map(|&z| self.numerator.eval(z).norm()).fold(0.0, f64::max)
    }
}

const NEWTON_MAX_ITERS: usize = 50;

/// Zeros of `P_r` via companion-matrix eigenvalues, Newton-polished.
pub fn pade_spectrum(r: usize) -> Result<PadeSpectrum> {
    check_order(r, MAX_ORDER)?;
    let exact = pade_recurrence(r);
    let p = exact.to_f64();
    let dp_poly = p.derivative();

    let raw = polynomial_roots(&p)?;
    let mut zeros = Vec::with_capacity(r);
    for z0 in raw {
        zeros.push(newton_polish(&p, &dp_poly, z0)?);
    }

    // Snap near-real zeros onto the axis and enforce exact conjugacy.
    let scale = zeros.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut reals: Vec<Complex64> = Vec::new();
    let mut lower: Vec<Complex64> = Vec::new();
    for z in &zeros {
        if z.im.abs() <= 1e-9 * scale {
            reals.push(Complex64::new(z.re, 0.0));
        } else if z.im < 0.0 {
            lower.push(*z);
        }
    }
    let by_re = |a: &Complex64, b: &Complex64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    reals.sort_by(by_re);
    lower.sort_by(by_re);
    if reals.len() + 2 * lower.len() != r {
        return Err(CtgError::Internal(format!(
            "order {r}: zeros do not split into conjugate pairs ({} real, {} lower)",
            reals.len(),
            lower.len()
        )));
    }

    let mut ordered = Vec::with_capacity(r);
    let mut groups = Vec::with_capacity(reals.len() + lower.len());
    for z in reals {
        groups.push(ZeroGroup::Real(ordered.len()));
        ordered.push(z);
    }
    for z in lower {
        let rep = ordered.len();
        ordered.push(z);
        ordered.push(z.conj());
        groups.push(ZeroGroup::Pair { rep, conj: rep + 1 });
    }

    let dp_exact = exact.derivative();
    let mut precise = Vec::with_capacity(r);
    for g in &groups {
        let z = fixed::polish(&exact, &dp_exact, ordered[g.representative()], POLISH_ITERS);
        if let ZeroGroup::Pair { .. } = g {
            let c = z.conj();
            precise.push(z);
            precise.push(c);
        } else {
            precise.push(z);
        }
    }
    let zeros: Vec<Complex64> = precise.iter().map(FixedComplex::to_complex).collect();
    let dp: Vec<Complex64> = precise.iter().map(|z| FixedComplex::eval(&dp_exact, z).to_complex()).collect();
    let spectrum = PadeSpectrum { order: r, numerator: p, zeros, dp, groups, precise };
    validate_spectrum(&spectrum)?;
    Ok(spectrum)
}

fn validate_spectrum(s: &PadeSpectrum) -> Result<()> {
    let tol = 1e-12 * s.numerator.max_abs_coeff();
    for (j, &z) in s.zeros.iter().enumerate() {
        let res = s.numerator.eval(z).norm();
        if res > tol {
            return Err(CtgError::Internal(format!("zero {j} residual {res:e} exceeds {tol:e}")));
        }
        if z.re > -2.0 + 1e-9 {
            return Err(CtgError::Internal(format!("zero {j} = {z} violates Re <= -2")));
        }
        for w in &s.zeros[..j] {
            if (z - w).norm() <= 1e-8 {
                return Err(CtgError::Internal(format!("near-multiple zero at {z}")));
            }
        }
    }
    Ok(())
}

/// All complex roots of a real polynomial from its companion matrix.
pub fn polynomial_roots(p: &RealPolynomial) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = *p.leading();
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p.coeff(i) / lead;
    }
    let eig = comp.complex_eigenvalues();
    let out: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CtgError::Internal("companion eigenvalues not finite".into()));
    }
    Ok(out)
}

/// Newton iteration on `p` from `z0`; stops once the step stagnates at
/// round-off level.
pub fn newton_polish(p: &RealPolynomial, dp: &RealPolynomial, z0: Complex64) -> Result<Complex64> {
    let mut z = z0;
    for _ in 0..NEWTON_MAX_ITERS {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = p.eval(z) / d;
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    // Accept if the residual is already at the round-off floor.
    let res = p.eval(z).norm();
    if res <= 1e-13 * p.max_abs_coeff() {
        Ok(z)
    } else {
        Err(CtgError::Internal(format!("Newton did not converge from {z0} (residual {res:e})")))
    }
}

/// Weights `w_j = -F(-ζ_j) / P_r'(ζ_j)` so that
/// `F(z)/P_r(-z) = c + sum_j w_j / (z + ζ_j)`, where `c` is nonzero only
/// when `deg F = r`.
pub fn partial_fraction_weights(f: &RealPolynomial, spectrum: &PadeSpectrum) -> Result<Vec<Complex64>> {
    let r = spectrum.order;
    if !f.is_zero() && f.degree() > r {
        return arg_err(format!("deg F = {} exceeds r = {r}", f.degree()));
    }
    Ok(spectrum.zeros.iter().zip(&spectrum.dp).map(|(&z, &d)| -f.eval(-z) / d).collect())
}

/// Same weights as [`partial_fraction_weights`] for an exact `F`, evaluated
/// in extended precision at extended-precision zeros and rounded once.
pub fn partial_fraction_weights_exact(f: &ExactPolynomial, spectrum: &PadeSpectrum) -> Result<Vec<Complex64>> {
    let r = spectrum.order;
    if !f.is_zero() && f.degree() > r {
        return arg_err(format!("deg F = {} exceeds r = {r}", f.degree()));
    }
    let dp = pade_recurrence(r).derivative();
    Ok(spectrum
        .precise
        .iter()
        .map(|z| {
            let num = FixedComplex::eval(f, &-z);
            (-&num).div(&FixedComplex::eval(&dp, z)).to_complex()
        })
        .collect())
}

/// Polynomial part `c` of `F(z)/P_r(-z)` (zero unless `deg F = r`).
pub fn partial_fraction_constant(f: &ExactPolynomial, r: usize) -> BigRational {
    if f.is_zero() || f.degree() < r {
        return BigRational::zero();
    }
    let denom = pade_recurrence(r).reflect();
    f.leading().clone() / denom.leading().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn low_order_numerators() {
        assert_eq!(pade_numerator_exact(1).unwrap().coeffs(), &[rat(1, 1), rat(1, 2)]);
        assert_eq!(pade_numerator_exact(2).unwrap().coeffs(), &[rat(1, 1), rat(1, 2), rat(1, 12)]);
        assert_eq!(pade_numerator_exact(3).unwrap().coeffs(), &[rat(1, 1), rat(1, 2), rat(1, 10), rat(1, 120)]);
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for r in 1..=MAX_ORDER {
            assert_eq!(pade_numerator_exact(r).unwrap(), pade_numerator_closed_form(r), "r = {r}");
        }
    }

    #[test]
    fn order_out_of_range_is_rejected() {
        assert!(matches!(pade_numerator(0), Err(CtgError::Argument(_))));
        assert!(matches!(pade_spectrum(MAX_ORDER + 1), Err(CtgError::Argument(_))));
    }

    #[test]
    fn spectrum_r1_r2() {
        let s1 = pade_spectrum(1).unwrap();
        assert!((s1.zeros()[0] - C::new(-2.0, 0.0)).norm() < 1e-14);
        let s2 = pade_spectrum(2).unwrap();
        let rep = s2.zeros()[s2.groups()[0].representative()];
        assert!((rep - C::new(-3.0, -3f64.sqrt())).norm() < 1e-13);
    }

    #[test]
    fn spectrum_r3_structure() {
        let s = pade_spectrum(3).unwrap();
        assert_eq!(s.groups().len(), 2);
        assert!(matches!(s.groups()[0], ZeroGroup::Real(_)));
        assert!(matches!(s.groups()[1], ZeroGroup::Pair { .. }));
        assert!(s.zeros().iter().all(|z| z.re <= -2.0));
    }

    #[test]
    fn all_orders_satisfy_invariants() {
        for r in 1..=MAX_ORDER {
            let s = pade_spectrum(r).unwrap();
            assert_eq!(s.zeros().len(), r);
            assert!(s.max_residual() <= 1e-12, "r = {r}: {}", s.max_residual());
            for g in s.groups() {
                if let ZeroGroup::Pair { rep, conj } = *g {
                    assert!(s.zeros()[rep].im < 0.0);
                    assert!((s.zeros()[rep].conj() - s.zeros()[conj]).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn weight_examples() {
        let s = pade_spectrum(1).unwrap();
        let z = RealPolynomial::new(vec![0.0, 1.0]);
        assert!((partial_fraction_weights(&z, &s).unwrap()[0] - C::new(-4.0, 0.0)).norm() < 1e-14);
        let one = RealPolynomial::one();
        assert!((partial_fraction_weights(&one, &s).unwrap()[0] - C::new(-2.0, 0.0)).norm() < 1e-14);
        let zero = RealPolynomial::zero();
        assert!(partial_fraction_weights(&zero, &s).unwrap().iter().all(|w| w.norm() == 0.0));
        let too_big = RealPolynomial::new(vec![0.0, 0.0, 1.0]);
        assert!(partial_fraction_weights(&too_big, &s).is_err());
    }
}
