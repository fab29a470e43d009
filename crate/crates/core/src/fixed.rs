//! Binary fixed-point complex arithmetic on big integers, used to polish
//! polynomial zeros and evaluate residues well beyond double precision.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::ExactPolynomial;

const FRAC_BITS: u32 = 256;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct FixedComplex {
    re: BigInt,
    im: BigInt,
}

fn from_f64(x: f64) -> BigInt {
    let r = BigRational::from_float(x).expect("finite value");
    rational_to_fixed(&r)
}

fn rational_to_fixed(r: &BigRational) -> BigInt {
    (r.numer() << FRAC_BITS) / r.denom()
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    BigRational::new(x.clone(), BigInt::from(1) << FRAC_BITS).to_f64().unwrap_or(f64::NAN)
}

impl FixedComplex {
    pub(crate) fn zero() -> Self {
        Self { re: BigInt::zero(), im: BigInt::zero() }
    }

    pub(crate) fn from_complex(z: Complex64) -> Self {
        Self { re: from_f64(z.re), im: from_f64(z.im) }
    }

    pub(crate) fn from_rational(r: &BigRational) -> Self {
        Self { re: rational_to_fixed(r), im: BigInt::zero() }
    }

    pub(crate) fn to_complex(&self) -> Complex64 {
        Complex64::new(fixed_to_f64(&self.re), fixed_to_f64(&self.im))
    }

    pub(crate) fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    pub(crate) fn div(&self, other: &Self) -> Self {
        let den = (&other.re * &other.re + &other.im * &other.im) >> FRAC_BITS;
        let num = self * &other.conj();
        Self { re: (num.re << FRAC_BITS) / &den, im: (num.im << FRAC_BITS) / &den }
    }

    /// Horner evaluation of an exact polynomial.
    pub(crate) fn eval(p: &ExactPolynomial, z: &Self) -> Self {
        let mut acc = Self::zero();
        for c in p.coeffs().iter().rev() {
            acc = &(&acc * z) + &Self::from_rational(c);
        }
        acc
    }
}

impl Add for &FixedComplex {
    type Output = FixedComplex;
    fn add(self, o: Self) -> FixedComplex {
        FixedComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &FixedComplex {
    type Output = FixedComplex;
    fn sub(self, o: Self) -> FixedComplex {
        FixedComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &FixedComplex {
    type Output = FixedComplex;
    fn mul(self, o: Self) -> FixedComplex {
        FixedComplex {
            re: (&self.re * &o.re - &self.im * &o.im) >> FRAC_BITS,
            im: (&self.re * &o.im + &self.im * &o.re) >> FRAC_BITS,
        }
    }
}

impl Neg for &FixedComplex {
    type Output = FixedComplex;
    fn neg(self) -> FixedComplex {
        FixedComplex { re: -&self.re, im: -&self.im }
    }
}

/// Newton iterations for a simple zero of `p` starting near `z0`.
pub(crate) fn polish(p: &ExactPolynomial, dp: &ExactPolynomial, z0: Complex64, iterations: usize) -> FixedComplex {
    let mut z = FixedComplex::from_complex(z0);
    for _ in 0..iterations {
        let step = FixedComplex::eval(p, &z).div(&FixedComplex::eval(dp, &z));
        z = &z - &step;
    }
    z
}
