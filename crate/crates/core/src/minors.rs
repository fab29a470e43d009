//! The scalar stiffness symbol `E_{r+1}(λ)` of the Legendre-basis Galerkin
//! step and the full table of its minors.
//!
//! `E_{r+1}(λ)` is the `(r+1)×(r+1)` polynomial matrix obtained from the
//! per-step block system by replacing `τD` with a scalar `λ`. Row `k ≤ r`
//! holds `a_k = λ/(2(2k-1))` on the diagonal, `-1` right of it, and
//! `b_k = -λ/(2(2k+3))` two columns right (rows `k ≤ r-2` only); the last row
//! is `c_j = (-1)^{j+1}`. Its determinant is `P_r(-λ)` and the minors
//! `φ_{ki}(λ) = det E_{r+1}(λ)_{k,i}` (row `k`, column `i` removed) give the
//! partial-fraction weights of every Legendre coefficient.
//!
//! [`build_minor_table`] uses the banded recurrences (determinants of the
//! truncated matrices `G_m`, then row-by-row minor recurrences). Orders 1-3
//! come from direct cofactor expansion. [`minor_oracle`] recomputes every
//! minor by fraction-free elimination and exists to cross-check the
//! recurrences.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{CtgError, Result};
use crate::pade::{check_order, pade_recurrence, MAX_ORDER};
use crate::{ExactPolynomial, RealPolynomial};

/// Largest order accepted by [`minor_oracle`].
pub const ORACLE_MAX_ORDER: usize = 8;

type P = ExactPolynomial;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn sign(e: i64) -> BigRational {
    if e.rem_euclid(2) == 0 {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// Entry rules of `E_{r+1}(λ)`; `a`, `b` are degree-one polynomials in `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StiffnessSymbol {
    pub r: usize,
}

impl StiffnessSymbol {
    pub fn new(r: usize) -> Self {
        Self { r }
    }

    pub fn a(k: usize) -> P {
        P::monomial(rat(1, 2 * (2 * k as i64 - 1)), 1)
    }

    pub fn b(k: usize) -> P {
        P::monomial(rat(-1, 2 * (2 * k as i64 + 3)), 1)
    }

    pub fn c(k: usize) -> P {
        P::constant(sign(k as i64 + 1))
    }

    /// `a_1 a_2 ⋯ a_n` (one for `n = 0`).
    pub fn a_product(from: usize, to: usize) -> P {
        (from..=to).fold(P::one(), |acc, k| &acc * &Self::a(k))
    }

    /// Dense `(r+1)×(r+1)` polynomial matrix, zero-indexed.
    pub fn materialize(&self) -> Vec<Vec<P>> {
        let r = self.r;
        let n = r + 1;
        let mut e = vec![vec![P::zero(); n]; n];
        for k in 1..=r {
            e[k - 1][k - 1] = Self::a(k);
            e[k - 1][k] = P::constant(-BigRational::one());
            if k + 2 <= r {
                e[k - 1][k + 1] = Self::b(k);
            }
        }
        for j in 1..=n {
            e[r][j - 1] = Self::c(j);
        }
        e
    }

    /// Evaluate the symbol at a real `λ` in double precision.
    pub fn eval_f64(&self, lambda: f64) -> Vec<Vec<f64>> {
        self.materialize().iter().map(|row| row.iter().map(|p| p.to_f64().eval(lambda)).collect()).collect()
    }
}

/// All minors of `E_{r+1}(λ)` together with its determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorTable {
    r: usize,
    phi: Vec<Vec<P>>,
    varphi: P,
    det_g: Vec<P>,
}

impl MinorTable {
    pub fn order(&self) -> usize {
        self.r
    }

    /// `φ_{ki}`, one-indexed as in `det E_{r+1}(λ)_{k,i}`.
    pub fn phi(&self, k: usize, i: usize) -> &P {
        &self.phi[k - 1][i - 1]
    }

    pub fn phi_rows(&self) -> &[Vec<P>] {
        &self.phi
    }

    /// `φ_r(λ) = det E_{r+1}(λ)`.
    pub fn varphi(&self) -> &P {
        &self.varphi
    }

    /// `det G_m(λ)` for `m = 1..=r`, where `G_m = E_{m+1}(λ)` without row `m`
    /// and column `m+1`.
    pub fn det_g(&self, m: usize) -> &P {
        &self.det_g[m - 1]
    }

    pub fn phi_f64(&self, k: usize, i: usize) -> RealPolynomial {
        self.phi(k, i).to_f64()
    }

    /// Overwrites `φ_r` with a wrong polynomial. Only for fault-injection
    /// tests of the verification suite.
    #[doc(hidden)]
    pub fn corrupt_for_fault_injection(&mut self) {
        self.varphi = &self.varphi + &P::monomial(rat(1, 1000), 1);
    }
}

struct Level {
    table: MinorTable,
    /// `det [G_m]_{m-1, j}` for `j = 1..=m` (empty for `m = 1`).
    g_row: Vec<P>,
}

/// Build the minor table of order `r` from the recurrences.
pub fn build_minor_table(r: usize) -> Result<MinorTable> {
    check_order(r, MAX_ORDER)?;
    let mut levels: Vec<Level> = Vec::with_capacity(r);
    for m in 1..=r {
        let level = if m <= 3 { direct_level(m) } else { recurrence_level(m, &levels) };
        levels.push(level);
    }
    Ok(levels.pop().expect("r >= 1").table)
}

fn direct_level(m: usize) -> Level {
    let e = StiffnessSymbol::new(m).materialize();
    let n = m + 1;
    let phi = (0..n).map(|k| (0..n).map(|i| laplace_det(&remove(&e, &[k], &[i]))).collect()).collect();
    let varphi = laplace_det(&e);
    let det_g = (1..=m)
        .map(|q| {
            let eq = StiffnessSymbol::new(q).materialize();
            laplace_det(&remove(&eq, &[q - 1], &[q]))
        })
        .collect();
    let g = remove(&e, &[m - 1], &[m]);
    let g_row = if m >= 2 { (0..m).map(|j| laplace_det(&remove(&g, &[m - 2], &[j]))).collect() } else { Vec::new() };
    Level { table: MinorTable { r: m, phi, varphi, det_g }, g_row }
}

fn recurrence_level(r: usize, levels: &[Level]) -> Level {
    type S = StiffnessSymbol;
    let l1 = &levels[r - 2].table; // minors of E_r
    let l2 = &levels[r - 3].table; // minors of E_{r-1}
    let g_prev_row = &levels[r - 2].g_row; // row r-2 of G_{r-1}
    let det_g = |i: usize| -> &P { &levels[r - 2].table.det_g[i - 1] };

    let ar = S::a(r);
    let ar1 = S::a(r - 1);
    let br2 = S::b(r - 2);
    let cr1 = S::c(r + 1);
    let ar_ar1 = &ar * &ar1;
    let ar1_br2 = &ar1 * &br2;

    // det G_r and the (r-1)-th row of minors of G_r.
    let det_g_r = &(det_g(r - 1) - &(&ar1_br2 * det_g(r - 2))) + &(&S::c(r) * &S::a_product(1, r - 1));
    let mut g_row: Vec<P> = (1..r).map(|j| l1.phi(r - 1, j) - &(&br2 * &g_prev_row[j - 1])).collect();
    g_row.push(det_g(r - 1).clone());

    // det E_{r+1}(λ)_{i,j} for the block of columns r-1..r+1 in rows i <= r-1.
    let tail = |i: usize, j: usize| -> P {
        let s = P::constant(sign(j as i64 - i as i64 - 1));
        &(&s * &S::a_product(i + 1, j - 1)) * det_g(i)
    };

    let n = r + 1;
    let mut phi = vec![vec![P::zero(); n]; n];
    for i in 1..=r - 2 {
        for j in 1..=r - 2 {
            phi[i - 1][j - 1] = l1.phi(i, j) + &(&ar_ar1 * l2.phi(i, j));
        }
        for j in r - 1..=r + 1 {
            phi[i - 1][j - 1] = tail(i, j);
        }
    }
    {
        let i = r - 1;
        for j in 1..=r - 1 {
            phi[i - 1][j - 1] = &(&(-&(&cr1 * &ar)) * l1.phi(r, j)) + &g_row[j - 1];
        }
        for j in r..=r + 1 {
            phi[i - 1][j - 1] = tail(i, j);
        }
    }
    {
        let i = r;
        for j in 1..=r - 2 {
            phi[i - 1][j - 1] = l1.phi(r - 1, j) - &(&ar1_br2 * l2.phi(r - 2, j));
        }
        for j in r - 1..=r {
            let s = P::constant(sign(i as i64 - j as i64));
            phi[i - 1][j - 1] = &(&cr1 * &s) * &S::a_product(1, j - 1);
        }
        phi[i - 1][r] = det_g_r.clone();
    }
    {
        let i = r + 1;
        for j in 1..=r - 2 {
            phi[i - 1][j - 1] = &(-l1.phi(r, j)) - &(&ar1_br2 * l2.phi(r - 1, j));
        }
        for j in r - 1..=r + 1 {
            let s = P::constant(sign(i as i64 - j as i64));
            phi[i - 1][j - 1] = &s * &S::a_product(1, j - 1);
        }
    }

    let varphi = l1.varphi() + &(&ar_ar1 * l2.varphi());
    let mut dg = l1.det_g.clone();
    dg.push(det_g_r);
    Level { table: MinorTable { r, phi, varphi, det_g: dg }, g_row }
}

/// Submatrix with the listed (zero-based) rows and columns removed.
pub(crate) fn remove(m: &[Vec<P>], rows: &[usize], cols: &[usize]) -> Vec<Vec<P>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| !rows.contains(i))
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| !cols.contains(j)).map(|(_, p)| p.clone()).collect())
        .collect()
}

/// Cofactor expansion along the first row.
fn laplace_det(m: &[Vec<P>]) -> P {
    let n = m.len();
    match n {
        0 => P::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = P::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor = laplace_det(&remove(m, &[0], &[j]));
                let term = &m[0][j] * &minor;
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

/// Fraction-free (Bareiss) determinant over `Q[λ]`.
pub fn bareiss_det(mut m: Vec<Vec<P>>) -> P {
    let n = m.len();
    if n == 0 {
        return P::one();
    }
    let mut negate = false;
    let mut prev = P::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(p) => {
                    m.swap(k, p);
                    negate = !negate;
                }
                None => return P::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                m[i][j] = q;
            }
            m[i][k] = P::zero();
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Every minor by direct elimination on the materialized symbol.
pub fn minor_oracle(r: usize) -> Result<MinorTable> {
    check_order(r, ORACLE_MAX_ORDER)?;
    let e = StiffnessSymbol::new(r).materialize();
    let n = r + 1;
    let phi = (0..n).map(|k| (0..n).map(|i| bareiss_det(remove(&e, &[k], &[i]))).collect()).collect();
    let varphi = bareiss_det(e.clone());
    let det_g = (1..=r).map(|m| bareiss_det(remove(&StiffnessSymbol::new(m).materialize(), &[m - 1], &[m]))).collect();
    Ok(MinorTable { r, phi, varphi, det_g })
}

/// `χ_{r+1,j} = (-1)^{r+1} φ_{r+1,j}` for `j = 1..=r+1`.
pub fn chi_row(table: &MinorTable) -> Vec<P> {
    let r = table.r;
    let s = P::constant(sign(r as i64 + 1));
    (1..=r + 1).map(|j| &s * table.phi(r + 1, j)).collect()
}

/// `ψ_r(λ) = (-1)^r φ_{r+1,1}(λ)`, whose zeros lie on the imaginary axis.
pub fn psi(table: &MinorTable) -> P {
    &P::constant(sign(table.r as i64)) * table.phi(table.r + 1, 1)
}

/// Exact identities satisfied by the tables; each returns `Ok(())` or a
/// description of the first mismatch.
pub mod identities {
    use super::*;

    fn mismatch(what: &str, r: usize) -> CtgError {
        CtgError::Internal(format!("{what} fails at r = {r}"))
    }

    /// `φ_r(λ) = P_r(-λ)`.
    pub fn determinant_is_pade_denominator(table: &MinorTable) -> Result<()> {
        if *table.varphi() == pade_recurrence(table.r).reflect() {
            Ok(())
        } else {
            Err(mismatch("det E = P_r(-λ)", table.r))
        }
    }

    /// `(-1)^r λ φ_{r+1,1}(λ) = P_r(λ) - P_r(-λ)`.
    pub fn first_column_minor_identity(table: &MinorTable) -> Result<()> {
        let r = table.r;
        let lhs = psi(table).shift(1);
        let p = pade_recurrence(r);
        if lhs == &p - &p.reflect() {
            Ok(())
        } else {
            Err(mismatch("(-1)^r λ φ_{r+1,1} = P_r(λ) - P_r(-λ)", r))
        }
    }

    /// `φ_{r+1,r+1} = a_1 ⋯ a_r = r!/(2r)! λ^r`.
    pub fn corner_minor_identity(table: &MinorTable) -> Result<()> {
        let r = table.r;
        if *table.phi(r + 1, r + 1) == StiffnessSymbol::a_product(1, r) {
            Ok(())
        } else {
            Err(mismatch("φ_{r+1,r+1} = a_1⋯a_r", r))
        }
    }

    fn weighted_chi_sum(lo: &[P], hi: &[P], count: usize) -> P {
        (1..=count).fold(P::zero(), |acc, j| {
            let w = P::constant(rat(1, 2 * j as i64 - 1));
            &acc + &(&(&lo[j - 1] * &hi[j - 1]) * &w)
        })
    }

    /// `sum_{j=1}^{r+1} χ_{r+1,j}(-λ) χ_{r+1,j}(λ)/(2j-1)
    ///   = φ_r(-λ) φ_r(λ) + (-1)^{r+1} 2r/(2r+1) (a_1⋯a_r)^2`.
    pub fn chi_square_identity(table: &MinorTable) -> Result<()> {
        let r = table.r;
        let chi = chi_row(table);
        let chi_m: Vec<P> = chi.iter().map(|p| p.reflect()).collect();
        let lhs = weighted_chi_sum(&chi_m, &chi, r + 1);
        let prod = StiffnessSymbol::a_product(1, r);
        let c = P::constant(&sign(r as i64 + 1) * &rat(2 * r as i64, 2 * r as i64 + 1));
        let rhs = &(&table.varphi().reflect() * table.varphi()) + &(&c * &(&prod * &prod));
        if lhs == rhs {
            Ok(())
        } else {
            Err(mismatch("chi square-sum identity", r))
        }
    }

    /// `sum_{j=1}^{r-1} [χ_{r,j}(-λ)χ_{r+1,j}(λ) + χ_{r,j}(λ)χ_{r+1,j}(-λ)]/(2j-1)
    ///   = φ_{r-1}(-λ)φ_r(λ) + φ_{r-1}(λ)φ_r(-λ) + (-1)^r 2r/(2r-1)(a_1⋯a_{r-1})^2`,
    /// with `prev` the table of order `r-1` (`φ_0 = 1` when `r = 1`).
    pub fn chi_cross_identity(prev: Option<&MinorTable>, table: &MinorTable) -> Result<()> {
        let r = table.r;
        let chi = chi_row(table);
        let (lhs, phi_prev) = match prev {
            Some(p) => {
                if p.r + 1 != r {
                    return Err(CtgError::Argument("tables must have consecutive orders".into()));
                }
                let chi_prev = chi_row(p);
                let a: Vec<P> = chi_prev.iter().map(|q| q.reflect()).collect();
                let b: Vec<P> = chi.iter().map(|q| q.reflect()).collect();
                let s1 = weighted_chi_sum(&a, &chi, r - 1);
                let s2 = weighted_chi_sum(&chi_prev, &b, r - 1);
                (&s1 + &s2, p.varphi().clone())
            }
            None if r == 1 => (P::zero(), P::one()),
            None => return Err(CtgError::Argument("previous table required for r > 1".into())),
        };
        let prod = StiffnessSymbol::a_product(1, r - 1);
        let c = P::constant(&sign(r as i64) * &rat(2 * r as i64, 2 * r as i64 - 1));
        let rhs = &(&(&phi_prev.reflect() * table.varphi()) + &(&phi_prev * &table.varphi().reflect()))
            + &(&c * &(&prod * &prod));
        if lhs == rhs {
            Ok(())
        } else {
            Err(mismatch("chi cross-sum identity", r))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(i64, i64)]) -> P {
        P::new(c.iter().map(|&(n, d)| rat(n, d)).collect())
    }

    #[test]
    fn determinants_of_small_orders() {
        let t1 = build_minor_table(1).unwrap();
        assert_eq!(*t1.varphi(), poly(&[(1, 1), (-1, 2)]));
        let t2 = build_minor_table(2).unwrap();
        assert_eq!(*t2.varphi(), poly(&[(1, 1), (-1, 2), (1, 12)]));
    }

    #[test]
    fn order_two_minor_from_hand_expansion() {
        let t2 = build_minor_table(2).unwrap();
        // Row 3, column 1 removed: [[-1, 0], [a_2, -1]].
        assert_eq!(*t2.phi(3, 1), P::one());
    }

    #[test]
    fn chi_low_orders() {
        let chi1 = chi_row(&build_minor_table(1).unwrap());
        assert_eq!(chi1, vec![poly(&[(-1, 1)]), poly(&[(0, 1), (1, 2)])]);
        let chi2 = chi_row(&build_minor_table(2).unwrap());
        assert_eq!(chi2[2], poly(&[(0, 1), (0, 1), (-1, 12)]));
    }

    #[test]
    fn recurrences_match_oracle() {
        for r in 1..=6 {
            assert_eq!(build_minor_table(r).unwrap(), minor_oracle(r).unwrap(), "r = {r}");
        }
    }

    #[test]
    fn oracle_order_cap() {
        assert!(minor_oracle(ORACLE_MAX_ORDER + 1).is_err());
        assert!(build_minor_table(0).is_err());
    }

    #[test]
    fn degenerate_lambda_zero() {
        for r in 1..=5 {
            let t = build_minor_table(r).unwrap();
            assert_eq!(t.varphi().coeff(0), BigRational::one());
        }
    }

    #[test]
    fn fault_injection_breaks_determinant_identity() {
        let mut t = build_minor_table(3).unwrap();
        assert!(identities::determinant_is_pade_denominator(&t).is_ok());
        t.corrupt_for_fault_injection();
        assert!(identities::determinant_is_pade_denominator(&t).is_err());
    }
}
