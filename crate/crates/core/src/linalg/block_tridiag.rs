use nalgebra::{DMatrix, DVector};

use crate::error::{arg_err, CtgError, Result};
use crate::scalar::Real;

use super::dense::{check_lu_real, condition_estimate_1};

/// Pivot blocks with a 1-norm condition estimate above this abort the
/// block elimination with [`CtgError::PivotBreakdown`].
pub const PIVOT_CONDITION_LIMIT: f64 = 1e12;

/// Block tridiagonal system in the interior unknowns `a_1..a_r`.
///
/// Row `k` (1-based) reads
/// `(τ/2)D/(2k-1)·a_{k-1} - M·a_k - (τ/2)D/(2k+3)·a_{k+1} = b̃_k`,
/// where the `a_0` term of the first row has been moved into `b̃_1` and the
/// upper coupling is present only for `k ≤ r-2`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonalSystem<T: Real> {
    pub lower: Vec<DMatrix<T>>,
    pub diag: Vec<DMatrix<T>>,
    pub upper: Vec<DMatrix<T>>,
    pub rhs: Vec<DVector<T>>,
}

impl<T: Real> BlockTridiagonalSystem<T> {
    /// Build the interior system from `b_0..b_{r-1}` and a known `a_0`.
    pub fn from_ctg(
        d: &DMatrix<T>,
        mass: Option<&DMatrix<T>>,
        tau: T,
        b: &[DVector<T>],
        a0: &DVector<T>,
    ) -> Result<Self> {
        let m = d.nrows();
        let r = b.len();
        if r == 0 {
            return arg_err("need at least one right-hand side block");
        }
        if let Some(v) = b.iter().chain(std::iter::once(a0)).find(|v| v.len() != m) {
            return Err(CtgError::Dimension { expected: m, got: v.len() });
        }
        let half = tau / T::of(2.0);
        let neg_mass = match mass {
            Some(mm) => -mm,
            None => -DMatrix::<T>::identity(m, m),
        };
        let diag = vec![neg_mass; r];
        let lower = (2..=r).map(|k| d * (half / T::of((2 * k - 1) as f64))).collect();
        let upper = (1..r)
            .map(|k| if k + 2 <= r { d * (-half / T::of((2 * k + 3) as f64)) } else { DMatrix::zeros(m, m) })
            .collect();
        let mut rhs = b.to_vec();
        rhs[0] -= d * a0 * half;
        Ok(Self { lower, diag, upper, rhs })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn block_dim(&self) -> usize {
        self.diag.first().map_or(0, |b| b.nrows())
    }

    fn validate(&self) -> Result<()> {
        let r = self.order();
        let m = self.block_dim();
        if r == 0 {
            return arg_err("empty block system");
        }
        if self.lower.len() != r - 1 || self.upper.len() != r - 1 || self.rhs.len() != r {
            return arg_err("inconsistent block counts");
        }
        for blk in self.diag.iter().chain(&self.lower).chain(&self.upper) {
            if blk.shape() != (m, m) {
                return Err(CtgError::Dimension { expected: m, got: blk.nrows() });
            }
        }
        if let Some(v) = self.rhs.iter().find(|v| v.len() != m) {
            return Err(CtgError::Dimension { expected: m, got: v.len() });
        }
        Ok(())
    }

    /// The assembled `rM × rM` matrix.
    pub fn dense(&self) -> DMatrix<T> {
        let r = self.order();
        let m = self.block_dim();
        let mut a = DMatrix::zeros(r * m, r * m);
        for k in 0..r {
            a.view_mut((k * m, k * m), (m, m)).copy_from(&self.diag[k]);
            if k + 1 < r {
                a.view_mut((k * m, (k + 1) * m), (m, m)).copy_from(&self.upper[k]);
                a.view_mut(((k + 1) * m, k * m), (m, m)).copy_from(&self.lower[k]);
            }
        }
        a
    }

    /// Reference solution through one dense LU of [`Self::dense`].
    pub fn dense_solve(&self) -> Result<Vec<DVector<T>>> {
        self.validate()?;
        let m = self.block_dim();
        let rhs = DVector::from_iterator(self.order() * m, self.rhs.iter().flat_map(|v| v.iter().copied()));
        let lu = self.dense().lu();
        check_lu_real(&lu)?;
        let x = lu.solve(&rhs).expect("checked factorization");
        Ok((0..self.order()).map(|k| x.rows(k * m, m).into_owned()).collect())
    }
}

/// Block LU elimination followed by back substitution.
///
/// Each pivot block `S_k` is factorized exactly once. A pivot whose
/// condition estimate exceeds [`PIVOT_CONDITION_LIMIT`] yields
/// [`CtgError::PivotBreakdown`] so the caller can switch methods.
pub fn block_tridiagonal_solve<T: Real>(sys: &BlockTridiagonalSystem<T>) -> Result<Vec<DVector<T>>> {
    sys.validate()?;
    let r = sys.order();
    let mut w: Vec<DMatrix<T>> = Vec::with_capacity(r.saturating_sub(1));
    let mut z: Vec<DVector<T>> = Vec::with_capacity(r);
    for k in 0..r {
        let s = if k == 0 { sys.diag[0].clone() } else { &sys.diag[k] - &sys.lower[k - 1] * &w[k - 1] };
        let y = if k == 0 { sys.rhs[0].clone() } else { &sys.rhs[k] - &sys.lower[k - 1] * &z[k - 1] };
        let condition = condition_estimate_1(&s);
        if !condition.is_finite() || condition > PIVOT_CONDITION_LIMIT {
            return Err(CtgError::PivotBreakdown { block: k + 1, condition });
        }
        let lu = s.lu();
        z.push(lu.solve(&y).ok_or(CtgError::PivotBreakdown { block: k + 1, condition })?);
        if k + 1 < r {
            w.push(lu.solve(&sys.upper[k]).ok_or(CtgError::PivotBreakdown { block: k + 1, condition })?);
        }
    }
    let mut x = z;
    for k in (0..r.saturating_sub(1)).rev() {
        let correction = &w[k] * &x[k + 1];
        x[k] -= correction;
    }
    Ok(x)
}
