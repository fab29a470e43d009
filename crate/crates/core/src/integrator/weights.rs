use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{arg_err, Result};
use crate::minors::{build_minor_table, MinorTable};
use crate::pade::{
    check_order, pade_spectrum, partial_fraction_constant, partial_fraction_weights_exact, PadeSpectrum, ZeroGroup,
    MAX_ORDER,
};
use crate::RealPolynomial;

/// Scalar tables driving one CTG step of order `r`.
///
/// For every minor `φ_{ki}` the rational function `φ_{ki}(λ)/P_r(-λ)` is
/// split as `q_{ki} + Σ_j c_{kij}/(λ + ζ_j)`. Only one representative of each
/// conjugate pair of zeros is stored.
#[derive(Debug, Clone)]
pub struct StageWeights {
    r: usize,
    spectrum: PadeSpectrum,
    shifts: Vec<Complex64>,
    multiplicity: Vec<f64>,
    residues: Vec<Vec<Vec<Complex64>>>,
    constants: Vec<Vec<f64>>,
    first_column: Vec<RealPolynomial>,
}

impl StageWeights {
    pub fn new(r: usize) -> Result<Self> {
        check_order(r, MAX_ORDER)?;
        let table = build_minor_table(r)?;
        let spectrum = pade_spectrum(r)?;
        Self::from_parts(&table, &spectrum)
    }

    pub fn from_parts(table: &MinorTable, spectrum: &PadeSpectrum) -> Result<Self> {
        let r = table.order();
        if spectrum.order() != r {
            return arg_err(format!("minor table has order {r} but spectrum has order {}", spectrum.order()));
        }
        let zeros = spectrum.zeros();
        let reps: Vec<usize> = spectrum.groups().iter().map(ZeroGroup::representative).collect();
        let shifts = reps.iter().map(|&j| zeros[j]).collect();
        let multiplicity = spectrum.groups().iter().map(ZeroGroup::weight).collect();
        let mut residues = vec![vec![Vec::with_capacity(reps.len()); r + 1]; r + 1];
        let mut constants = vec![vec![0.0; r + 1]; r + 1];
        for k in 1..=r + 1 {
            for i in 1..=r + 1 {
                let exact = table.phi(k, i);
                let all = partial_fraction_weights_exact(exact, spectrum)?;
                residues[k - 1][i - 1] = reps.iter().map(|&j| all[j]).collect();
                constants[k - 1][i - 1] = partial_fraction_constant(exact, r).to_f64().unwrap_or(f64::NAN);
            }
        }
        let first_column = (1..=r + 1).map(|k| table.phi_f64(k, 1)).collect();
        Ok(Self { r, spectrum: spectrum.clone(), shifts, multiplicity, residues, constants, first_column })
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn spectrum(&self) -> &PadeSpectrum {
        &self.spectrum
    }

    /// Representative shifts `ζ_j`, one per conjugate group.
    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    /// 2 for a conjugate pair, 1 for a real zero.
    pub fn multiplicity(&self, g: usize) -> f64 {
        self.multiplicity[g]
    }

    /// Residue `c_{kig}` for the representative zero of group `g`.
    pub fn residue(&self, k: usize, i: usize, g: usize) -> Complex64 {
        self.residues[k - 1][i - 1][g]
    }

    /// Polynomial part `q_{ki}`.
    pub fn constant(&self, k: usize, i: usize) -> f64 {
        self.constants[k - 1][i - 1]
    }

    /// `φ_{k1}` in floating point.
    pub fn first_column_minor(&self, k: usize) -> &RealPolynomial {
        &self.first_column[k - 1]
    }
}

/// Shared, lazily built [`StageWeights`] for order `r`.
pub fn stage_weights(r: usize) -> Result<Arc<StageWeights>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<StageWeights>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().expect("weight cache").get(&r) {
        return Ok(Arc::clone(w));
    }
    let w = Arc::new(StageWeights::new(r)?);
    Ok(Arc::clone(cache.lock().expect("weight cache").entry(r).or_insert(w)))
}
