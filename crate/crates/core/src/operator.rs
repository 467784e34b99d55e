//! The operator `T = S_n + D` on `ℓ²(ℤ)`: `S_n e_i = w_i e_{i+n}`, `D e_i = d_i e_i`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{log_modulus_prefix, SequenceSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ShiftModel {
    weights: SequenceSpec,
    diagonals: SequenceSpec,
    step: usize,
    weight_sup: f64,
    weight_inf: f64,
    diag_sup: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRepr {
    pub weights: SequenceSpec,
    pub diagonals: SequenceSpec,
    #[serde(default = "default_step")]
    pub step: usize,
}

fn default_step() -> usize {
    1
}

impl TryFrom<ModelRepr> for ShiftModel {
    type Error = Error;
    fn try_from(r: ModelRepr) -> Result<Self> {
        ShiftModel::new(r.weights, r.diagonals, r.step)
    }
}

impl From<ShiftModel> for ModelRepr {
    fn from(m: ShiftModel) -> Self {
        ModelRepr {
            weights: m.weights,
            diagonals: m.diagonals,
            step: m.step,
        }
    }
}

/// Outer radius `r(S)` and inner radius `1/r(S^{-1})` of a pure weighted shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralRadiusBounds {
    /// `min_{k ≤ k_max} ‖S^k‖^{1/k}`; an upper bound on `r(S)`.
    pub r_upper: f64,
    /// `‖S^{k_max}‖^{1/k_max}`.
    pub r_estimate: f64,
    /// `max_{k ≤ k_max} (inf_i Π|w|)^{1/k}`; a lower bound on `1/r(S^{-1})`.
    /// `None` when `S` is not invertible.
    pub inner_lower: Option<f64>,
    pub inner_estimate: Option<f64>,
}

impl ShiftModel {
    pub fn new(weights: SequenceSpec, diagonals: SequenceSpec, step: usize) -> Result<Self> {
        if step == 0 {
            return Err(Error::InvalidParameter("shift step must be >= 1".into()));
        }
        let (weight_inf, weight_sup) = weights.modulus_bounds();
        let (_, diag_sup) = diagonals.modulus_bounds();
        Ok(Self {
            weights,
            diagonals,
            step,
            weight_sup,
            weight_inf,
            diag_sup,
        })
    }

    /// Shorthand for the 1-shift `w S + d I` with constant coefficients.
    pub fn constant(w: impl Into<Complex64>, d: impl Into<Complex64>) -> Result<Self> {
        Self::new(SequenceSpec::constant(w)?, SequenceSpec::constant(d)?, 1)
    }

    pub fn weights(&self) -> &SequenceSpec {
        &self.weights
    }

    pub fn diagonals(&self) -> &SequenceSpec {
        &self.diagonals
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// `sup_i |w_i| = ‖S‖`.
    pub fn weight_sup(&self) -> f64 {
        self.weight_sup
    }

    pub fn weight_inf(&self) -> f64 {
        self.weight_inf
    }

    pub fn diag_sup(&self) -> f64 {
        self.diag_sup
    }

    /// `S` is invertible iff `inf_i |w_i| > 0`.
    pub fn shift_invertible(&self) -> bool {
        self.weight_inf > 0.0
    }

    pub(crate) fn require_unit_step(&self) -> Result<()> {
        if self.step == 1 {
            Ok(())
        } else {
            Err(Error::StepNotOne(self.step))
        }
    }

    /// Same model with weights replaced by their moduli (a unitarily
    /// equivalent operator).
    pub fn normalize_phases(&self) -> ShiftModel {
        ShiftModel {
            weights: self.weights.map_modulus(),
            ..self.clone()
        }
    }

    /// The `n` residue-class 1-shifts `w^j_i = w_{j+in}`, `d^j_i = d_{j+in}`
    /// whose direct sum is `S_n + D`.
    pub fn residue_submodels(&self) -> Result<Vec<ShiftModel>> {
        if self.step == 1 {
            return Ok(vec![self.clone()]);
        }
        (0..self.step)
            .map(|j| {
                ShiftModel::new(
                    self.weights.subsample(j, self.step)?,
                    self.diagonals.subsample(j, self.step)?,
                    1,
                )
            })
            .collect()
    }

    /// `‖S_n^k‖ = sup_i Π_{m<k} |w_{i+mn}|`.
    pub fn norm_power(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter("power k must be >= 1".into()));
        }
        if self.step > 1 {
            return self
                .residue_submodels()?
                .iter()
                .map(|m| m.norm_power(k))
                .try_fold(0.0f64, |acc, r| Ok(acc.max(r?)));
        }
        Ok(extreme_window_logs(&self.weights, k).1.exp())
    }

    pub fn spectral_radius_bounds(&self, k_max: usize) -> Result<SpectralRadiusBounds> {
        if k_max == 0 {
            return Err(Error::InvalidParameter("k_max must be >= 1".into()));
        }
        if !self.diagonals.is_identically_zero() {
            return Err(Error::NonzeroDiagonals(self.diag_sup));
        }
        if self.step > 1 {
            let parts = self
                .residue_submodels()?
                .iter()
                .map(|m| m.spectral_radius_bounds(k_max))
                .collect::<Result<Vec<_>>>()?;
            let max = |f: fn(&SpectralRadiusBounds) -> f64| parts.iter().map(f).fold(0.0, f64::max);
            let min_opt = |f: fn(&SpectralRadiusBounds) -> Option<f64>| {
                parts
                    .iter()
                    .map(f)
                    .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
            };
            return Ok(SpectralRadiusBounds {
                r_upper: max(|b| b.r_upper),
                r_estimate: max(|b| b.r_estimate),
                inner_lower: min_opt(|b| b.inner_lower),
                inner_estimate: min_opt(|b| b.inner_estimate),
            });
        }
        let fw = self.weights.layout().window(k_max);
        let prefix = log_modulus_prefix(&self.weights, (fw.lo, fw.hi + k_max as i64));
        let mut r_upper = f64::INFINITY;
        let mut inner_lower = 0.0f64;
        let (mut last_min, mut last_max) = (0.0, 0.0);
        for k in 1..=k_max {
            let (lo, hi) = fw
                .starts()
                .map(|i| prefix.window(i, k))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)));
            r_upper = r_upper.min((hi / k as f64).exp());
            inner_lower = inner_lower.max((lo / k as f64).exp());
            last_min = lo;
            last_max = hi;
        }
        let invertible = self.shift_invertible();
        Ok(SpectralRadiusBounds {
            r_upper,
            r_estimate: (last_max / k_max as f64).exp(),
            inner_lower: invertible.then_some(inner_lower),
            inner_estimate: invertible.then(|| (last_min / k_max as f64).exp()),
        })
    }
}

/// `(min, max)` over `i ∈ ℤ` of `log Π_{m<k} |v_{i+m}|`.
fn extreme_window_logs(seq: &SequenceSpec, k: usize) -> (f64, f64) {
    let fw = seq.layout().window(k);
    let prefix = log_modulus_prefix(seq, (fw.lo, fw.hi + k as i64));
    fw.starts()
        .map(|i| prefix.window(i, k))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
}
