//! Spectrum membership, region scans and boundary curves.
//!
//! For invertible `S`, `λ ∈ σ(T)` iff `R⁺(λ) ≥ 1` and `R⁻(λ) ≥ 1`; otherwise
//! `R⁺(λ) ≥ 1` alone decides. Numerically both tests are relaxed to
//! `R ≥ 1 - ε`.

mod boundary;
mod grid;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::ShiftModel;
use crate::radii::{RadiiEvaluator, RadiusEstimate};

pub use boundary::{extract_boundary, BoundaryComponent, BoundaryPolyline};
pub use grid::{
    decompose_union, default_box, scan, Cell, CellClass, RegionGrid, ScanParams, DEFAULT_MAX_CELLS, MAX_DEPTH,
    MAX_RESOLUTION,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub lambda: Complex64,
    pub r_plus: RadiusEstimate,
    /// Absent when `S` is not invertible.
    pub r_minus: Option<RadiusEstimate>,
    pub in_spectrum: bool,
    /// `min |ln R|` over the conditions that decide membership.
    #[serde(with = "crate::extreal")]
    pub margin: f64,
}

/// Resolvent side a point falls on, or inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Label {
    Inside,
    /// `R⁺ < 1 - ε`: the forward series converges.
    Forward,
    /// `R⁻ < 1 - ε`: the backward series converges.
    Backward,
}

pub(crate) fn label(r_plus: f64, r_minus: Option<f64>, eps: f64) -> Label {
    let threshold = 1.0 - eps;
    if r_plus < threshold {
        Label::Forward
    } else if matches!(r_minus, Some(r) if r < threshold) {
        Label::Backward
    } else {
        Label::Inside
    }
}

pub(crate) fn margin(r_plus: f64, r_minus: Option<f64>) -> f64 {
    let m = r_plus.ln().abs();
    match r_minus {
        Some(r) => m.min(r.ln().abs()),
        None => m,
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps must lie in [0, 1), got {eps}")))
    }
}

/// Default band half-width `10 / k_max`.
pub fn default_eps(k_max: usize) -> f64 {
    10.0 / k_max as f64
}

pub fn classify(eval: &RadiiEvaluator, lambda: Complex64, eps: f64) -> MembershipResult {
    let (r_plus, r_minus) = eval.both(lambda);
    let r_minus = eval.shift_invertible().then_some(r_minus);
    let rm = r_minus.map(|r| r.value);
    MembershipResult {
        lambda,
        r_plus,
        r_minus,
        in_spectrum: label(r_plus.value, rm, eps) == Label::Inside,
        margin: margin(r_plus.value, rm),
    }
}

pub fn membership(model: &ShiftModel, lambda: Complex64, k_max: usize, eps: f64) -> Result<MembershipResult> {
    check_eps(eps)?;
    let eval = RadiiEvaluator::new(model, k_max)?;
    Ok(classify(&eval, lambda, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::SequenceSpec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn membership_examples() {
        let m = ShiftModel::constant(2.0, 1.0).unwrap();
        let r = membership(&m, c(3.0), 64, 0.0).unwrap();
        assert!(r.in_spectrum);
        assert_eq!(r.r_plus.value, 1.0);
        assert_eq!(r.r_minus.unwrap().value, 1.0);
        assert_eq!(r.margin, 0.0);

        let r = membership(&m, c(1.0), 64, 0.0).unwrap();
        assert_eq!(r.r_plus.value, f64::INFINITY);
        assert_eq!(r.r_minus.unwrap().value, 0.0);
        assert!(!r.in_spectrum);

        let m = ShiftModel::constant(0.0, 5.0).unwrap();
        let r = membership(&m, c(5.0), 64, 0.0).unwrap();
        assert!(r.in_spectrum);
        assert!(r.r_minus.is_none());
        let r = membership(&m, c(4.0), 64, 0.0).unwrap();
        assert!(!r.in_spectrum);

        let m = ShiftModel::new(
            SequenceSpec::step(c(1.0), c(2.0)).unwrap(),
            SequenceSpec::constant(0.0).unwrap(),
            1,
        )
        .unwrap();
        let r = membership(&m, c(1.5), 64, 1e-9).unwrap();
        assert!((r.r_plus.value - 2.0 / 1.5).abs() < 1e-9);
        assert!((r.r_minus.unwrap().value - 1.5).abs() < 1e-9);
        assert!(r.in_spectrum);
        for lam in [0.5, 2.5, 3.0] {
            assert!(!membership(&m, c(lam), 64, 1e-9).unwrap().in_spectrum);
        }
    }

    #[test]
    fn ties_count_as_inside() {
        let m = ShiftModel::constant(1.0, 0.0).unwrap();
        let r = membership(&m, c(2.0), 64, 0.5).unwrap();
        assert_eq!(r.r_plus.value, 0.5);
        assert!(r.in_spectrum);
    }

    #[test]
    fn bad_eps_is_rejected() {
        let m = ShiftModel::constant(1.0, 0.0).unwrap();
        for eps in [-0.1, 1.0, f64::NAN] {
            assert!(membership(&m, c(1.0), 64, eps).is_err());
        }
    }

    #[test]
    fn json_shape() {
        let m = ShiftModel::constant(2.0, 1.0).unwrap();
        let r = membership(&m, c(1.0), 64, 0.0).unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["r_plus"]["value"], "inf");
        assert_eq!(v["margin"], "inf");
        assert_eq!(v["in_spectrum"], false);
    }
}
