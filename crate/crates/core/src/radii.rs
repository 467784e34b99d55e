//! Forward and backward growth rates `R⁺(λ)`, `R⁻(λ)` of `T - λ`.
//!
//! ```text
//! R⁺(λ) = lim_k [ sup_i | Π_{m=0}^{k-1} w_{i+m} / Π_{m=0}^{k} (d_{i+m} - λ) | ]^{1/k}
//! R⁻(λ) = lim_k [ sup_i | Π_{m=0}^{k-1} (d_{i-m} - λ) / Π_{m=0}^{k} w_{i-m} | ]^{1/k}
//! ```
//!
//! Constant and periodic coefficient pairs have exact closed forms. Everything
//! else is estimated from the log-domain window maxima `s_k` (exact sup over ℤ
//! via the fundamental window) with two estimators: the root `s_K / K` and the
//! least-squares slope of `s_k` over `k ∈ [K/2, K]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::ShiftModel;
use crate::sequence::{lcm, FundamentalWindow, Layout, LogPrefix};

/// Smallest truncation depth accepted by the estimators.
pub const MIN_K_MAX: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMethod {
    ClosedFormConstant,
    ClosedFormPeriodic,
    TruncatedSlope,
    TruncatedRoot,
    /// `R⁻` of a non-invertible shift: the backward quotients are unbounded.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    /// Extended real in `[0, +inf]`.
    #[serde(with = "crate::extreal")]
    pub value: f64,
    /// Truncation depth used; 0 for closed forms.
    pub k_used: usize,
    pub method: RadiusMethod,
    #[serde(with = "crate::extreal")]
    pub uncertainty: f64,
}

impl RadiusEstimate {
    fn exact(value: f64, method: RadiusMethod) -> Self {
        Self {
            value,
            k_used: 0,
            method,
            uncertainty: 0.0,
        }
    }

    fn degenerate() -> Self {
        Self::exact(f64::INFINITY, RadiusMethod::Degenerate)
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(
            self.method,
            RadiusMethod::ClosedFormConstant | RadiusMethod::ClosedFormPeriodic
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Closed form where one exists, truncation otherwise.
    #[default]
    Auto,
    /// Always use the truncated estimators.
    Truncated,
}

#[derive(Clone, Debug)]
enum ClosedForm {
    Constant { w: f64, d: Complex64 },
    /// Both sequences lifted to a common period.
    Periodic {
        w_log_sum: f64,
        w_has_zero: bool,
        d: Vec<Complex64>,
    },
}

/// Radii evaluator for one 1-shift model, reusable across many `λ`.
#[derive(Clone, Debug)]
pub struct RadiiEvaluator {
    k_max: usize,
    invertible: bool,
    closed: Option<ClosedForm>,
    window: FundamentalWindow,
    range_lo: i64,
    weights: LogPrefix,
    diagonals: Vec<Complex64>,
}

impl RadiiEvaluator {
    pub fn new(model: &ShiftModel, k_max: usize) -> Result<Self> {
        Self::with_strategy(model, k_max, Strategy::Auto)
    }

    pub fn with_strategy(model: &ShiftModel, k_max: usize, strategy: Strategy) -> Result<Self> {
        model.require_unit_step()?;
        if k_max < MIN_K_MAX {
            return Err(Error::InvalidParameter(format!(
                "k_max must be >= {MIN_K_MAX}, got {k_max}"
            )));
        }
        let (w, d) = (model.weights(), model.diagonals());
        let closed = match strategy {
            Strategy::Truncated => None,
            Strategy::Auto => match (w.period(), d.period()) {
                (Some(1), Some(1)) => Some(ClosedForm::Constant {
                    w: w.eval(0).norm(),
                    d: d.eval(0),
                }),
                (Some(pw), Some(pd)) => {
                    let p = lcm(pw, pd) as i64;
                    let logs: Vec<f64> = (0..p).map(|i| w.eval(i).norm().ln()).collect();
                    let w_has_zero = logs.contains(&f64::NEG_INFINITY);
                    Some(ClosedForm::Periodic {
                        w_log_sum: logs.iter().filter(|l| l.is_finite()).sum(),
                        w_has_zero,
                        d: (0..p).map(|i| d.eval(i)).collect(),
                    })
                }
                _ => None,
            },
        };
        let window = Layout::joint(w.layout(), d.layout()).window(k_max + 1);
        let range_lo = window.lo;
        let range_hi = window.hi + k_max as i64 + 1;
        let weights = LogPrefix::from_logs(range_lo, (range_lo..=range_hi).map(|i| w.eval(i).norm().ln()));
        let diagonals = (range_lo..=range_hi).map(|i| d.eval(i)).collect();
        Ok(Self {
            k_max,
            invertible: model.shift_invertible(),
            closed,
            window,
            range_lo,
            weights,
            diagonals,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn shift_invertible(&self) -> bool {
        self.invertible
    }

    pub fn fundamental_window(&self) -> FundamentalWindow {
        self.window
    }

    pub fn r_plus(&self, lambda: Complex64) -> RadiusEstimate {
        match &self.closed {
            Some(cf) => closed_plus(cf, lambda),
            None => self.truncated(lambda, true),
        }
    }

    pub fn r_minus(&self, lambda: Complex64) -> RadiusEstimate {
        if !self.invertible {
            return RadiusEstimate::degenerate();
        }
        match &self.closed {
            Some(cf) => closed_minus(cf, lambda),
            None => self.truncated(lambda, false),
        }
    }

    /// `(R⁺(λ), R⁻(λ))`; the second is `Degenerate` for non-invertible `S`.
    pub fn both(&self, lambda: Complex64) -> (RadiusEstimate, RadiusEstimate) {
        match &self.closed {
            Some(cf) => (
                closed_plus(cf, lambda),
                if self.invertible {
                    closed_minus(cf, lambda)
                } else {
                    RadiusEstimate::degenerate()
                },
            ),
            None => {
                let dp = self.diag_prefix(lambda);
                let plus = estimate(&self.window_maxima(&dp, true), self.k_max);
                let minus = if self.invertible {
                    estimate(&self.window_maxima(&dp, false), self.k_max)
                } else {
                    RadiusEstimate::degenerate()
                };
                (plus, minus)
            }
        }
    }

    fn diag_prefix(&self, lambda: Complex64) -> LogPrefix {
        LogPrefix::from_logs(
            self.range_lo,
            self.diagonals.iter().map(|d| (d - lambda).norm().ln()),
        )
    }

    fn truncated(&self, lambda: Complex64, forward: bool) -> RadiusEstimate {
        let dp = self.diag_prefix(lambda);
        estimate(&self.window_maxima(&dp, forward), self.k_max)
    }

    /// `s_k` for `k = 1..=k_max` (index `k - 1`).
    fn window_maxima(&self, diag: &LogPrefix, forward: bool) -> Vec<f64> {
        let w = &self.weights;
        (1..=self.k_max)
            .map(|k| {
                let mut best = f64::NEG_INFINITY;
                for j in self.window.starts() {
                    let (num, den) = if forward {
                        // w_j..w_{j+k-1} over (d-λ)_j..(d-λ)_{j+k}
                        (w.window(j, k), diag.window(j, k + 1))
                    } else {
                        // (d-λ)_{j+1}..(d-λ)_{j+k} over w_j..w_{j+k}, i.e. i = j + k
                        (diag.window(j + 1, k), w.window(j, k + 1))
                    };
                    let q = quotient(num, den);
                    if q > best {
                        best = q;
                        if best == f64::INFINITY {
                            break;
                        }
                    }
                }
                best
            })
            .collect()
    }
}

/// Log of a quotient of window products. A vanishing denominator wins over a
/// vanishing numerator.
#[inline]
fn quotient(num: f64, den: f64) -> f64 {
    if den == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        num - den
    }
}

fn closed_plus(cf: &ClosedForm, lambda: Complex64) -> RadiusEstimate {
    match cf {
        ClosedForm::Constant { w, d } => {
            let den = (d - lambda).norm();
            let v = if den == 0.0 {
                f64::INFINITY
            } else {
                w / den
            };
            RadiusEstimate::exact(v, RadiusMethod::ClosedFormConstant)
        }
        ClosedForm::Periodic {
            w_log_sum,
            w_has_zero,
            d,
        } => {
            let (d_sum, d_zero) = log_sum(d, lambda);
            let v = if d_zero {
                f64::INFINITY
            } else if *w_has_zero {
                0.0
            } else {
                ((w_log_sum - d_sum) / d.len() as f64).exp()
            };
            RadiusEstimate::exact(v, RadiusMethod::ClosedFormPeriodic)
        }
    }
}

fn closed_minus(cf: &ClosedForm, lambda: Complex64) -> RadiusEstimate {
    match cf {
        ClosedForm::Constant { w, d } => RadiusEstimate::exact(
            (d - lambda).norm() / w,
            RadiusMethod::ClosedFormConstant,
        ),
        ClosedForm::Periodic { w_log_sum, d, .. } => {
            let (d_sum, d_zero) = log_sum(d, lambda);
            let v = if d_zero {
                0.0
            } else {
                ((d_sum - w_log_sum) / d.len() as f64).exp()
            };
            RadiusEstimate::exact(v, RadiusMethod::ClosedFormPeriodic)
        }
    }
}

fn log_sum(d: &[Complex64], lambda: Complex64) -> (f64, bool) {
    let mut sum = 0.0;
    let mut zero = false;
    for di in d {
        let m = (di - lambda).norm();
        if m == 0.0 {
            zero = true;
        } else {
            sum += m.ln();
        }
    }
    (sum, zero)
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

fn abs_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn estimate(s: &[f64], k_max: usize) -> RadiusEstimate {
    let last = s[k_max - 1];
    if last.is_infinite() {
        let value = if last > 0.0 { f64::INFINITY } else { 0.0 };
        return RadiusEstimate {
            value,
            k_used: k_max,
            method: RadiusMethod::TruncatedSlope,
            uncertainty: 0.0,
        };
    }
    let root = (last / k_max as f64).exp();
    let pts: Vec<(f64, f64)> = (k_max / 2..=k_max)
        .map(|k| (k as f64, s[k - 1]))
        .filter(|p| p.1.is_finite())
        .collect();
    match ls_slope(&pts) {
        Some(slope) if slope.is_finite() => {
            let value = slope.exp();
            RadiusEstimate {
                value,
                k_used: k_max,
                method: RadiusMethod::TruncatedSlope,
                uncertainty: abs_diff(value, root),
            }
        }
        _ => RadiusEstimate {
            value: root,
            k_used: k_max,
            method: RadiusMethod::TruncatedRoot,
            uncertainty: f64::INFINITY,
        },
    }
}

pub fn r_plus(model: &ShiftModel, lambda: Complex64, k_max: usize) -> Result<RadiusEstimate> {
    Ok(RadiiEvaluator::new(model, k_max)?.r_plus(lambda))
}

pub fn r_minus(model: &ShiftModel, lambda: Complex64, k_max: usize) -> Result<RadiusEstimate> {
    Ok(RadiiEvaluator::new(model, k_max)?.r_minus(lambda))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OriginCheck {
    pub r_plus: RadiusEstimate,
    pub r_minus: RadiusEstimate,
    /// `R⁺(0) ≤ 1 + tol` or `R⁻(0) ≤ 1 + tol`.
    pub consistent: bool,
}

/// Radii at `λ = 0`. When `T` is invertible at least one of them is `≤ 1`.
pub fn origin_check(model: &ShiftModel, k_max: usize, tol: f64) -> Result<OriginCheck> {
    let (r_plus, r_minus) = RadiiEvaluator::new(model, k_max)?.both(Complex64::new(0.0, 0.0));
    Ok(OriginCheck {
        r_plus,
        r_minus,
        consistent: r_plus.value <= 1.0 + tol || r_minus.value <= 1.0 + tol,
    })
}
