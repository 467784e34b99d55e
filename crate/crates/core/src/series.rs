//! Explicit inverse of `T - λ` as a truncated coefficient series.
//!
//! Forward (when `R⁺(λ) < 1`), column `i` of the inverse is
//!
//! ```text
//! a^i_{i+l} = (-1)^l Π_{m=0}^{l-1} w_{i+m} / Π_{m=0}^{l} (d_{i+m} - λ),   l = 0, 1, ...
//! ```
//!
//! and backward (when `R⁻(λ) < 1`)
//!
//! ```text
//! a^i_{i-k} = (-1)^{k+1} Π_{m=1}^{k-1} (d_{i-m} - λ) / Π_{m=1}^{k} w_{i-m},   k = 1, 2, ...
//! ```
//!
//! so that `a^i_{i-1} = 1 / w_{i-1}`. Coefficients are kept as
//! (log-modulus, phase) pairs.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::ShiftModel;
use crate::radii::{RadiiEvaluator, RadiusEstimate};
use crate::sequence::Layout;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug)]
pub struct InverseSeries {
    direction: Direction,
    lambda: Complex64,
    len: usize,
    lo: i64,
    hi: i64,
    /// Row-major over `[lo, hi]`, `terms()` entries per row.
    log_mag: Vec<f64>,
    phase: Vec<f64>,
    tail_bound: f64,
}

impl InverseSeries {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    /// Truncation length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.terms() == 0
    }

    /// Rows `i` whose coefficients are stored.
    pub fn index_range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// `max_i |a_L| / (1 - ρ)` with `ρ` the geometric-mean step ratio over
    /// the second half of each row. `+inf` when `ρ ≥ 1` or undefined.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    fn terms(&self) -> usize {
        match self.direction {
            Direction::Forward => self.len + 1,
            Direction::Backward => self.len,
        }
    }

    fn slot(&self, i: i64, j: i64) -> Option<usize> {
        if i < self.lo || i > self.hi {
            return None;
        }
        let t = match self.direction {
            Direction::Forward => j - i,
            Direction::Backward => i - j - 1,
        };
        if t < 0 || t as usize >= self.terms() {
            return None;
        }
        Some((i - self.lo) as usize * self.terms() + t as usize)
    }

    /// `a^i_j`, zero outside the truncated support.
    pub fn coefficient(&self, i: i64, j: i64) -> Complex64 {
        match self.slot(i, j) {
            Some(s) => polar(self.log_mag[s], self.phase[s]),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `(ln |a^i_j|, arg a^i_j)`, or `None` outside the stored support.
    pub fn log_coefficient(&self, i: i64, j: i64) -> Option<(f64, f64)> {
        self.slot(i, j).map(|s| (self.log_mag[s], self.phase[s]))
    }

    /// Support of column `i` of the truncated inverse.
    fn columns(&self, i: i64) -> std::ops::RangeInclusive<i64> {
        let l = self.len as i64;
        match self.direction {
            Direction::Forward => i..=i + l,
            Direction::Backward => i - l..=i - 1,
        }
    }

    /// Every row that can serve as a probe for [`residual_identity`].
    pub fn probe_indices(&self) -> Vec<i64> {
        (self.lo..self.hi).collect()
    }

    fn row_mut(&mut self, i: i64) -> (&mut [f64], &mut [f64]) {
        let t = self.terms();
        let s = (i - self.lo) as usize * t;
        (&mut self.log_mag[s..s + t], &mut self.phase[s..s + t])
    }
}

fn polar(log_mag: f64, phase: f64) -> Complex64 {
    if log_mag == f64::NEG_INFINITY {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(log_mag.exp(), phase)
    }
}

fn log_polar(z: Complex64) -> (f64, f64) {
    (z.norm().ln(), z.arg())
}

/// Fundamental window of the model for windows of length `len + 1`, padded
/// by `len + 1` on both sides.
pub fn default_index_range(model: &ShiftModel, len: usize) -> (i64, i64) {
    let layout = Layout::joint(model.weights().layout(), model.diagonals().layout());
    let fw = layout.window(len + 1);
    let pad = len as i64 + 1;
    (fw.lo - pad, fw.hi + pad)
}

fn check_range(range: (i64, i64)) -> Result<()> {
    if range.0 > range.1 {
        return Err(Error::InvalidParameter(format!(
            "index range [{}, {}] is empty",
            range.0, range.1
        )));
    }
    Ok(())
}

fn ratio_and_tail(series: &InverseSeries) -> f64 {
    let t = series.terms();
    if t < 2 {
        return f64::INFINITY;
    }
    let (first, last) = ((t - 1) / 2, t - 1);
    let steps = (last - first) as f64;
    let rows = (series.hi - series.lo + 1) as usize;
    let mut rho = 0.0f64;
    let mut top = f64::NEG_INFINITY;
    for r in 0..rows {
        let row = &series.log_mag[r * t..(r + 1) * t];
        top = top.max(row[last]);
        let step = if row[last] == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (row[last] - row[first]) / steps
        };
        rho = rho.max(step.exp());
    }
    if rho.is_nan() || rho >= 1.0 {
        return f64::INFINITY;
    }
    top.exp() / (1.0 - rho)
}

/// Forward series with `L + 1` terms per row over rows `index_range`
/// (default: [`default_index_range`]).
pub fn build_forward(
    model: &ShiftModel,
    lambda: Complex64,
    len: usize,
    index_range: Option<(i64, i64)>,
) -> Result<InverseSeries> {
    model.require_unit_step()?;
    let (lo, hi) = index_range.unwrap_or_else(|| default_index_range(model, len));
    check_range((lo, hi))?;
    let l = len as i64;
    let den: Vec<(f64, f64)> = model
        .diagonals()
        .values_over(lo, hi + l)
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            let z = d - lambda;
            if z == Complex64::new(0.0, 0.0) {
                Err(Error::DenominatorZero { index: lo + k as i64 })
            } else {
                Ok(log_polar(z))
            }
        })
        .collect::<Result<_>>()?;
    let num: Vec<(f64, f64)> = model
        .weights()
        .values_over(lo, hi + l)
        .into_iter()
        .map(log_polar)
        .collect();
    let rows = (hi - lo + 1) as usize;
    let mut series = InverseSeries {
        direction: Direction::Forward,
        lambda,
        len,
        lo,
        hi,
        log_mag: vec![0.0; rows * (len + 1)],
        phase: vec![0.0; rows * (len + 1)],
        tail_bound: f64::INFINITY,
    };
    for i in lo..=hi {
        let o = (i - lo) as usize;
        let (mags, phases) = series.row_mut(i);
        let (mut m, mut p) = (-den[o].0, -den[o].1);
        mags[0] = m;
        phases[0] = p;
        for t in 1..=len {
            m += num[o + t - 1].0 - den[o + t].0;
            p = (p + PI + num[o + t - 1].1 - den[o + t].1).rem_euclid(TAU);
            mags[t] = m;
            phases[t] = p;
        }
    }
    series.tail_bound = ratio_and_tail(&series);
    Ok(series)
}

/// Backward series with `L` terms per row over rows `index_range`
/// (default: [`default_index_range`]).
pub fn build_backward(
    model: &ShiftModel,
    lambda: Complex64,
    len: usize,
    index_range: Option<(i64, i64)>,
) -> Result<InverseSeries> {
    model.require_unit_step()?;
    let (lo, hi) = index_range.unwrap_or_else(|| default_index_range(model, len));
    check_range((lo, hi))?;
    let l = len as i64;
    let base = lo - l;
    let weights = model.weights().values_over(base, hi);
    if let Some(k) = weights.iter().position(|w| *w == Complex64::new(0.0, 0.0)) {
        return Err(Error::WeightZero { index: base + k as i64 });
    }
    if !model.shift_invertible() {
        let fw = model.weights().layout().window(1);
        let index = fw
            .starts()
            .find(|&i| model.weights().eval(i) == Complex64::new(0.0, 0.0))
            .unwrap_or(fw.lo);
        return Err(Error::WeightZero { index });
    }
    let num: Vec<(f64, f64)> = weights.into_iter().map(log_polar).collect();
    let diag: Vec<(f64, f64)> = model
        .diagonals()
        .values_over(base, hi)
        .into_iter()
        .map(|d| log_polar(d - lambda))
        .collect();
    let rows = (hi - lo + 1) as usize;
    let mut series = InverseSeries {
        direction: Direction::Backward,
        lambda,
        len,
        lo,
        hi,
        log_mag: vec![0.0; rows * len],
        phase: vec![0.0; rows * len],
        tail_bound: f64::INFINITY,
    };
    if len == 0 {
        return Ok(series);
    }
    for i in lo..=hi {
        let at = |j: i64| (j - base) as usize;
        let (mags, phases) = series.row_mut(i);
        let (mut m, mut p) = (-num[at(i - 1)].0, (-num[at(i - 1)].1).rem_euclid(TAU));
        mags[0] = m;
        phases[0] = p;
        for k in 1..len as i64 {
            let (dn, wn) = (diag[at(i - k)], num[at(i - k - 1)]);
            m += dn.0 - wn.0;
            p = (p + PI + dn.1 - wn.1).rem_euclid(TAU);
            mags[k as usize] = m;
            phases[k as usize] = p;
        }
    }
    series.tail_bound = ratio_and_tail(&series);
    Ok(series)
}

pub fn build(
    model: &ShiftModel,
    lambda: Complex64,
    direction: Direction,
    len: usize,
    index_range: Option<(i64, i64)>,
) -> Result<InverseSeries> {
    match direction {
        Direction::Forward => build_forward(model, lambda, len, index_range),
        Direction::Backward => build_backward(model, lambda, len, index_range),
    }
}

/// Dense vector over a short contiguous index span.
struct Patch {
    start: i64,
    v: Vec<Complex64>,
}

impl Patch {
    fn new(start: i64, end: i64) -> Self {
        Self {
            start,
            v: vec![Complex64::new(0.0, 0.0); (end - start + 1) as usize],
        }
    }

    fn add(&mut self, j: i64, z: Complex64) {
        self.v[(j - self.start) as usize] += z;
    }

    fn norm(&self) -> f64 {
        self.v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `max_i max(‖((T-λ)∘F) e_i - e_i‖, ‖(F∘(T-λ)) e_i - e_i‖)` over the probes,
/// using the truncated coefficients. A probe needs rows `i` and `i + 1`.
pub fn residual_identity(series: &InverseSeries, model: &ShiftModel, probes: &[i64]) -> Result<f64> {
    model.require_unit_step()?;
    let lambda = series.lambda;
    let w = |j: i64| model.weights().eval(j);
    let dl = |j: i64| model.diagonals().eval(j) - lambda;
    let span = series.len as i64 + 2;
    let mut worst = 0.0f64;
    for &i in probes {
        if i < series.lo || i + 1 > series.hi {
            return Err(Error::ProbeOutOfRange {
                index: i,
                lo: series.lo,
                hi: series.hi,
            });
        }
        let mut left = Patch::new(i - span, i + span);
        for j in series.columns(i) {
            let a = series.coefficient(i, j);
            left.add(j + 1, w(j) * a);
            left.add(j, dl(j) * a);
        }
        left.add(i, Complex64::new(-1.0, 0.0));

        let mut right = Patch::new(i - span, i + span);
        for j in series.columns(i + 1) {
            right.add(j, w(i) * series.coefficient(i + 1, j));
        }
        for j in series.columns(i) {
            right.add(j, dl(i) * series.coefficient(i, j));
        }
        right.add(i, Complex64::new(-1.0, 0.0));

        worst = worst.max(left.norm()).max(right.norm());
    }
    Ok(worst)
}

/// Which directions pass their existence gate at `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prechecks {
    pub r_plus: RadiusEstimate,
    pub r_minus: RadiusEstimate,
    /// `R⁺(λ) < 1`.
    pub forward: bool,
    /// `S` invertible and `R⁻(λ) < 1`.
    pub backward: bool,
}

impl Prechecks {
    pub fn evaluate(eval: &RadiiEvaluator, lambda: Complex64) -> Self {
        let (r_plus, r_minus) = eval.both(lambda);
        Self {
            r_plus,
            r_minus,
            forward: r_plus.value < 1.0,
            backward: eval.shift_invertible() && r_minus.value < 1.0,
        }
    }

    /// Forward wins when both pass.
    pub fn direction(&self) -> Option<Direction> {
        if self.forward {
            Some(Direction::Forward)
        } else if self.backward {
            Some(Direction::Backward)
        } else {
            None
        }
    }

    pub fn rate(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.r_plus.value,
            Direction::Backward => self.r_minus.value,
        }
    }
}

/// Smallest `L` with `rate^L ≤ tol`; `None` when `rate ≥ 1`.
pub fn series_length_for(rate: f64, tol: f64) -> Option<usize> {
    if rate.is_nan() || rate >= 1.0 || tol.is_nan() || tol <= 0.0 || tol >= 1.0 {
        return None;
    }
    if rate <= 0.0 {
        return Some(1);
    }
    Some(((tol.ln() / rate.ln()).ceil() as usize).max(1))
}

/// Smallest `L ≤ max_len` at which every row's last coefficient has modulus
/// at most `tol`, and at least [`series_length_for`] of the asymptotic rate.
/// Finite perturbations can keep coefficients large for a while before the
/// asymptotic rate takes over; this accounts for that transient. `None` when
/// no such `L` exists up to `max_len`.
pub fn required_length(
    model: &ShiftModel,
    lambda: Complex64,
    direction: Direction,
    tol: f64,
    max_len: usize,
) -> Result<Option<usize>> {
    model.require_unit_step()?;
    let eval = RadiiEvaluator::new(model, crate::radii::MIN_K_MAX.max(64))?;
    let pre = Prechecks::evaluate(&eval, lambda);
    let Some(floor) = series_length_for(pre.rate(direction), tol) else {
        return Ok(None);
    };
    let (lo, hi) = default_index_range(model, max_len);
    let l = max_len as i64;
    let ln = |z: Complex64| z.norm().ln();
    let w = model.weights().values_over(lo - l - 1, hi + l + 1);
    let d = model.diagonals().values_over(lo - l - 1, hi + l + 1);
    let at = |v: &[Complex64], i: i64| v[(i - (lo - l - 1)) as usize];
    let target = tol.ln();
    let zero = |i: i64| match direction {
        Direction::Forward => Error::DenominatorZero { index: i },
        Direction::Backward => Error::WeightZero { index: i },
    };
    let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
    for i in lo..=hi {
        let m = match direction {
            Direction::Forward => -ln(at(&d, i) - lambda),
            Direction::Backward => -ln(at(&w, i - 1)),
        };
        if m == f64::INFINITY {
            return Err(zero(if direction == Direction::Forward { i } else { i - 1 }));
        }
        rows.push(m);
    }
    // Forward rows start at l = 0, backward rows at k = 1.
    let first = usize::from(direction == Direction::Backward);
    for len in first..=max_len {
        if len > first {
            let t = (len - first) as i64;
            for (m, i) in rows.iter_mut().zip(lo..) {
                let (step, bad) = match direction {
                    Direction::Forward => (ln(at(&w, i + t - 1)) - ln(at(&d, i + t) - lambda), i + t),
                    Direction::Backward => (ln(at(&d, i - t) - lambda) - ln(at(&w, i - t - 1)), i - t - 1),
                };
                *m += step;
                if *m == f64::INFINITY || m.is_nan() {
                    return Err(zero(bad));
                }
            }
        }
        if len >= floor && rows.iter().all(|&m| m <= target) {
            return Ok(Some(len));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::SequenceSpec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    fn lemniscate() -> ShiftModel {
        ShiftModel::new(
            SequenceSpec::constant(1.0).unwrap(),
            SequenceSpec::periodic(vec![c(1.0), c(-1.0)]).unwrap(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn forward_geometric_example() {
        let m = ShiftModel::constant(1.0, 3.0).unwrap();
        let s = build_forward(&m, c(0.0), 20, None).unwrap();
        assert!(close(s.coefficient(0, 0), c(1.0 / 3.0), 1e-15));
        assert!(close(s.coefficient(0, 1), c(-1.0 / 9.0), 1e-15));
        for l in 0..=20 {
            let want = (-1.0f64).powi(l) / 3.0f64.powi(l + 1);
            assert!(close(s.coefficient(5, 5 + l as i64), c(want), 1e-13));
        }
        assert_eq!(s.coefficient(0, -1), c(0.0));
        assert_eq!(s.coefficient(0, 21), c(0.0));
    }

    #[test]
    fn diagonal_term_is_reciprocal() {
        let m = ShiftModel::new(
            SequenceSpec::step(c(1.0), Complex64::new(0.5, 2.0)).unwrap(),
            SequenceSpec::explicit(-2, vec![c(4.0), Complex64::new(0.0, 3.0), c(-2.0)], 5.0, 6.0)
                .unwrap(),
            1,
        )
        .unwrap();
        let lambda = Complex64::new(0.3, -0.1);
        let s = build_forward(&m, lambda, 6, Some((-8, 8))).unwrap();
        for i in -8..=8 {
            let want = 1.0 / (m.diagonals().eval(i) - lambda);
            assert!(close(s.coefficient(i, i), want, 1e-14));
        }
    }

    #[test]
    fn forward_ratio_matches_radius() {
        let m = ShiftModel::constant(2.0, 5.0).unwrap();
        let s = build_forward(&m, c(1.0), 30, None).unwrap();
        for l in 0..30 {
            let r = s.coefficient(0, l + 1).norm() / s.coefficient(0, l).norm();
            assert!((r - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_unweighted_shift_is_exact_inverse() {
        let m = ShiftModel::constant(1.0, 0.0).unwrap();
        let s = build_backward(&m, c(0.0), 10, None).unwrap();
        assert_eq!(s.coefficient(0, -1), c(1.0));
        for k in 2..=10 {
            assert_eq!(s.coefficient(0, -k), c(0.0));
        }
        let r = residual_identity(&s, &m, &s.probe_indices()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn backward_first_coefficient_is_reciprocal_weight() {
        let w = SequenceSpec::periodic(vec![c(2.0), Complex64::new(0.0, -3.0), c(0.5)]).unwrap();
        let m = ShiftModel::new(w, SequenceSpec::constant(0.25).unwrap(), 1).unwrap();
        let s = build_backward(&m, c(0.1), 8, None).unwrap();
        let (lo, hi) = s.index_range();
        for i in lo..=hi {
            let want = 1.0 / m.weights().eval(i - 1);
            assert!(close(s.coefficient(i, i - 1), want, 1e-14));
        }
    }

    #[test]
    fn backward_ratio_matches_radius() {
        let m = ShiftModel::constant(2.0, 0.0).unwrap();
        let s = build_backward(&m, c(1.0), 30, None).unwrap();
        for k in 1..30 {
            let r = s.coefficient(0, -k - 1).norm() / s.coefficient(0, -k).norm();
            assert!((r - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn precheck_rejects_divergent_backward() {
        let m = lemniscate();
        let eval = RadiiEvaluator::new(&m, 64).unwrap();
        let p = Prechecks::evaluate(&eval, c(3.0));
        assert!((p.r_minus.value - 8.0f64.sqrt()).abs() < 1e-12);
        assert!(!p.backward);
        assert!(p.forward);
        assert_eq!(p.direction(), Some(Direction::Forward));
        // The coefficients themselves are finite.
        let s = build_backward(&m, c(3.0), 12, None).unwrap();
        assert!(s.coefficient(0, -12).norm().is_finite());
        assert!(s.tail_bound().is_infinite());
    }

    #[test]
    fn residual_examples() {
        let m = ShiftModel::constant(1.0, 3.0).unwrap();
        let s = build_forward(&m, c(0.0), 40, None).unwrap();
        let r = residual_identity(&s, &m, &s.probe_indices()).unwrap();
        // The geometric bound sits below f64 resolution; allow rounding.
        assert!(r <= (1.0f64 / 3.0).powi(40) * 10.0 + 4.0 * f64::EPSILON, "{r}");

        for (w, d, lam) in [(1.0, 3.0, 0.0), (2.0, 5.0, 1.0), (0.5, -1.0, 0.5)] {
            let m = ShiftModel::constant(w, d).unwrap();
            let s = build_forward(&m, c(lam), 0, None).unwrap();
            let r = residual_identity(&s, &m, &[0]).unwrap();
            assert!((r - w / (d - lam).abs()).abs() < 1e-15);
        }

        let m = ShiftModel::new(
            SequenceSpec::constant(0.0).unwrap(),
            SequenceSpec::periodic(vec![c(2.0), c(-3.0), Complex64::new(0.0, 1.0)]).unwrap(),
            1,
        )
        .unwrap();
        for len in [0, 1, 5] {
            let s = build_forward(&m, c(0.5), len, None).unwrap();
            assert!(residual_identity(&s, &m, &s.probe_indices()).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn residual_decays_at_radius_rate() {
        let cases = [
            (ShiftModel::constant(2.0, 5.0).unwrap(), c(1.0), Direction::Forward),
            (ShiftModel::constant(2.0, 0.0).unwrap(), c(1.0), Direction::Backward),
            (lemniscate(), c(3.0), Direction::Forward),
            (lemniscate(), Complex64::new(0.9, 0.1), Direction::Backward),
        ];
        for (m, lam, dir) in cases {
            let eval = RadiiEvaluator::new(&m, 64).unwrap();
            let p = Prechecks::evaluate(&eval, lam);
            let rate = p.rate(dir);
            assert!(rate < 1.0);
            let (l1, l2) = (10usize, 20usize);
            let r1 = residual_identity(&build(&m, lam, dir, l1, None).unwrap(), &m, &[0, 1]).unwrap();
            let r2 = residual_identity(&build(&m, lam, dir, l2, None).unwrap(), &m, &[0, 1]).unwrap();
            let observed = (r2 / r1).powf(1.0 / (l2 - l1) as f64);
            assert!((observed / rate - 1.0).abs() < 0.1, "{observed} vs {rate}");
        }
    }

    #[test]
    fn telescoping_identities() {
        let m = ShiftModel::new(
            SequenceSpec::periodic(vec![c(1.0), Complex64::new(0.0, 2.0), c(-0.5)]).unwrap(),
            SequenceSpec::step(c(0.5), Complex64::new(-1.0, 1.0)).unwrap(),
            1,
        )
        .unwrap();
        let lambda = Complex64::new(0.2, 0.7);
        let f = build_forward(&m, lambda, 25, None).unwrap();
        let (lo, hi) = f.index_range();
        for i in lo..hi {
            for l in 0..25 {
                let j = i + l + 1;
                let a = m.weights().eval(i) * f.coefficient(i + 1, j);
                let b = (m.diagonals().eval(i) - lambda) * f.coefficient(i, j);
                assert!((a + b).norm() <= 1e-10 * a.norm().max(b.norm()));
            }
        }
        let g = build_backward(&m, lambda, 25, None).unwrap();
        let (lo, hi) = g.index_range();
        for i in lo..=hi {
            for l in 1..25 {
                let a = m.weights().eval(i - l - 1) * g.coefficient(i, i - l - 1);
                let b = (m.diagonals().eval(i - l) - lambda) * g.coefficient(i, i - l);
                assert!((a + b).norm() <= 1e-10 * a.norm().max(b.norm()).max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn zero_denominator_and_weight_errors() {
        let m = ShiftModel::constant(1.0, 2.0).unwrap();
        assert!(matches!(
            build_forward(&m, c(2.0), 4, None),
            Err(Error::DenominatorZero { .. })
        ));
        let m = ShiftModel::new(
            SequenceSpec::explicit(3, vec![c(0.0)], 1.0, 1.0).unwrap(),
            SequenceSpec::constant(0.0).unwrap(),
            1,
        )
        .unwrap();
        assert!(matches!(
            build_backward(&m, c(0.5), 4, Some((0, 10))),
            Err(Error::WeightZero { index: 3 })
        ));
        assert!(matches!(
            build_backward(&m, c(0.5), 4, Some((-40, -30))),
            Err(Error::WeightZero { index: 3 })
        ));
    }

    #[test]
    fn probe_out_of_range() {
        let m = ShiftModel::constant(1.0, 3.0).unwrap();
        let s = build_forward(&m, c(0.0), 4, Some((0, 5))).unwrap();
        assert!(residual_identity(&s, &m, &[4]).is_ok());
        assert!(matches!(
            residual_identity(&s, &m, &[5]),
            Err(Error::ProbeOutOfRange { index: 5, lo: 0, hi: 5 })
        ));
    }

    #[test]
    fn large_length_does_not_overflow() {
        let m = ShiftModel::constant(1.0, 1.0e-3).unwrap();
        let s = build_backward(&m, c(0.0), 500, None).unwrap();
        let (lm, _) = s.log_coefficient(0, -500).unwrap();
        assert!((lm - 499.0 * 1.0e-3f64.ln()).abs() < 1e-9);
        assert_eq!(s.coefficient(0, -500), c(0.0));
    }

    #[test]
    fn tail_bound_is_geometric_estimate() {
        let m = ShiftModel::constant(1.0, 3.0).unwrap();
        let s = build_forward(&m, c(0.0), 10, None).unwrap();
        let want = 3.0f64.powi(-11) / (1.0 - 1.0 / 3.0);
        assert!((s.tail_bound() / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn length_for_tolerance() {
        assert_eq!(series_length_for(0.5, 1e-3), Some(10));
        assert_eq!(series_length_for(0.0, 1e-8), Some(1));
        assert_eq!(series_length_for(1.0, 1e-8), None);
        assert_eq!(series_length_for(f64::INFINITY, 1e-8), None);
    }

    #[test]
    fn required_length_covers_perturbation_transients() {
        // Constant model: |a_L| = 2^L / 4^(L+1) for λ = -3 is below 1e-8 from
        // L = 25, so the rate bound 0.5^L ≤ 1e-8 (L = 27) decides.
        let m = ShiftModel::constant(2.0, 1.0).unwrap();
        let lam = c(-3.0);
        assert_eq!(required_length(&m, lam, Direction::Forward, 1e-8, 256).unwrap(), Some(27));

        let bump = SequenceSpec::explicit(-3, vec![c(0.5), c(-1.0), c(2.0), c(-1.5)], 0.0, 0.0).unwrap();
        let m = ShiftModel::new(SequenceSpec::constant(1.0).unwrap(), bump, 1).unwrap();
        let lam = Complex64::new(0.06, 0.0);
        let eval = RadiiEvaluator::new(&m, 64).unwrap();
        let pre = Prechecks::evaluate(&eval, lam);
        assert_eq!(pre.direction(), Some(Direction::Backward));
        let naive = series_length_for(pre.rate(Direction::Backward), 1e-8).unwrap();
        let len = required_length(&m, lam, Direction::Backward, 1e-8, 256).unwrap().unwrap();
        assert!(len > naive, "{len} vs {naive}");
        let s = build(&m, lam, Direction::Backward, len, None).unwrap();
        assert!(residual_identity(&s, &m, &s.probe_indices()).unwrap() <= 1e-6);
        assert_eq!(required_length(&m, Complex64::new(1.5, 0.0), Direction::Backward, 1e-8, 256).unwrap(), None);
    }

    #[test]
    fn directions_never_both_pass() {
        let models = [
            ShiftModel::constant(2.0, 1.0).unwrap(),
            lemniscate(),
            ShiftModel::new(
                SequenceSpec::step(c(1.0), c(2.0)).unwrap(),
                SequenceSpec::constant(0.0).unwrap(),
                1,
            )
            .unwrap(),
        ];
        for m in &models {
            let eval = RadiiEvaluator::new(m, 64).unwrap();
            for a in -12..=12 {
                for b in -12..=12 {
                    let lam = Complex64::new(a as f64 * 0.27, b as f64 * 0.27);
                    let p = Prechecks::evaluate(&eval, lam);
                    assert!(!(p.forward && p.backward), "{lam}");
                }
            }
        }
    }
}
