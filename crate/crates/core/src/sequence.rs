//! Finitely described bi-infinite complex sequences.
//!
//! Every kind has a finite layout: a (possibly empty) core index range with
//! periodic tails on either side. That layout is what makes suprema over all
//! of ℤ exactly computable: each distinct window of bounded length occurs at
//! some start inside a finite [`FundamentalWindow`].

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest table a random or explicit sequence may carry.
pub const MAX_TABLE_LEN: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    pub seed: u64,
    pub start: i64,
    pub end: i64,
    pub modulus_lo: f64,
    pub modulus_hi: f64,
    pub left: Complex64,
    pub right: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    Constant(Complex64),
    Periodic(Vec<Complex64>),
    /// `left` for i < 0, `right` for i ≥ 0.
    Step { left: Complex64, right: Complex64 },
    Explicit {
        start: i64,
        values: Vec<Complex64>,
        left: Complex64,
        right: Complex64,
    },
    /// Values over `[start, end]` are drawn once at construction from a
    /// ChaCha8 stream seeded with `params.seed`.
    Random {
        params: RandomParams,
        values: Vec<Complex64>,
    },
}

/// An immutable bi-infinite sequence `{v_i}`, `i ∈ ℤ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceRepr", into = "SequenceRepr")]
pub struct SequenceSpec {
    kind: Kind,
}

/// Index range `[lo, hi]` on which every distinct window of length at most
/// `max_len` starts at least once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FundamentalWindow {
    pub lo: i64,
    pub hi: i64,
    pub max_len: usize,
}

impl FundamentalWindow {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn starts(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

/// Core range plus tail periods. For `i < core.0` the sequence repeats with
/// `left_period`; for `i > core.1` with `right_period`. `core == None` means
/// the whole sequence is periodic with `left_period == right_period`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub core: Option<(i64, i64)>,
    pub left_period: usize,
    pub right_period: usize,
}

impl Layout {
    /// Layout of the paired sequence `i ↦ (a_i, b_i)`.
    pub fn joint(a: Layout, b: Layout) -> Layout {
        let core = match (a.core, b.core) {
            (None, None) => None,
            (Some(c), None) | (None, Some(c)) => Some(c),
            (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
        };
        Layout {
            core,
            left_period: lcm(a.left_period, b.left_period),
            right_period: lcm(a.right_period, b.right_period),
        }
    }

    pub fn window(&self, max_len: usize) -> FundamentalWindow {
        let k = max_len.max(1) as i64;
        match self.core {
            None => FundamentalWindow {
                lo: 0,
                hi: self.left_period as i64 - 1,
                max_len,
            },
            Some((lo, hi)) => FundamentalWindow {
                lo: lo - k - (self.left_period as i64 - 1),
                hi: (hi + k).max(hi + self.right_period as i64),
                max_len,
            },
        }
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn check_finite(what: &str, c: Complex64) -> Result<()> {
    if c.re.is_finite() && c.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSequence(format!("{what} must be finite, got {c}")))
    }
}

impl SequenceSpec {
    pub fn constant(value: impl Into<Complex64>) -> Result<Self> {
        let value = value.into();
        check_finite("constant value", value)?;
        Ok(Self {
            kind: Kind::Constant(value),
        })
    }

    pub fn periodic(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequence("periodic payload is empty".into()));
        }
        if values.len() > MAX_TABLE_LEN {
            return Err(Error::InvalidSequence("period too long".into()));
        }
        for v in &values {
            check_finite("periodic value", *v)?;
        }
        Ok(Self {
            kind: Kind::Periodic(values),
        })
    }

    pub fn step(left: impl Into<Complex64>, right: impl Into<Complex64>) -> Result<Self> {
        let (left, right) = (left.into(), right.into());
        check_finite("left value", left)?;
        check_finite("right value", right)?;
        Ok(Self {
            kind: Kind::Step { left, right },
        })
    }

    pub fn explicit(
        start: i64,
        values: Vec<Complex64>,
        left: impl Into<Complex64>,
        right: impl Into<Complex64>,
    ) -> Result<Self> {
        let (left, right) = (left.into(), right.into());
        if values.is_empty() {
            return Err(Error::InvalidSequence("explicit table is empty".into()));
        }
        if values.len() > MAX_TABLE_LEN {
            return Err(Error::InvalidSequence("explicit table too long".into()));
        }
        for v in &values {
            check_finite("table value", *v)?;
        }
        check_finite("left tail", left)?;
        check_finite("right tail", right)?;
        Ok(Self {
            kind: Kind::Explicit {
                start,
                values,
                left,
                right,
            },
        })
    }

    pub fn random(params: RandomParams) -> Result<Self> {
        if params.start > params.end {
            return Err(Error::InvalidSequence(format!(
                "random span [{}, {}] is empty",
                params.start, params.end
            )));
        }
        let len = (params.end - params.start) as u64 + 1;
        if len > MAX_TABLE_LEN as u64 {
            return Err(Error::InvalidSequence("random span too long".into()));
        }
        let (lo, hi) = (params.modulus_lo, params.modulus_hi);
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::InvalidSequence(format!(
                "modulus bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
            )));
        }
        check_finite("left tail", params.left)?;
        check_finite("right tail", params.right)?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let values = (0..len)
            .map(|_| {
                let r = if lo == hi { lo } else { rng.gen_range(lo..=hi) };
                let theta = rng.gen_range(0.0..TAU);
                Complex64::from_polar(r, theta)
            })
            .collect();
        Ok(Self {
            kind: Kind::Random { params, values },
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Value at index `i`.
    pub fn eval(&self, i: i64) -> Complex64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Periodic(v) => v[i.rem_euclid(v.len() as i64) as usize],
            Kind::Step { left, right } => {
                if i < 0 {
                    *left
                } else {
                    *right
                }
            }
            Kind::Explicit {
                start,
                values,
                left,
                right,
            } => table_eval(*start, values, *left, *right, i),
            Kind::Random { params, values } => {
                table_eval(params.start, values, params.left, params.right, i)
            }
        }
    }

    pub(crate) fn layout(&self) -> Layout {
        match &self.kind {
            Kind::Constant(_) => Layout {
                core: None,
                left_period: 1,
                right_period: 1,
            },
            Kind::Periodic(v) => Layout {
                core: None,
                left_period: v.len(),
                right_period: v.len(),
            },
            Kind::Step { .. } => Layout {
                core: Some((0, -1)),
                left_period: 1,
                right_period: 1,
            },
            Kind::Explicit { start, values, .. } => Layout {
                core: Some((*start, *start + values.len() as i64 - 1)),
                left_period: 1,
                right_period: 1,
            },
            Kind::Random { params, .. } => Layout {
                core: Some((params.start, params.end)),
                left_period: 1,
                right_period: 1,
            },
        }
    }

    /// Period of a purely periodic sequence (constant counts as period 1).
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            Kind::Constant(_) => Some(1),
            Kind::Periodic(v) => Some(v.len()),
            _ => None,
        }
    }

    /// Every value the sequence takes, each at least once.
    pub fn distinct_support(&self) -> Vec<Complex64> {
        match &self.kind {
            Kind::Constant(c) => vec![*c],
            Kind::Periodic(v) => v.clone(),
            Kind::Step { left, right } => vec![*left, *right],
            Kind::Explicit {
                values,
                left,
                right,
                ..
            } => {
                let mut out = values.clone();
                out.push(*left);
                out.push(*right);
                out
            }
            Kind::Random { params, values } => {
                let mut out = values.clone();
                out.push(params.left);
                out.push(params.right);
                out
            }
        }
    }

    /// `(inf_i |v_i|, sup_i |v_i|)`, exact.
    pub fn modulus_bounds(&self) -> (f64, f64) {
        self.distinct_support()
            .iter()
            .map(|v| v.norm())
            .fold((f64::INFINITY, 0.0), |(lo, hi), m| (lo.min(m), hi.max(m)))
    }

    pub fn is_identically_zero(&self) -> bool {
        self.distinct_support().iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    /// Same kind with every value replaced by its modulus. Random sequences
    /// become explicit tables, since their values are no longer a draw.
    pub fn map_modulus(&self) -> SequenceSpec {
        let m = |c: &Complex64| Complex64::new(c.norm(), 0.0);
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(m(c)),
            Kind::Periodic(v) => Kind::Periodic(v.iter().map(m).collect()),
            Kind::Step { left, right } => Kind::Step {
                left: m(left),
                right: m(right),
            },
            Kind::Explicit {
                start,
                values,
                left,
                right,
            } => Kind::Explicit {
                start: *start,
                values: values.iter().map(m).collect(),
                left: m(left),
                right: m(right),
            },
            Kind::Random { params, values } => Kind::Explicit {
                start: params.start,
                values: values.iter().map(m).collect(),
                left: m(&params.left),
                right: m(&params.right),
            },
        };
        SequenceSpec { kind }
    }

    /// The residue subsequence `i ↦ v_{offset + i·stride}`, `0 ≤ offset < stride`.
    pub fn subsample(&self, offset: usize, stride: usize) -> Result<SequenceSpec> {
        if stride == 0 || offset >= stride {
            return Err(Error::InvalidParameter(format!(
                "residue {offset} mod {stride} is not a valid class"
            )));
        }
        if stride == 1 {
            return Ok(self.clone());
        }
        let (j, n) = (offset as i64, stride as i64);
        let table = |start: i64, len: usize, left: Complex64, right: Complex64| {
            let end = start + len as i64 - 1;
            let i_lo = div_ceil(start - j, n);
            let i_hi = (end - j).div_euclid(n);
            let (first, values): (i64, Vec<Complex64>) = if i_lo <= i_hi {
                (i_lo, (i_lo..=i_hi).map(|i| self.eval(j + i * n)).collect())
            } else {
                (i_lo, vec![self.eval(j + i_lo * n)])
            };
            Kind::Explicit {
                start: first,
                values,
                left,
                right,
            }
        };
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(*c),
            Kind::Periodic(v) => {
                let p = v.len();
                let q = p / gcd(p, stride);
                Kind::Periodic(
                    (0..q)
                        .map(|i| v[(offset + i * stride) % p])
                        .collect(),
                )
            }
            Kind::Step { left, right } => Kind::Step {
                left: *left,
                right: *right,
            },
            Kind::Explicit {
                start,
                values,
                left,
                right,
            } => table(*start, values.len(), *left, *right),
            Kind::Random { params, values } => {
                table(params.start, values.len(), params.left, params.right)
            }
        };
        Ok(SequenceSpec { kind })
    }

    /// Values over `[lo, hi]`.
    pub(crate) fn values_over(&self, lo: i64, hi: i64) -> Vec<Complex64> {
        (lo..=hi).map(|i| self.eval(i)).collect()
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

fn table_eval(start: i64, values: &[Complex64], left: Complex64, right: Complex64, i: i64) -> Complex64 {
    if i < start {
        left
    } else {
        let off = (i - start) as usize;
        values.get(off).copied().unwrap_or(right)
    }
}

/// Fundamental window of a single sequence for windows up to length `k`.
pub fn fundamental_window(spec: &SequenceSpec, k: usize) -> Result<FundamentalWindow> {
    if k < 1 {
        return Err(Error::InvalidParameter("window length K must be >= 1".into()));
    }
    Ok(spec.layout().window(k))
}

/// Log-domain prefix sums of `|v_i|` over a contiguous index range.
///
/// Finite logs and zero counts are accumulated separately, so a window that
/// contains a zero is reported as `-inf` without poisoning later windows.
#[derive(Clone, Debug)]
pub struct LogPrefix {
    start: i64,
    finite: Vec<f64>,
    zeros: Vec<u32>,
}

impl LogPrefix {
    /// Builds the prefix from log-moduli starting at index `start`; `-inf`
    /// entries mark zeros.
    pub fn from_logs(start: i64, logs: impl IntoIterator<Item = f64>) -> Self {
        let mut finite = vec![0.0];
        let mut zeros = vec![0];
        let (mut s, mut z) = (0.0, 0u32);
        for l in logs {
            if l == f64::NEG_INFINITY {
                z += 1;
            } else {
                s += l;
            }
            finite.push(s);
            zeros.push(z);
        }
        Self {
            start,
            finite,
            zeros,
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Number of terms covered.
    pub fn len(&self) -> usize {
        self.finite.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `P[j] = Σ_{i=a}^{a+j-1} log|v_i|`, `-inf` once a zero has been passed.
    pub fn values(&self) -> Vec<f64> {
        self.finite
            .iter()
            .zip(&self.zeros)
            .map(|(&s, &z)| if z > 0 { f64::NEG_INFINITY } else { s })
            .collect()
    }

    #[inline]
    fn offsets(&self, i: i64, k: usize) -> (usize, usize) {
        let a = (i - self.start) as usize;
        let b = a + k;
        debug_assert!(b <= self.len(), "window [{i}, +{k}) outside prefix");
        (a, b)
    }

    #[inline]
    pub fn contains_zero(&self, i: i64, k: usize) -> bool {
        let (a, b) = self.offsets(i, k);
        self.zeros[b] > self.zeros[a]
    }

    /// `log Π_{m=0}^{k-1} |v_{i+m}|`, `-inf` if any factor is zero.
    #[inline]
    pub fn window(&self, i: i64, k: usize) -> f64 {
        let (a, b) = self.offsets(i, k);
        if self.zeros[b] > self.zeros[a] {
            f64::NEG_INFINITY
        } else {
            self.finite[b] - self.finite[a]
        }
    }
}

/// Prefix of `log|v_i|` over `range = [a, b]`.
pub fn log_modulus_prefix(spec: &SequenceSpec, range: (i64, i64)) -> LogPrefix {
    let (a, b) = range;
    LogPrefix::from_logs(a, (a..=b).map(|i| spec.eval(i).norm().ln()))
}

// --- JSON representation -------------------------------------------------

/// A complex number on the wire: a bare number (real) or `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexRepr> for Complex64 {
    fn from(c: ComplexRepr) -> Self {
        match c {
            ComplexRepr::Real(re) => Complex64::new(re, 0.0),
            ComplexRepr::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexRepr {
    fn from(c: Complex64) -> Self {
        ComplexRepr::Pair([c.re, c.im])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SequenceRepr {
    Constant {
        value: ComplexRepr,
    },
    Periodic {
        values: Vec<ComplexRepr>,
    },
    Step {
        left: ComplexRepr,
        right: ComplexRepr,
    },
    Explicit {
        start: i64,
        values: Vec<ComplexRepr>,
        left: ComplexRepr,
        right: ComplexRepr,
    },
    Random {
        seed: u64,
        start: i64,
        end: i64,
        modulus: [f64; 2],
        left: ComplexRepr,
        right: ComplexRepr,
    },
}

impl TryFrom<SequenceRepr> for SequenceSpec {
    type Error = Error;

    fn try_from(r: SequenceRepr) -> Result<Self> {
        let conv = |v: Vec<ComplexRepr>| v.into_iter().map(Complex64::from).collect::<Vec<_>>();
        match r {
            SequenceRepr::Constant { value } => SequenceSpec::constant(Complex64::from(value)),
            SequenceRepr::Periodic { values } => SequenceSpec::periodic(conv(values)),
            SequenceRepr::Step { left, right } => {
                SequenceSpec::step(Complex64::from(left), Complex64::from(right))
            }
            SequenceRepr::Explicit {
                start,
                values,
                left,
                right,
            } => SequenceSpec::explicit(
                start,
                conv(values),
                Complex64::from(left),
                Complex64::from(right),
            ),
            SequenceRepr::Random {
                seed,
                start,
                end,
                modulus,
                left,
                right,
            } => SequenceSpec::random(RandomParams {
                seed,
                start,
                end,
                modulus_lo: modulus[0],
                modulus_hi: modulus[1],
                left: left.into(),
                right: right.into(),
            }),
        }
    }
}

impl From<SequenceSpec> for SequenceRepr {
    fn from(s: SequenceSpec) -> Self {
        let conv = |v: Vec<Complex64>| v.into_iter().map(ComplexRepr::from).collect();
        match s.kind {
            Kind::Constant(c) => SequenceRepr::Constant { value: c.into() },
            Kind::Periodic(v) => SequenceRepr::Periodic { values: conv(v) },
            Kind::Step { left, right } => SequenceRepr::Step {
                left: left.into(),
                right: right.into(),
            },
            Kind::Explicit {
                start,
                values,
                left,
                right,
            } => SequenceRepr::Explicit {
                start,
                values: conv(values),
                left: left.into(),
                right: right.into(),
            },
            Kind::Random { params, .. } => SequenceRepr::Random {
                seed: params.seed,
                start: params.start,
                end: params.end,
                modulus: [params.modulus_lo, params.modulus_hi],
                left: params.left.into(),
                right: params.right.into(),
            },
        }
    }
}
