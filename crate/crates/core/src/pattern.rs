use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::{project_gap, SpectralGap};
use crate::scalar::Scalar;
use crate::signal::Signal;

/// Families of observation sets, described in their forward-oriented form
/// (support in the non-positive integers except for the two-sided kinds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternKind {
    /// Every integer `t <= 0`.
    ContiguousNegative,
    /// Multiples of `step` at or below zero.
    Periodic { step: u32 },
    /// `-(j^exponent)` for `j >= 0`. Odd exponents are the natural one-sided
    /// lattices; even ones only exist here reflected, which the constructor
    /// makes explicit.
    Power { exponent: u32, reflected: bool },
    /// `step * k^exponent` over all integers `k`; odd exponent keeps it
    /// genuinely two-sided.
    SignedPower { step: u32, exponent: u32 },
    /// A finite, explicit set.
    Explicit { points: Vec<i64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forward,
    Backward,
}

/// An observation set: a pattern family plus an orientation. Backward
/// orientation mirrors every query through `t -> -t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationPattern {
    #[serde(flatten)]
    kind: PatternKind,
    #[serde(default = "default_orientation")]
    orientation: Orientation,
}

fn default_orientation() -> Orientation {
    Orientation::Forward
}

impl ObservationPattern {
    pub fn new(kind: PatternKind, orientation: Orientation) -> Result<Self> {
        match &kind {
            PatternKind::Periodic { step } if *step == 0 => {
                return Err(Error::InvalidParam { name: "step", value: 0.0 });
            }
            PatternKind::Power { exponent, reflected } => {
                if *exponent == 0 {
                    return Err(Error::InvalidParam { name: "exponent", value: 0.0 });
                }
                if *exponent % 2 == 0 && !reflected {
                    return Err(Error::EvenPowerNeedsReflection { exponent: *exponent });
                }
            }
            PatternKind::SignedPower { step, exponent } => {
                if *step == 0 {
                    return Err(Error::InvalidParam { name: "step", value: 0.0 });
                }
                if *exponent == 0 || *exponent % 2 == 0 {
                    return Err(Error::InvalidParam { name: "exponent", value: *exponent as f64 });
                }
            }
            PatternKind::Explicit { points } if points.is_empty() => {
                return Err(Error::Empty { what: "explicit pattern" });
            }
            _ => {}
        }
        let kind = match kind {
            PatternKind::Explicit { mut points } => {
                points.sort_unstable();
                points.dedup();
                PatternKind::Explicit { points }
            }
            other => other,
        };
        Ok(ObservationPattern { kind, orientation })
    }

    pub fn contiguous_negative() -> Self {
        ObservationPattern {
            kind: PatternKind::ContiguousNegative,
            orientation: Orientation::Forward,
        }
    }

    pub fn periodic(step: u32) -> Result<Self> {
        Self::new(PatternKind::Periodic { step }, Orientation::Forward)
    }

    pub fn power(exponent: u32) -> Result<Self> {
        Self::new(PatternKind::Power { exponent, reflected: false }, Orientation::Forward)
    }

    /// Even-exponent lattice reflected into the non-positive integers.
    pub fn power_reflected(exponent: u32) -> Result<Self> {
        Self::new(PatternKind::Power { exponent, reflected: true }, Orientation::Forward)
    }

    pub fn signed_power(step: u32, exponent: u32) -> Result<Self> {
        Self::new(PatternKind::SignedPower { step, exponent }, Orientation::Forward)
    }

    pub fn explicit(points: Vec<i64>) -> Result<Self> {
        Self::new(PatternKind::Explicit { points }, Orientation::Forward)
    }

    pub fn kind(&self) -> &PatternKind {
        &self.kind
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// The mirrored pattern, observing `-t` wherever this one observes `t`.
    pub fn reversed(&self) -> Self {
        let orientation = match self.orientation {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        };
        ObservationPattern { kind: self.kind.clone(), orientation }
    }

    pub fn contains(&self, t: i64) -> bool {
        match self.orientation {
            Orientation::Forward => self.kind.contains_forward(t),
            Orientation::Backward => self.kind.contains_forward(-t),
        }
    }

    /// Whether the set has infinitely many elements below any bound.
    pub fn neg_infinite(&self) -> bool {
        match self.orientation {
            Orientation::Forward => self.kind.forward_neg_infinite(),
            Orientation::Backward => self.kind.forward_pos_infinite(),
        }
    }

    /// Whether the set has infinitely many elements above any bound.
    pub fn pos_infinite(&self) -> bool {
        match self.orientation {
            Orientation::Forward => self.kind.forward_pos_infinite(),
            Orientation::Backward => self.kind.forward_neg_infinite(),
        }
    }

    /// The `count` largest elements at or below `bound`, descending.
    pub fn take_leq(&self, bound: i64, count: usize) -> Result<Vec<i64>> {
        match self.orientation {
            Orientation::Forward => self.kind.take_leq_forward(bound, count),
            Orientation::Backward => {
                let mut v = self.kind.take_geq_forward(-bound, count)?;
                for t in v.iter_mut() {
                    *t = -*t;
                }
                Ok(v)
            }
        }
    }
}

impl PatternKind {
    fn contains_forward(&self, t: i64) -> bool {
        match self {
            PatternKind::ContiguousNegative => t <= 0,
            PatternKind::Periodic { step } => t <= 0 && t.rem_euclid(*step as i64) == 0,
            PatternKind::Power { exponent, .. } => {
                t <= 0 && exact_root_nonneg(-t, *exponent).is_some()
            }
            PatternKind::SignedPower { step, exponent } => {
                let q = *step as i64;
                t.rem_euclid(q) == 0 && exact_root_signed(t / q, *exponent).is_some()
            }
            PatternKind::Explicit { points } => points.binary_search(&t).is_ok(),
        }
    }

    fn forward_neg_infinite(&self) -> bool {
        !matches!(self, PatternKind::Explicit { .. })
    }

    fn forward_pos_infinite(&self) -> bool {
        matches!(self, PatternKind::SignedPower { .. })
    }

    fn take_leq_forward(&self, bound: i64, count: usize) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(count);
        match self {
            PatternKind::ContiguousNegative => {
                let mut t = bound.min(0);
                for _ in 0..count {
                    out.push(t);
                    t -= 1;
                }
            }
            PatternKind::Periodic { step } => {
                let q = *step as i64;
                let mut t = q * bound.min(0).div_euclid(q);
                for _ in 0..count {
                    out.push(t);
                    t -= q;
                }
            }
            PatternKind::Power { exponent, .. } => {
                // Elements are -(j^d), j >= 0, decreasing in j.
                let mut j = if bound >= 0 { 0 } else { ceil_root_nonneg(-bound, *exponent) };
                while out.len() < count {
                    match pow_checked(j, *exponent) {
                        Some(p) => out.push(-p),
                        None => {
                            return Err(Error::InsufficientObservations {
                                needed: count,
                                available: out.len(),
                            })
                        }
                    }
                    j += 1;
                }
            }
            PatternKind::SignedPower { step, exponent } => {
                let q = *step as i64;
                let mut k = floor_root_signed(bound.div_euclid(q), *exponent);
                while out.len() < count {
                    match pow_checked_signed(k, *exponent).and_then(|p| p.checked_mul(q)) {
                        Some(e) => out.push(e),
                        None => {
                            return Err(Error::InsufficientObservations {
                                needed: count,
                                available: out.len(),
                            })
                        }
                    }
                    k -= 1;
                }
            }
            PatternKind::Explicit { points } => {
                let upto = points.partition_point(|p| *p <= bound);
                if upto < count {
                    return Err(Error::InsufficientObservations {
                        needed: count,
                        available: upto,
                    });
                }
                out.extend(points[..upto].iter().rev().take(count));
            }
        }
        Ok(out)
    }

    fn take_geq_forward(&self, bound: i64, count: usize) -> Result<Vec<i64>> {
        match self {
            PatternKind::SignedPower { step, exponent } => {
                // Two-sided: mirror of take_leq through k -> -k.
                let q = *step as i64;
                let mut out = Vec::with_capacity(count);
                let mut k = ceil_root_signed_lower(bound, q, *exponent);
                while out.len() < count {
                    match pow_checked_signed(k, *exponent).and_then(|p| p.checked_mul(q)) {
                        Some(e) => out.push(e),
                        None => {
                            return Err(Error::InsufficientObservations {
                                needed: count,
                                available: out.len(),
                            })
                        }
                    }
                    k += 1;
                }
                Ok(out)
            }
            PatternKind::Explicit { points } => {
                let from = points.partition_point(|p| *p < bound);
                let available = points.len() - from;
                if available < count {
                    return Err(Error::InsufficientObservations { needed: count, available });
                }
                Ok(points[from..from + count].to_vec())
            }
            // One-sided kinds live in (-inf, 0]; ascending enumeration from
            // `bound` is the reverse of the finite slice up to zero.
            _ => {
                if bound > 0 {
                    return Err(Error::InsufficientObservations { needed: count, available: 0 });
                }
                let below = self.count_in_range(bound)?;
                if below < count {
                    return Err(Error::InsufficientObservations { needed: count, available: below });
                }
                let mut all = self.take_leq_forward(0, below)?;
                all.reverse();
                Ok(all[..count].to_vec())
            }
        }
    }

    /// Number of forward elements in `[bound, 0]` for one-sided kinds.
    fn count_in_range(&self, bound: i64) -> Result<usize> {
        debug_assert!(bound <= 0);
        Ok(match self {
            PatternKind::ContiguousNegative => (-bound + 1) as usize,
            PatternKind::Periodic { step } => ((-bound) / *step as i64 + 1) as usize,
            PatternKind::Power { exponent, .. } => (floor_root_nonneg(-bound, *exponent) + 1) as usize,
            _ => unreachable!("two-sided and explicit kinds handled by caller"),
        })
    }
}

fn pow_checked(j: i64, d: u32) -> Option<i64> {
    j.checked_pow(d)
}

fn pow_checked_signed(k: i64, d: u32) -> Option<i64> {
    k.checked_pow(d)
}

/// Largest `j >= 0` with `j^d <= x`; requires `x >= 0`.
fn floor_root_nonneg(x: i64, d: u32) -> i64 {
    debug_assert!(x >= 0);
    if d == 1 {
        return x;
    }
    let mut j = (x as f64).powf(1.0 / d as f64).round() as i64;
    j = j.max(0);
    while j > 0 && pow_checked(j, d).map_or(true, |p| p > x) {
        j -= 1;
    }
    while pow_checked(j + 1, d).map_or(false, |p| p <= x) {
        j += 1;
    }
    j
}

/// Smallest `j >= 0` with `j^d >= x`; requires `x >= 0`.
fn ceil_root_nonneg(x: i64, d: u32) -> i64 {
    let f = floor_root_nonneg(x, d);
    if pow_checked(f, d) == Some(x) {
        f
    } else {
        f + 1
    }
}

/// `j >= 0` with `j^d == x` exactly, if any.
fn exact_root_nonneg(x: i64, d: u32) -> Option<i64> {
    if x < 0 {
        return None;
    }
    let f = floor_root_nonneg(x, d);
    (pow_checked(f, d) == Some(x)).then_some(f)
}

/// Largest signed `k` with `k^d <= y`, for odd `d`.
fn floor_root_signed(y: i64, d: u32) -> i64 {
    debug_assert!(d % 2 == 1);
    if y >= 0 {
        floor_root_nonneg(y, d)
    } else {
        -ceil_root_nonneg(-y, d)
    }
}

/// `k` with `k^d == y` exactly, odd `d`, if any.
fn exact_root_signed(y: i64, d: u32) -> Option<i64> {
    let k = floor_root_signed(y, d);
    (pow_checked_signed(k, d) == Some(y)).then_some(k)
}

/// Smallest `k` with `step * k^d >= bound`, odd `d`.
fn ceil_root_signed_lower(bound: i64, step: i64, d: u32) -> i64 {
    // step * k^d >= bound  <=>  k^d >= ceil(bound / step).
    let target = -((-bound).div_euclid(step));
    let k = floor_root_signed(target, d);
    if pow_checked_signed(k, d) == Some(target) {
        k
    } else {
        k + 1
    }
}

/// Order-preserving enumeration of an observation set below an anchor.
///
/// `entries[i]` holds `tau(k_lo + i)` for the materialized compressed range
/// `[k_lo, theta]`; above the anchor `tau` is the identity. Entries are
/// strictly increasing with `tau(k) <= k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauMap {
    theta: i64,
    entries: Vec<i64>,
}

/// Materialize the enumeration of `pattern` for compressed indices
/// `(theta - depth, theta]`.
pub fn build_tau(pattern: &ObservationPattern, theta: i64, depth: usize) -> Result<TauMap> {
    if depth == 0 {
        return Err(Error::Empty { what: "tau range" });
    }
    let mut entries = pattern.take_leq(theta, depth)?;
    entries.reverse();
    debug_assert!(entries.windows(2).all(|w| w[0] < w[1]));
    Ok(TauMap { theta, entries })
}

impl TauMap {
    pub fn theta(&self) -> i64 {
        self.theta
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    /// Smallest materialized compressed index.
    pub fn k_lo(&self) -> i64 {
        self.theta - self.entries.len() as i64 + 1
    }

    pub fn tau(&self, k: i64) -> Result<i64> {
        if k > self.theta {
            return Ok(k);
        }
        if k < self.k_lo() {
            return Err(Error::RangeNotMaterialized { k });
        }
        Ok(self.entries[(k - self.k_lo()) as usize])
    }

    /// The materialized observation positions, ascending.
    pub fn positions(&self) -> &[i64] {
        &self.entries
    }
}

/// Pull observed samples into the compressed domain: `y(k) = x(tau(k))` over
/// `[k_start, k_start + len)`.
pub fn compress<T: Scalar>(
    x: &Signal<T>,
    tau: &TauMap,
    k_start: i64,
    len: usize,
) -> Result<Signal<T>> {
    let mut out = Signal::zeros(k_start, len);
    for i in 0..len {
        let k = k_start + i as i64;
        let v = x.sample(tau.tau(k)?);
        out.values_mut()[i] = v;
    }
    Ok(out)
}

/// Push a compressed-domain signal back onto the observation positions:
/// the value at compressed index `k` lands on `tau(k)`.
pub fn scatter<T: Scalar>(y: &Signal<T>, tau: &TauMap) -> Result<Signal<T>> {
    if y.is_empty() {
        return Ok(Signal::empty());
    }
    let first = tau.tau(y.start())?;
    let last = tau.tau(y.end() - 1)?;
    let mut out = Signal::zeros(first, (last - first + 1) as usize);
    for (k, v) in y.iter() {
        let p = tau.tau(k)?;
        out.set(p, v);
    }
    Ok(out)
}

/// Build a member of the gap-constrained class from an arbitrary seed signal.
///
/// The seed's observed samples are compressed through `tau`, projected onto
/// the arc complement on `grid` bins, and scattered back; seed values at
/// unobserved positions at or below the anchor ride along unchanged, and
/// compressed indices above the anchor (where `tau` is the identity) carry
/// the projection's values on the zero-padded part of the window.
pub fn build_class_member<T: Scalar>(
    x_tilde: &Signal<T>,
    tau: &TauMap,
    gap: &SpectralGap<T>,
    grid: usize,
) -> Result<Signal<T>> {
    let k_lo = tau.k_lo();
    let k_hi = tau.theta().max(x_tilde.end() - 1);
    let len = (k_hi - k_lo + 1) as usize;
    let y = compress(x_tilde, tau, k_lo, len)?;
    let y_hat = project_gap(&y, gap, grid)?;

    let first = tau.tau(k_lo)?;
    let last = k_lo + grid as i64 - 1;
    let mut out = Signal::zeros(first, (last - first + 1) as usize);
    let mut filled = vec![false; out.len()];
    for (k, v) in y_hat.iter() {
        let p = tau.tau(k)?;
        out.set(p, v);
        filled[(p - first) as usize] = true;
    }
    for i in 0..out.len() {
        let s = first + i as i64;
        if !filled[i] && s <= tau.theta() {
            out.values_mut()[i] = x_tilde.sample(s);
        }
    }
    Ok(out)
}

/// Which prediction regime a pattern admits, checked in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// One-sided toward the past: forward prediction.
    A,
    /// One-sided toward the future: backward prediction.
    B,
    /// Two-sided: interleaved forward and backward halves.
    C,
    /// Finite or otherwise too thin.
    Unsupported,
}

/// Classify the pattern and check the targets stay off it.
pub fn pattern_case(pattern: &ObservationPattern, targets: &[i64]) -> Result<Case> {
    for &t in targets {
        if pattern.contains(t) {
            return Err(Error::TargetObserved { t });
        }
    }
    Ok(match (pattern.neg_infinite(), pattern.pos_infinite()) {
        (true, false) => Case::A,
        (false, true) => Case::B,
        (true, true) => Case::C,
        (false, false) => Case::Unsupported,
    })
}

/// Convenience target-set descriptions for configs and docs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSet {
    Explicit(Vec<i64>),
}

impl TargetSet {
    pub fn resolve(&self) -> Vec<i64> {
        match self {
            TargetSet::Explicit(v) => v.clone(),
        }
    }
}
