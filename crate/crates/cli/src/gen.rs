//! Seeded signal and noise generation for experiments.
//!
//! All randomness flows through ChaCha8 seeded from explicit integers, so
//! every artifact a run produces is reproducible from its config alone.

use std::collections::BTreeSet;

use gapcast_core::pattern::{build_class_member, build_tau, TauMap};
use gapcast_core::{ObservationPattern, Signal64, SpectralGap64};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{Component, SignalSpec};
use crate::{AppError, AppResult};

/// Widest observation window (in original-domain samples) a generator will
/// materialize; cube-lattice patterns at large depths exceed any sane memory
/// budget long before this.
pub const MAX_SPAN: i64 = 1 << 26;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; decorrelates structured seed inputs.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-row noise seed: decorrelated combination of the spec seed and the
/// row's position in the sweep order.
pub fn row_seed(base: u64, ordinal: u64) -> u64 {
    splitmix64(base ^ GOLDEN.wrapping_mul(ordinal.wrapping_add(1)))
}

/// Mix value at compressed index `k`.
pub fn mix_value(components: &[Component], k: i64) -> f64 {
    components
        .iter()
        .map(|c| c.amplitude * (c.frequency * k as f64 + c.phase).cos())
        .sum()
}

/// `count` Gaussian draws rescaled so their l2 norm is exactly `rho`.
/// `rho = 0` gives zeros; different seeds give different directions.
pub fn gen_noise(rho: f64, seed: u64, count: usize) -> Vec<f64> {
    if rho == 0.0 || count == 0 {
        return vec![0.0; count];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..count).map(|_| rng.sample(StandardNormal)).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in values.iter_mut() {
            *v *= rho / norm;
        }
    }
    values
}

/// Reference values for the recovery error columns.
#[derive(Debug, Clone)]
pub enum Truth {
    /// Analytic continuation of the mix at any compressed index.
    Mix(Vec<Component>),
    /// Grid-periodic extension of a projected member: the class structure is
    /// periodic on the projection grid, so that is what recovery converges
    /// to.
    Periodic { member: Signal64, tau: TauMap, period: usize },
}

impl Truth {
    pub fn at(&self, t: i64) -> Complex<f64> {
        match self {
            Truth::Mix(components) => Complex::new(mix_value(components, t), 0.0),
            Truth::Periodic { member, tau, period } => {
                let k_lo = tau.k_lo();
                let k = k_lo + (t - k_lo).rem_euclid(*period as i64);
                match tau.tau(k) {
                    Ok(pos) => member.sample(pos),
                    Err(_) => Complex::new(0.0, 0.0),
                }
            }
        }
    }

    /// Dense window holding the truth at each target, for report error
    /// columns.
    pub fn signal_over(&self, targets: &[i64]) -> AppResult<Signal64> {
        let lo = *targets.iter().min().ok_or(AppError::Config("targets empty".into()))?;
        let hi = *targets.iter().max().expect("nonempty");
        if hi - lo + 1 > MAX_SPAN {
            return Err(AppError::Config("target span too large".into()));
        }
        let mut sig = Signal64::zeros(lo, (hi - lo + 1) as usize);
        for &t in targets {
            sig.set(t, self.at(t));
        }
        Ok(sig)
    }
}

/// Observations in the original domain plus the matching truth.
#[derive(Debug, Clone)]
pub struct Materialized {
    pub observations: Signal64,
    /// Observed positions, ascending; noise is injected here.
    pub positions: Vec<i64>,
    pub truth: Truth,
}

/// Instantiate a generator against a pattern: `depth` observed samples per
/// infinite side (the mix is evaluated through the enumeration; seeded noise
/// is projected into the class first).
pub fn materialize(
    signal: &SignalSpec,
    pattern: &ObservationPattern,
    theta: i64,
    gap: &SpectralGap64,
    depth: usize,
) -> AppResult<Materialized> {
    match signal {
        SignalSpec::SinusoidMix { components } => {
            materialize_mix(components, pattern, theta, depth)
        }
        SignalSpec::SeededNoise { seed, length } => {
            materialize_member(*seed, *length, pattern, theta, gap)
        }
    }
}

fn materialize_mix(
    components: &[Component],
    pattern: &ObservationPattern,
    theta: i64,
    depth: usize,
) -> AppResult<Materialized> {
    // (position, compressed index) pairs for every infinite side.
    let mut pairs: Vec<(i64, i64)> = Vec::new();
    if pattern.neg_infinite() {
        let tau = build_tau(pattern, theta, depth)?;
        for (i, &pos) in tau.positions().iter().enumerate() {
            pairs.push((pos, tau.k_lo() + i as i64));
        }
    }
    if pattern.pos_infinite() {
        let tau = build_tau(&pattern.reversed(), -theta, depth)?;
        for (i, &pos) in tau.positions().iter().enumerate() {
            let k_rev = tau.k_lo() + i as i64;
            pairs.push((-pos, -k_rev));
        }
    }
    if pairs.is_empty() {
        return Err(AppError::Config(
            "pattern has no infinite side; nothing to materialize".into(),
        ));
    }
    let lo = pairs.iter().map(|p| p.0).min().expect("nonempty");
    let hi = pairs.iter().map(|p| p.0).max().expect("nonempty");
    if hi - lo + 1 > MAX_SPAN {
        return Err(AppError::Config(format!(
            "observation span {} exceeds the materialization cap",
            hi - lo + 1
        )));
    }
    let mut obs = Signal64::zeros(lo, (hi - lo + 1) as usize);
    let mut positions = BTreeSet::new();
    for &(pos, k) in &pairs {
        obs.set(pos, Complex::new(mix_value(components, k), 0.0));
        positions.insert(pos);
    }
    Ok(Materialized {
        observations: obs,
        positions: positions.into_iter().collect(),
        truth: Truth::Mix(components.to_vec()),
    })
}

fn materialize_member(
    seed: u64,
    length: usize,
    pattern: &ObservationPattern,
    theta: i64,
    gap: &SpectralGap64,
) -> AppResult<Materialized> {
    if !pattern.neg_infinite() || pattern.pos_infinite() {
        return Err(AppError::Config(
            "seeded noise members require a one-sided past-observing pattern".into(),
        ));
    }
    let tau = build_tau(pattern, theta, length)?;
    let first = tau.positions()[0];
    if theta - first + 1 > MAX_SPAN {
        return Err(AppError::Config(
            "observation span exceeds the materialization cap".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seed_sig = Signal64::zeros(first, (theta - first + 1) as usize);
    for &pos in tau.positions() {
        seed_sig.set(pos, Complex::new(rng.sample(StandardNormal), 0.0));
    }
    let member = build_class_member(&seed_sig, &tau, gap, length)?;
    Ok(Materialized {
        observations: member.clone(),
        positions: tau.positions().to_vec(),
        truth: Truth::Periodic { member, tau, period: length },
    })
}

/// Add an l2-norm-`rho` noise realization at the observed positions.
pub fn add_noise(m: &mut Materialized, rho: f64, seed: u64) {
    let draws = gen_noise(rho, seed, m.positions.len());
    for (&pos, &d) in m.positions.iter().zip(&draws) {
        let v = m.observations.sample(pos);
        m.observations.set(pos, v + Complex::new(d, 0.0));
    }
}
