//! Experiment configuration: JSON schema, validation, and the bundled
//! default spec.

use std::f64::consts::PI;

use gapcast_core::gap::{GapCenter, GapConfig};
use gapcast_core::pattern::ObservationPattern;
use gapcast_core::{Error, PredictorParams64, SpectralGap64};
use serde::{Deserialize, Serialize};

use crate::{AppError, AppResult};

/// One sinusoid of the mix, in the compressed index domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Signal generator descriptor.
///
/// Both generators describe the compressed sequence `y(k) = x(tau(k))`: the
/// class structure (gap emptiness) lives in the compressed domain, so that is
/// where frequencies and projections are meaningful. For contiguous patterns
/// the compressed and original domains coincide.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `y(k) = sum_i amplitude_i * cos(frequency_i * k + phase_i)`. An empty
    /// mix is the zero signal.
    SinusoidMix { components: Vec<Component> },
    /// Seeded Gaussian values on a `length`-sample compressed window, pushed
    /// through the gap projection so the result is a class member. `length`
    /// must be a power of two (it doubles as the projection grid).
    SeededNoise { seed: u64, length: usize },
}

/// Full sweep specification, the `--config` JSON of `gapcast sweep`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub signal: SignalSpec,
    pub pattern: ObservationPattern,
    #[serde(default)]
    pub theta: i64,
    pub gap: GapConfig,
    pub gamma_schedule: Vec<f64>,
    pub r_hat: f64,
    /// Tap counts N to sweep.
    pub taps: Vec<usize>,
    /// Noise l2 norms rho.
    pub noise_levels: Vec<f64>,
    pub noise_seed: u64,
    pub targets: Vec<i64>,
    #[serde(default = "default_masked")]
    pub masked: bool,
}

fn default_masked() -> bool {
    true
}

impl ExperimentSpec {
    /// Check every invariant that does not require running a row. Returns
    /// the built gap so callers do not re-parse it.
    pub fn validate(&self) -> AppResult<SpectralGap64> {
        let gap: SpectralGap64 = self.gap.to_gap()?;
        for (name, list_empty) in [
            ("gamma_schedule", self.gamma_schedule.is_empty()),
            ("taps", self.taps.is_empty()),
            ("noise_levels", self.noise_levels.is_empty()),
            ("targets", self.targets.is_empty()),
        ] {
            if list_empty {
                return Err(AppError::Config(format!("{name} must be nonempty")));
            }
        }
        for &gamma in &self.gamma_schedule {
            PredictorParams64::new(gamma, self.r_hat)?;
        }
        for &n in &self.taps {
            if n == 0 {
                return Err(AppError::Config("taps entries must be >= 1".into()));
            }
        }
        for &rho in &self.noise_levels {
            if !(rho >= 0.0) || !rho.is_finite() {
                return Err(AppError::Core(Error::InvalidParam { name: "rho", value: rho }));
            }
        }
        // Rebuild the pattern through its constructor: serde fills fields
        // directly and skips the invariants.
        ObservationPattern::new(self.pattern.kind().clone(), self.pattern.orientation())?;
        match &self.signal {
            SignalSpec::SinusoidMix { components } => {
                for c in components {
                    if !c.amplitude.is_finite() || !c.frequency.is_finite() || !c.phase.is_finite()
                    {
                        return Err(AppError::Config(
                            "sinusoid components must be finite".into(),
                        ));
                    }
                    if gap.in_gap(c.frequency) {
                        return Err(AppError::Core(Error::FrequencyInGap {
                            omega: c.frequency,
                        }));
                    }
                }
            }
            SignalSpec::SeededNoise { length, .. } => {
                if !length.is_power_of_two() {
                    return Err(AppError::Core(Error::GridNotPowerOfTwo { grid: *length }));
                }
            }
        }
        Ok(gap)
    }
}

/// The bundled default spec: a two-tone mix observed every third step into
/// the past, swept over five decay weights and three noise levels.
///
/// N = 1020 is divisible by the periods of both tones (10 and 5), so the
/// observation window is an exact number of periods and the window-periodic
/// recovery model is exact.
pub fn default_spec() -> ExperimentSpec {
    ExperimentSpec {
        signal: SignalSpec::SinusoidMix {
            components: vec![
                Component { amplitude: 1.0, frequency: PI / 5.0, phase: 0.0 },
                Component { amplitude: 0.5, frequency: 2.0 * PI / 5.0, phase: 0.7 },
            ],
        },
        pattern: ObservationPattern::periodic(3).expect("static pattern"),
        theta: 0,
        gap: GapConfig { center: GapCenter::Named("pi".into()), delta: 0.5 },
        gamma_schedule: vec![5.0, 10.0, 20.0, 40.0, 80.0],
        r_hat: 1.0,
        taps: vec![1020],
        noise_levels: vec![0.0, 1e-6, 1e-3],
        noise_seed: 42,
        targets: vec![1, 2, 3, 4, 5],
        masked: true,
    }
}

/// Single-task configuration for `gapcast recover`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub signal: TaskSignal,
    pub pattern: ObservationPattern,
    #[serde(default)]
    pub theta: i64,
    pub gap: GapConfig,
    pub gamma: f64,
    pub r_hat: f64,
    pub taps: usize,
    #[serde(default = "default_masked")]
    pub masked: bool,
    pub targets: Vec<i64>,
    /// Optional reference signal (t,re,im CSV) for error columns.
    #[serde(default)]
    pub truth: Option<String>,
}

/// Signal source for a single recovery: a generator or a CSV of observations
/// in the original (scattered) domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskSignal {
    Csv { path: String },
    Generated(SignalSpec),
}

/// Identifier of the pseudo-random pipeline, recorded in JSON reports so a
/// report is reproducible from its own metadata.
pub const RNG_ID: &str = "chacha8(splitmix64(noise_seed ^ golden*(ordinal+1)))";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_validates() {
        default_spec().validate().unwrap();
    }

    #[test]
    fn default_spec_round_trips_through_json() {
        let spec = default_spec();
        let json = serde_json::to_string_pretty(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.gamma_schedule, spec.gamma_schedule);
        assert_eq!(back.taps, spec.taps);
        assert_eq!(back.pattern, spec.pattern);
        back.validate().unwrap();
    }

    #[test]
    fn pattern_json_is_flat() {
        let json = r#"{"kind": "periodic", "step": 3}"#;
        let p: ObservationPattern = serde_json::from_str(json).unwrap();
        assert_eq!(p, ObservationPattern::periodic(3).unwrap());
    }

    #[test]
    fn in_gap_frequency_rejected() {
        let mut spec = default_spec();
        spec.signal = SignalSpec::SinusoidMix {
            components: vec![Component { amplitude: 1.0, frequency: PI, phase: 0.0 }],
        };
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, AppError::Core(Error::FrequencyInGap { .. })));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn serde_cannot_smuggle_invalid_patterns() {
        let mut spec = default_spec();
        spec.pattern =
            serde_json::from_str(r#"{"kind": "periodic", "step": 0}"#).unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn noise_length_must_be_power_of_two() {
        let mut spec = default_spec();
        spec.signal = SignalSpec::SeededNoise { seed: 7, length: 100 };
        let err = spec.validate().unwrap_err();
        assert!(matches!(err, AppError::Core(Error::GridNotPowerOfTwo { grid: 100 })));
    }

    #[test]
    fn empty_schedule_rejected() {
        let mut spec = default_spec();
        spec.gamma_schedule.clear();
        assert_eq!(spec.validate().unwrap_err().exit_code(), 2);
    }
}
