//! Prediction of band-structured signals across spectral gaps.
//!
//! A signal whose grid spectrum vanishes on an arc of the unit circle is far
//! more rigid than a generic one: samples taken on a sparse subset of the
//! integers pin down its values everywhere else. This crate provides the
//! pieces needed to exploit that rigidity in practice:
//!
//! * [`Signal`] and [`Spectrum`]: finitely supported complex sequences on the
//!   integers and their anchored grid transforms (FFT-backed, unitary up to
//!   the usual `1/G` convention).
//! * [`SpectralGap`] and the projection operators: chord-metric arcs, the
//!   spectral zeroing projector, residual-energy measurement, and the
//!   densification search that finds the widest empty arc of a given signal.
//! * [`Kernel`] synthesis: one-parameter predictor families with explicit
//!   transfer functions, synthesized either on an adaptive grid (unmasked)
//!   or as full circular tap sets with the gap arc zeroed out (masked).
//! * [`ObservationPattern`] and [`TauMap`]: sparse sampling sets, their
//!   order-preserving enumeration, and the compression / scattering maps
//!   between the sparse and dense pictures.
//! * The recovery engine: case dispatch over one-sided and two-sided
//!   patterns, spectral application of masked kernels, reversal symmetry,
//!   and structured reports.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the common case.

pub mod error;
pub mod gap;
pub mod kernel;
pub mod pattern;
pub mod recovery;
pub mod scalar;
pub mod signal;
pub mod spectrum;

pub use error::{Error, Result};
pub use gap::{densify, gap_residual_energy, modulate_half_band, project_gap, GapConfig, SpectralGap};
pub use kernel::{
    kernel_dc_gain, kernel_freq_error, kernel_transfer, synth_kernel, v_transfer, Kernel,
    PredictorParams, TransferValue,
};
pub use pattern::{
    build_class_member, build_tau, compress, pattern_case, scatter, Case, ObservationPattern,
    Orientation, PatternKind, TargetSet, TauMap,
};
pub use recovery::{
    restrict_taps, recover, recover_case_a, recover_case_b, recover_case_c, sup_error,
    KernelDiag, Recoverer, RecoveryReport, RecoveryTask,
};
pub use scalar::Scalar;
pub use signal::Signal;
pub use spectrum::{inverse_z_on_grid, z_transform_on_grid, Spectrum};

/// `f64` signal, the common instantiation.
pub type Signal64 = Signal<f64>;
/// `f64` spectrum.
pub type Spectrum64 = Spectrum<f64>;
/// `f64` gap.
pub type SpectralGap64 = SpectralGap<f64>;
/// `f64` predictor kernel.
pub type Kernel64 = Kernel<f64>;
/// `f64` predictor parameters.
pub type PredictorParams64 = PredictorParams<f64>;
/// `f64` recovery task.
pub type RecoveryTask64 = RecoveryTask<f64>;
/// `f64` recovery report.
pub type RecoveryReport64 = RecoveryReport<f64>;
