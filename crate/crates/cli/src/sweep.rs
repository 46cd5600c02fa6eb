//! Parameter sweeps over (gamma, N, rho) and report emission.

use std::io::Write;
use std::time::Instant;

use gapcast_core::{
    Error as CoreError, PredictorParams64, Recoverer, RecoveryTask64, SpectralGap64,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentSpec, RNG_ID};
use crate::gen::{add_noise, materialize, row_seed};
use crate::{AppError, AppResult};

/// One sweep cell. Failure rows keep their identity columns and carry the
/// failure in `status` with NaN metrics; a sweep never aborts on a row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
    pub sup_error: f64,
    pub max_kernel_norm: f64,
    pub runtime_ms: f64,
    pub status: String,
}

/// Run every (gamma, N, rho) cell of the spec, in spec order. `parallel > 1`
/// fans rows out over a thread pool; ordering and row seeds are a function of
/// the spec alone, so the output is identical either way.
pub fn run_sweep(spec: &ExperimentSpec, parallel: usize) -> AppResult<Vec<SweepRow>> {
    let gap = spec.validate()?;
    let mut cells = Vec::new();
    for &gamma in &spec.gamma_schedule {
        for &n in &spec.taps {
            for &rho in &spec.noise_levels {
                let ordinal = cells.len() as u64;
                cells.push((gamma, n, rho, row_seed(spec.noise_seed, ordinal)));
            }
        }
    }
    let engine: Recoverer<f64> = Recoverer::new();
    let run = |cell: &(f64, usize, f64, u64)| -> SweepRow {
        let &(gamma, n, rho, seed) = cell;
        let t0 = Instant::now();
        let outcome = run_row(spec, &gap, &engine, gamma, n, rho, seed);
        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok((sup_error, max_kernel_norm)) => SweepRow {
                gamma,
                n,
                rho,
                seed,
                sup_error,
                max_kernel_norm,
                runtime_ms,
                status: "ok".into(),
            },
            Err(e) => SweepRow {
                gamma,
                n,
                rho,
                seed,
                sup_error: f64::NAN,
                max_kernel_norm: f64::NAN,
                runtime_ms,
                status: status_label(&e).into(),
            },
        }
    };
    let rows = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run).collect())
    } else {
        cells.iter().map(run).collect()
    };
    Ok(rows)
}

fn run_row(
    spec: &ExperimentSpec,
    gap: &SpectralGap64,
    engine: &Recoverer<f64>,
    gamma: f64,
    n: usize,
    rho: f64,
    seed: u64,
) -> AppResult<(f64, f64)> {
    let mut m = materialize(&spec.signal, &spec.pattern, spec.theta, gap, n)?;
    add_noise(&mut m, rho, seed);
    let truth = m.truth.signal_over(&spec.targets)?;
    let task = RecoveryTask64 {
        pattern: spec.pattern.clone(),
        observations: m.observations,
        targets: spec.targets.clone(),
        theta: spec.theta,
        window: n,
        params: PredictorParams64::new(gamma, spec.r_hat)?,
        gap: gap.clone(),
        masked: spec.masked,
    };
    let report = engine.recover(&task)?.with_truth(&truth);
    let sup = report.sup_error.unwrap_or(f64::NAN);
    Ok((sup, report.max_kernel_norm()))
}

/// Status column value for a failed row.
pub fn status_label(e: &AppError) -> &'static str {
    match e {
        AppError::Config(_) => "config",
        AppError::Io(_) => "io",
        AppError::Core(c) => match c {
            CoreError::GridCapExceeded { .. } => "grid_cap_exceeded",
            CoreError::InsufficientObservations { .. } => "insufficient_observations",
            CoreError::PoleAtZ { .. } => "pole_at_z",
            CoreError::NonFiniteTaps { .. } => "non_finite_taps",
            CoreError::NoFeasibleDelta => "no_feasible_delta",
            CoreError::TargetObserved { .. } => "target_observed",
            CoreError::TargetOutOfCase { .. } => "target_out_of_case",
            CoreError::PatternNotPredictive => "pattern_not_predictive",
            CoreError::FrequencyInGap { .. } => "frequency_in_gap",
            CoreError::AsymmetricMask { .. } => "asymmetric_mask",
            CoreError::GridNotPowerOfTwo { .. } => "grid_not_power_of_two",
            CoreError::InvalidParam { .. } => "invalid_param",
            _ => "error",
        },
    }
}

pub const CSV_HEADER: &str = "gamma,N,rho,seed,sup_error,max_kernel_norm,runtime_ms,status";

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> AppResult<()> {
    if rows.is_empty() {
        return Err(AppError::Core(CoreError::Empty { what: "sweep rows" }));
    }
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.gamma, r.n, r.rho, r.seed, r.sup_error, r.max_kernel_norm, r.runtime_ms, r.status
        )?;
    }
    Ok(())
}

/// JSON mirror of the CSV: same rows field for field, wrapped with the RNG
/// identifier so a report documents its own reproduction recipe.
pub fn write_json<W: Write>(rows: &[SweepRow], mut w: W) -> AppResult<()> {
    if rows.is_empty() {
        return Err(AppError::Core(CoreError::Empty { what: "sweep rows" }));
    }
    let doc = serde_json::json!({ "rng": RNG_ID, "rows": rows });
    serde_json::to_writer_pretty(&mut w, &doc).map_err(CoreError::from)?;
    writeln!(w)?;
    Ok(())
}
