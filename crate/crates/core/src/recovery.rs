use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::SpectralGap;
use crate::kernel::{synth_kernel, transfer_samples, Kernel, PredictorParams};
use crate::pattern::{build_tau, compress, pattern_case, Case, ObservationPattern};
use crate::scalar::Scalar;
use crate::signal::{CompensatedC, Signal};
use crate::spectrum::{fft_in_place, grid_omega, unit_phase};

/// One recovery problem: observed samples on a pattern, targets to predict,
/// and the predictor configuration.
///
/// `theta` anchors the compressed enumeration (one-sided tasks use
/// `min(targets) - 1` by convention; two-sided tasks split at zero and must
/// anchor there). `window` is both the observation count and the tap count.
#[derive(Debug, Clone)]
pub struct RecoveryTask<T: Scalar> {
    pub pattern: ObservationPattern,
    pub observations: Signal<T>,
    pub targets: Vec<i64>,
    pub theta: i64,
    pub window: usize,
    pub params: PredictorParams<T>,
    pub gap: SpectralGap<T>,
    pub masked: bool,
}

/// Per-kernel diagnostics carried by a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct KernelDiag<T: Scalar> {
    pub m: u32,
    pub gamma: T,
    #[serde(rename = "N")]
    pub n: usize,
    pub l2_norm: T,
    pub tail_fraction: T,
    pub masked: bool,
    pub saturated: bool,
}

impl<T: Scalar> KernelDiag<T> {
    fn of(k: &Kernel<T>) -> Self {
        KernelDiag {
            m: k.m,
            gamma: k.params.gamma(),
            n: k.taps.len(),
            l2_norm: k.l2_norm,
            tail_fraction: k.tail_fraction,
            masked: k.masked,
            saturated: k.saturated,
        }
    }
}

/// Estimates for a recovery task, plus errors when the truth is known.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: serde::de::DeserializeOwned"))]
pub struct RecoveryReport<T: Scalar> {
    pub targets: Vec<i64>,
    pub estimates: Vec<Complex<T>>,
    pub errors: Option<Vec<T>>,
    pub sup_error: Option<T>,
    pub kernels: Vec<KernelDiag<T>>,
}

impl<T: Scalar> RecoveryReport<T> {
    /// Fill in per-target errors and their sup against a reference signal.
    pub fn with_truth(mut self, truth: &Signal<T>) -> Self {
        let errors: Vec<T> = self
            .targets
            .iter()
            .zip(&self.estimates)
            .map(|(&t, est)| (est - truth.sample(t)).norm())
            .collect();
        let sup = errors.iter().fold(T::zero(), |a, &b| a.max(b));
        self.errors = Some(errors);
        self.sup_error = Some(sup);
        self
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Largest reported kernel norm; the noise amplification factor.
    pub fn max_kernel_norm(&self) -> T {
        self.kernels.iter().fold(T::zero(), |a, k| a.max(k.l2_norm))
    }
}

/// Worst absolute estimate error against a reference signal.
pub fn sup_error<T: Scalar>(targets: &[i64], estimates: &[Complex<T>], truth: &Signal<T>) -> T {
    targets
        .iter()
        .zip(estimates)
        .map(|(&t, est)| (est - truth.sample(t)).norm())
        .fold(T::zero(), |a, b| a.max(b))
}

#[derive(Hash, PartialEq, Eq)]
struct KernelKey {
    m: u32,
    gamma: u64,
    r_hat: u64,
    n: usize,
    mask: Option<(u64, u64)>,
}

/// Recovery engine with a kernel cache keyed on `(m, gamma, r_hat, N, mask)`.
/// Reused across targets and sweep rows; synthesis is deterministic, so a
/// cache hit is bit-identical to a fresh synthesis.
pub struct Recoverer<T: Scalar> {
    cache: Mutex<HashMap<KernelKey, Arc<Kernel<T>>>>,
}

impl<T: Scalar> Default for Recoverer<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Recoverer<T> {
    pub fn new() -> Self {
        Recoverer { cache: Mutex::new(HashMap::new()) }
    }

    pub fn kernel_for(
        &self,
        m: u32,
        params: &PredictorParams<T>,
        n: usize,
        mask: Option<&SpectralGap<T>>,
    ) -> Result<Arc<Kernel<T>>> {
        let key = KernelKey {
            m,
            gamma: params.gamma().to_f64_lossy().to_bits(),
            r_hat: params.r_hat().to_f64_lossy().to_bits(),
            n,
            mask: mask.map(|g| {
                (g.center().to_f64_lossy().to_bits(), g.delta().to_f64_lossy().to_bits())
            }),
        };
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let kernel = Arc::new(synth_kernel(m, params, n, mask)?);
        self.cache.lock().unwrap().insert(key, kernel.clone());
        Ok(kernel)
    }

    /// Dispatch on the pattern's case, in order.
    pub fn recover(&self, task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
        match pattern_case(&task.pattern, &task.targets)? {
            Case::A => self.case_a(task),
            Case::B => self.case_b(task),
            Case::C => self.case_c(task),
            Case::Unsupported => Err(Error::PatternNotPredictive),
        }
    }

    /// Forward prediction: every target sits at or above the anchor and is
    /// estimated from the `window` most recent enumerated observations.
    pub fn case_a(&self, task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
        if task.window == 0 {
            return Err(Error::InvalidParam { name: "window", value: 0.0 });
        }
        if task.targets.is_empty() {
            return Err(Error::Empty { what: "target list" });
        }
        for &t in &task.targets {
            if t < task.theta {
                return Err(Error::TargetOutOfCase { t });
            }
            if task.pattern.contains(t) {
                return Err(Error::TargetObserved { t });
            }
        }
        let n = task.window;
        let tau = build_tau(&task.pattern, task.theta, n)?;
        let covered = tau
            .positions()
            .iter()
            .filter(|&&p| p >= task.observations.start() && p < task.observations.end())
            .count();
        if covered < n {
            return Err(Error::InsufficientObservations { needed: n, available: covered });
        }
        let y = compress(&task.observations, &tau, tau.k_lo(), n)?;

        // Masked estimates go through the frequency domain on the synthesis
        // grid; the window spectrum is shared across targets.
        let vhat = task.masked.then(|| {
            let mut v = y.values().to_vec();
            fft_in_place(&mut v, false);
            v
        });

        let mut estimates = Vec::with_capacity(task.targets.len());
        let mut kernels: Vec<KernelDiag<T>> = Vec::new();
        for &t in &task.targets {
            let m = (t - task.theta) as u32;
            let mask = task.masked.then_some(&task.gap);
            let kernel = self.kernel_for(m, &task.params, n, mask)?;
            let est = match &vhat {
                Some(vh) => apply_masked_spectral(vh, m, &task.params, &task.gap, n)?,
                None => apply_kernel_time(&y, &kernel),
            };
            estimates.push(est);
            if !kernels.iter().any(|k| k.m == m) {
                kernels.push(KernelDiag::of(&kernel));
            }
        }
        Ok(RecoveryReport {
            targets: task.targets.clone(),
            estimates,
            errors: None,
            sup_error: None,
            kernels,
        })
    }

    /// Backward prediction: reverse, run forward, reverse back. The mirrored
    /// anchor is `-theta`, so a task with observations above `theta` and
    /// targets at or below it maps onto a well-formed forward task.
    pub fn case_b(&self, task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
        let reversed = reverse_task(task)?;
        let rep = self.case_a(&reversed)?;
        Ok(RecoveryReport {
            targets: task.targets.clone(),
            estimates: rep.estimates,
            errors: None,
            sup_error: None,
            kernels: rep.kernels,
        })
    }

    /// Two-sided patterns: targets at or above zero go to a forward half on
    /// the negative side of the pattern, strictly negative targets to the
    /// mirrored half, and the estimates merge back in input order.
    pub fn case_c(&self, task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
        if task.theta != 0 {
            return Err(Error::InvalidParam {
                name: "theta",
                value: task.theta as f64,
            });
        }
        let fwd_idx: Vec<usize> =
            (0..task.targets.len()).filter(|&i| task.targets[i] >= 0).collect();
        let bwd_idx: Vec<usize> =
            (0..task.targets.len()).filter(|&i| task.targets[i] < 0).collect();

        let mut estimates = vec![Complex::new(T::zero(), T::zero()); task.targets.len()];
        let mut kernels = Vec::new();
        if !fwd_idx.is_empty() {
            let half = RecoveryTask {
                targets: fwd_idx.iter().map(|&i| task.targets[i]).collect(),
                ..task.clone()
            };
            let rep = self.case_a(&half)?;
            for (slot, est) in fwd_idx.iter().zip(rep.estimates) {
                estimates[*slot] = est;
            }
            kernels.extend(rep.kernels);
        }
        if !bwd_idx.is_empty() {
            let half = RecoveryTask {
                targets: bwd_idx.iter().map(|&i| task.targets[i]).collect(),
                ..task.clone()
            };
            let rep = self.case_b(&half)?;
            for (slot, est) in bwd_idx.iter().zip(rep.estimates) {
                estimates[*slot] = est;
            }
            kernels.extend(rep.kernels);
        }
        Ok(RecoveryReport {
            targets: task.targets.clone(),
            estimates,
            errors: None,
            sup_error: None,
            kernels,
        })
    }
}

/// Mirror a task through `t -> -t`.
pub fn reverse_task<T: Scalar>(task: &RecoveryTask<T>) -> Result<RecoveryTask<T>> {
    Ok(RecoveryTask {
        pattern: task.pattern.reversed(),
        observations: task.observations.reversed(),
        targets: task.targets.iter().map(|t| -t).collect(),
        theta: -task.theta,
        window: task.window,
        params: task.params,
        gap: SpectralGap::new(-task.gap.center(), task.gap.delta())?,
        masked: task.masked,
    })
}

/// Causal tap application: `sum_j taps[j] * y(theta - j)` with the window's
/// last sample as the anchor.
pub fn apply_kernel_time<T: Scalar>(y: &Signal<T>, kernel: &Kernel<T>) -> Complex<T> {
    let theta = y.end() - 1;
    let mut acc = CompensatedC::new();
    for (j, tap) in kernel.taps.iter().enumerate() {
        acc.add(y.sample(theta - j as i64).scale(*tap));
    }
    acc.total()
}

/// Frequency-domain estimate for masked kernels: multiply the window
/// spectrum by the masked response and read off the anchor bin phase. Equals
/// the circular tap convolution exactly in exact arithmetic, and touches
/// only the observed window.
fn apply_masked_spectral<T: Scalar>(
    vhat: &[Complex<T>],
    m: u32,
    params: &PredictorParams<T>,
    gap: &SpectralGap<T>,
    n: usize,
) -> Result<Complex<T>> {
    let (h, _) = transfer_samples(m, params, Some(gap), n)?;
    let anchor = T::of(n as i64 - 1);
    let mut acc = CompensatedC::new();
    for l in 0..n {
        let w = grid_omega::<T>(l, n);
        acc.add(h[l] * vhat[l] * unit_phase(w * anchor));
    }
    Ok(acc.total().scale(T::one() / T::of_usize(n)))
}

/// Zero the taps outside a kept index set; the restriction diagnostic.
/// Norm and tail are recomputed for the surviving taps.
pub fn restrict_taps<T: Scalar>(kernel: &Kernel<T>, keep: &[bool]) -> Kernel<T> {
    let mut out = kernel.clone();
    for (j, tap) in out.taps.iter_mut().enumerate() {
        if !keep.get(j).copied().unwrap_or(false) {
            *tap = T::zero();
        }
    }
    out.l2_norm = crate::signal::l2_real(&out.taps);
    let half = &out.taps[out.taps.len() / 2..];
    let tail = crate::signal::l2_real(half);
    out.tail_fraction = if out.l2_norm.is_zero() {
        T::zero()
    } else {
        let r = tail / out.l2_norm;
        r * r
    };
    out
}

/// One-shot conveniences over a throwaway engine.
pub fn recover<T: Scalar>(task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
    Recoverer::new().recover(task)
}

pub fn recover_case_a<T: Scalar>(task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
    Recoverer::new().case_a(task)
}

pub fn recover_case_b<T: Scalar>(task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
    Recoverer::new().case_b(task)
}

pub fn recover_case_c<T: Scalar>(task: &RecoveryTask<T>) -> Result<RecoveryReport<T>> {
    Recoverer::new().case_c(task)
}
