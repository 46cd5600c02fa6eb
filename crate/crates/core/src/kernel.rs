use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gap::SpectralGap;
use crate::scalar::Scalar;
use crate::signal::{l2_real, CompensatedC};
use crate::spectrum::{fft_in_place, grid_omega, unit_phase};

/// Hard ceiling for the adaptive synthesis grid. Families whose taps have
/// not stabilized by here are declared too heavy-tailed for time-domain
/// truncation and synthesis fails loudly.
pub const GRID_CAP: usize = 1 << 20;

/// Relative energy allowed at negative lags (the top quarter of the
/// synthesis grid) before an unmasked kernel counts as causal.
const CAUSAL_LEAK_BUDGET: f64 = 1e-8;

/// Parameters of the one-pole predictor family.
///
/// `gamma` is the concentration weight, `r_hat` the decay exponent; the pole
/// offset is `alpha = 1 - gamma^(-r_hat)`, which walks toward the unit circle
/// as either parameter grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams<T: Scalar> {
    gamma: T,
    r_hat: T,
}

impl<T: Scalar> PredictorParams<T> {
    pub fn new(gamma: T, r_hat: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidParam { name: "gamma", value: gamma.to_f64_lossy() });
        }
        if !(r_hat > T::zero()) || !r_hat.is_finite() {
            return Err(Error::InvalidParam { name: "r_hat", value: r_hat.to_f64_lossy() });
        }
        // gamma^(-r_hat) >= 2 puts the pole on or outside the unit circle;
        // the family stops being causal there.
        let offset = gamma.powf(-r_hat);
        if !(offset < T::one() + T::one()) {
            return Err(Error::InvalidParam {
                name: "gamma^(-r_hat)",
                value: offset.to_f64_lossy(),
            });
        }
        Ok(PredictorParams { gamma, r_hat })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn r_hat(&self) -> T {
        self.r_hat
    }

    /// Pole offset `1 - gamma^(-r_hat)`, in `[0, 1)` for `gamma >= 1`.
    pub fn alpha(&self) -> T {
        T::one() - self.gamma.powf(-self.r_hat)
    }
}

/// A transfer evaluation together with its saturation flag. Saturation
/// means the exponent was clamped at [`Scalar::exp_clamp`]; the value is
/// finite but no longer faithful, and downstream results carry the flag.
#[derive(Debug, Clone, Copy)]
pub struct TransferValue<T: Scalar> {
    pub value: Complex<T>,
    pub saturated: bool,
}

/// Single-step response `V(z) = 1 - exp(-gamma / (z + alpha))`.
///
/// `V` is close to 1 where `Re(-gamma/(z+alpha))` is very negative (most of
/// the unit circle for large gamma) and degenerates near the pole `z =
/// -alpha`, which approaches `z = -1` as the parameters grow.
pub fn v_transfer<T: Scalar>(z: Complex<T>, p: &PredictorParams<T>) -> Result<TransferValue<T>> {
    let den = z + Complex::new(p.alpha(), T::zero());
    let dist = den.norm();
    if dist < T::min_positive_value().sqrt() {
        return Err(Error::PoleAtZ { dist: dist.to_f64_lossy() });
    }
    let mut w = Complex::new(-p.gamma(), T::zero()) / den;
    let mut saturated = false;
    if w.re > T::exp_clamp() {
        w = Complex::new(T::exp_clamp(), w.im);
        saturated = true;
    }
    let one = Complex::new(T::one(), T::zero());
    Ok(TransferValue { value: one - w.exp(), saturated })
}

/// `m`-step response `H(omega) = (z * V(z))^m` at `z = e^(i*omega)`.
///
/// The power is taken in log-polar form so magnitudes up to `e^exp_clamp`
/// survive; anything beyond saturates with the flag set. `m = 0` is the
/// identity response.
pub fn kernel_transfer<T: Scalar>(
    omega: T,
    m: u32,
    p: &PredictorParams<T>,
) -> Result<TransferValue<T>> {
    if m == 0 {
        return Ok(TransferValue { value: Complex::new(T::one(), T::zero()), saturated: false });
    }
    let z = unit_phase(omega);
    let v = v_transfer(z, p)?;
    let zv = z * v.value;
    let r = zv.norm();
    if r.is_zero() {
        return Ok(TransferValue { value: Complex::new(T::zero(), T::zero()), saturated: v.saturated });
    }
    let mf = T::of(m as i64);
    let mut ln_mag = mf * r.ln();
    let mut saturated = v.saturated;
    if ln_mag > T::exp_clamp() {
        ln_mag = T::exp_clamp();
        saturated = true;
    }
    Ok(TransferValue { value: Complex::from_polar(ln_mag.exp(), mf * zv.arg()), saturated })
}

/// Responses at all `g` grid nodes, with in-gap nodes zeroed when a mask is
/// given. Shared by synthesis and the spectral estimator so both see the
/// same values bit for bit.
pub(crate) fn transfer_samples<T: Scalar>(
    m: u32,
    p: &PredictorParams<T>,
    mask: Option<&SpectralGap<T>>,
    g: usize,
) -> Result<(Vec<Complex<T>>, bool)> {
    let mut vals = Vec::with_capacity(g);
    let mut saturated = false;
    for j in 0..g {
        let w = grid_omega::<T>(j, g);
        if let Some(gap) = mask {
            if gap.in_gap(w) {
                vals.push(Complex::new(T::zero(), T::zero()));
                continue;
            }
        }
        let tv = kernel_transfer(w, m, p)?;
        saturated |= tv.saturated;
        vals.push(tv.value);
    }
    Ok((vals, saturated))
}

/// Synthesized predictor taps plus diagnostics.
///
/// Unmasked kernels are causal: `taps[j]` weights the observation `j` steps
/// into the past and the grid tail beyond the kept window is reported in
/// `discarded_l2`. Masked kernels are full circular tap sets on a grid equal
/// to the tap count; nothing is discarded and slots past `len/2` wrap to
/// negative lags.
#[derive(Debug, Clone)]
pub struct Kernel<T: Scalar> {
    pub m: u32,
    pub params: PredictorParams<T>,
    pub taps: Vec<T>,
    pub l2_norm: T,
    pub tail_fraction: T,
    pub grid_used: usize,
    pub masked: bool,
    pub saturated: bool,
    pub discarded_l2: T,
}

/// Synthesize predictor taps for horizon `m`.
///
/// With a mask, the gap arc of the response is zeroed and the taps are the
/// exact inverse DFT on a grid of `taps` nodes (see [`Kernel`] for the
/// circular reading). Without a mask, the response is sampled on an adaptive
/// grid, starting at four times the tap count and doubling until the kept
/// window stabilizes in relative l2 and negative-lag leakage is negligible;
/// families that saturate the exponent clamp never stabilize and end in
/// [`Error::GridCapExceeded`].
pub fn synth_kernel<T: Scalar>(
    m: u32,
    params: &PredictorParams<T>,
    taps: usize,
    mask: Option<&SpectralGap<T>>,
) -> Result<Kernel<T>> {
    if taps == 0 {
        return Err(Error::InvalidParam { name: "taps", value: 0.0 });
    }
    match mask {
        Some(gap) => synth_masked(m, params, taps, gap),
        None => synth_adaptive(m, params, taps),
    }
}

fn synth_masked<T: Scalar>(
    m: u32,
    params: &PredictorParams<T>,
    n: usize,
    gap: &SpectralGap<T>,
) -> Result<Kernel<T>> {
    if !gap.conjugation_symmetric() {
        return Err(Error::AsymmetricMask { center: gap.center().to_f64_lossy() });
    }
    let (mut vals, saturated) = transfer_samples(m, params, Some(gap), n)?;
    fft_in_place(&mut vals, true);
    let scale = T::one() / T::of_usize(n);
    // The masked response is conjugation-even, so the inverse transform is
    // real; the imaginary parts are pure rounding noise.
    let taps: Vec<T> = vals.iter().map(|v| v.re * scale).collect();
    if taps.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteTaps { gamma: params.gamma().to_f64_lossy() });
    }
    let l2_norm = l2_real(&taps);
    Ok(Kernel {
        m,
        params: *params,
        tail_fraction: tail_energy_fraction(&taps),
        taps,
        l2_norm,
        grid_used: n,
        masked: true,
        saturated,
        discarded_l2: T::zero(),
    })
}

fn synth_adaptive<T: Scalar>(m: u32, params: &PredictorParams<T>, n: usize) -> Result<Kernel<T>> {
    let mut g = (4 * n).max(8);
    let mut prev: Option<Vec<T>> = None;
    while g <= GRID_CAP {
        let (mut vals, saturated) = transfer_samples(m, params, None, g)?;
        fft_in_place(&mut vals, true);
        let scale = T::one() / T::of_usize(g);
        let full: Vec<T> = vals.iter().map(|v| v.re * scale).collect();
        let cand: Vec<T> = full[..n].to_vec();
        let finite = full.iter().all(|t| t.is_finite());
        if finite {
            if let Some(p) = &prev {
                let norm = l2_real(&cand);
                let diff: Vec<T> = cand.iter().zip(p.iter()).map(|(a, b)| *a - *b).collect();
                let stable =
                    l2_real(&diff) <= T::grid_tol() * norm.max(T::min_positive_value());
                let leak = energy_ratio(&full[g - g / 4..], &full);
                if stable && leak <= T::from(CAUSAL_LEAK_BUDGET).unwrap() {
                    return Ok(Kernel {
                        m,
                        params: *params,
                        tail_fraction: tail_energy_fraction(&cand),
                        discarded_l2: l2_real(&full[n..]),
                        taps: cand,
                        l2_norm: norm,
                        grid_used: g,
                        masked: false,
                        saturated,
                    });
                }
            }
            prev = Some(cand);
        } else {
            prev = None;
        }
        g *= 2;
    }
    Err(Error::GridCapExceeded { gamma: params.gamma().to_f64_lossy(), cap: GRID_CAP })
}

fn tail_energy_fraction<T: Scalar>(taps: &[T]) -> T {
    energy_ratio(&taps[taps.len() / 2..], taps)
}

fn energy_ratio<T: Scalar>(part: &[T], whole: &[T]) -> T {
    let w = l2_real(whole);
    if w.is_zero() || !w.is_finite() {
        return T::zero();
    }
    let r = l2_real(part) / w;
    r * r
}

/// Worst-case deviation of the response from the pure `m`-step shift over
/// all grid nodes outside the arc: `max |H(omega_j) - e^(i*omega_j*m)|`.
pub fn kernel_freq_error<T: Scalar>(
    m: u32,
    params: &PredictorParams<T>,
    gap: &SpectralGap<T>,
    grid: usize,
) -> Result<T> {
    let mut worst = T::zero();
    for j in 0..grid {
        let w = grid_omega::<T>(j, grid);
        if gap.in_gap(w) {
            continue;
        }
        let h = kernel_transfer(w, m, params)?.value;
        let shift = unit_phase(w * T::of(m as i64));
        let e = (h - shift).norm();
        if e > worst {
            worst = e;
        }
    }
    Ok(worst)
}

/// Closed-form response at DC: `(1 - exp(-gamma/(1 + alpha)))^m`.
pub fn kernel_dc_gain<T: Scalar>(m: u32, params: &PredictorParams<T>) -> T {
    let base = T::one() - (-params.gamma() / (T::one() + params.alpha())).exp();
    num_traits::Float::powi(base, m as i32)
}

impl<T: Scalar> Kernel<T> {
    /// Discrete-time response of the stored taps at `omega`, with
    /// compensated accumulation.
    pub fn dtft(&self, omega: T) -> Complex<T> {
        let mut acc = CompensatedC::new();
        for (j, t) in self.taps.iter().enumerate() {
            acc.add(unit_phase(-omega * T::of(j as i64)).scale(*t));
        }
        acc.total()
    }

    /// Serialize taps as `j,tap` rows with a header.
    pub fn write_taps_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,tap")?;
        for (j, t) in self.taps.iter().enumerate() {
            writeln!(w, "{},{}", j, t)?;
        }
        Ok(())
    }

    pub fn meta(&self) -> KernelMeta {
        KernelMeta {
            gamma: self.params.gamma().to_f64_lossy(),
            r_hat: self.params.r_hat().to_f64_lossy(),
            m: self.m,
            n: self.taps.len(),
            g_used: self.grid_used,
            l2_norm: self.l2_norm.to_f64_lossy(),
            tail_fraction: self.tail_fraction.to_f64_lossy(),
            masked: self.masked,
        }
    }

    /// Rebuild a kernel from a taps file and its sidecar. Diagnostics the
    /// sidecar does not carry (saturation, discarded tail) reset to neutral.
    pub fn from_parts(meta: &KernelMeta, taps: Vec<T>) -> Result<Kernel<T>> {
        if taps.len() != meta.n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("sidecar says N = {}, taps file has {}", meta.n, taps.len()),
            });
        }
        let params = PredictorParams::new(
            T::from(meta.gamma).ok_or(Error::InvalidParam { name: "gamma", value: meta.gamma })?,
            T::from(meta.r_hat).ok_or(Error::InvalidParam { name: "r_hat", value: meta.r_hat })?,
        )?;
        let l2_norm = l2_real(&taps);
        Ok(Kernel {
            m: meta.m,
            params,
            tail_fraction: tail_energy_fraction(&taps),
            taps,
            l2_norm,
            grid_used: meta.g_used,
            masked: meta.masked,
            saturated: false,
            discarded_l2: T::zero(),
        })
    }

    /// Parse `j,tap` rows written by [`Kernel::write_taps_csv`].
    pub fn read_taps_csv<R: BufRead>(r: R) -> Result<Vec<T>> {
        let mut taps = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if idx == 0 && fields.first() == Some(&"j") {
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 2 fields, got {}", fields.len()),
                });
            }
            let j: usize = fields[0].parse().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad lag {:?}: {e}", fields[0]),
            })?;
            if j != taps.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("non-consecutive lag {j}, expected {}", taps.len()),
                });
            }
            let v: f64 = fields[1].parse().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad tap {:?}: {e}", fields[1]),
            })?;
            taps.push(T::from(v).ok_or(Error::Parse {
                line: idx + 1,
                msg: format!("tap {v} not representable"),
            })?);
        }
        Ok(taps)
    }
}

/// Sidecar metadata written next to a taps file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelMeta {
    pub gamma: f64,
    pub r_hat: f64,
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "G_used")]
    pub g_used: usize,
    pub l2_norm: f64,
    pub tail_fraction: f64,
    pub masked: bool,
}
