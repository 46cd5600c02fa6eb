use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::Signal;
use crate::spectrum::{inverse_z_on_grid, z_transform_on_grid, Spectrum};

/// Closed arc of the unit circle, described in the chord metric: `omega` is
/// inside when `|e^(i*omega) - e^(i*center)| <= delta`.
///
/// The chord between angles is `2*|sin((omega - center)/2)|`, so `delta`
/// ranges over `(0, 2]`; `delta = 2` is the whole circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap<T: Scalar> {
    center: T,
    delta: T,
}

impl<T: Scalar> SpectralGap<T> {
    pub fn new(center: T, delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta <= T::of(2)) || !delta.is_finite() {
            return Err(Error::InvalidParam { name: "delta", value: delta.to_f64_lossy() });
        }
        if !center.is_finite() {
            return Err(Error::InvalidParam { name: "center", value: center.to_f64_lossy() });
        }
        Ok(SpectralGap { center: wrap_angle(center), delta })
    }

    /// Arc centered at `pi` (the half-band edge).
    pub fn at_pi(delta: T) -> Result<Self> {
        Self::new(T::PI(), delta)
    }

    /// Arc centered at `0` (DC).
    pub fn at_zero(delta: T) -> Result<Self> {
        Self::new(T::zero(), delta)
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Chord distance from `omega` to the arc center. Periodic in `omega`,
    /// no pre-wrapping needed: `|sin((d + 2*pi)/2)| = |sin(d/2)|`.
    pub fn chord(&self, omega: T) -> T {
        let half = (omega - self.center) / T::of(2);
        (T::of(2) * half.sin()).abs()
    }

    pub fn in_gap(&self, omega: T) -> bool {
        self.chord(omega) <= self.delta
    }

    /// Angular half-width of the arc, `2*asin(delta/2)`.
    pub fn arc_half_width(&self) -> T {
        T::of(2) * (self.delta / T::of(2)).asin()
    }

    /// Whether the arc maps to itself under conjugation `omega -> -omega`.
    /// Only these arcs admit real-tap masked kernels.
    pub fn conjugation_symmetric(&self) -> bool {
        let tol = T::from(1e-9).unwrap();
        self.center.abs() < tol || (self.center - T::PI()).abs() < tol
    }
}

fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = a % two_pi;
    if w > T::PI() {
        w = w - two_pi;
    } else if w <= -T::PI() {
        w = w + two_pi;
    }
    w
}

/// Zero the spectrum on the arc and transform back. The output window is the
/// full grid period starting at `x.start()`, which makes the operator exactly
/// idempotent on its own output.
pub fn project_gap<T: Scalar>(x: &Signal<T>, gap: &SpectralGap<T>, grid: usize) -> Result<Signal<T>> {
    let mut s = z_transform_on_grid(x, grid)?;
    zero_arc(&mut s, gap);
    inverse_z_on_grid(&s, x.start(), grid)
}

pub(crate) fn zero_arc<T: Scalar>(s: &mut Spectrum<T>, gap: &SpectralGap<T>) {
    let g = s.grid();
    for j in 0..g {
        if gap.in_gap(s.omega(j)) {
            s.values_mut()[j] = Complex::new(T::zero(), T::zero());
        }
    }
}

/// Energy of `x` inside the arc: `(1/G) * sum_{in gap} |S_j|^2`. Its square
/// root is exactly the l2 distance `||x - project_gap(x)||` by Parseval.
pub fn gap_residual_energy<T: Scalar>(
    x: &Signal<T>,
    gap: &SpectralGap<T>,
    grid: usize,
) -> Result<T> {
    let s = z_transform_on_grid(x, grid)?;
    let mut picked: Vec<Complex<T>> = Vec::new();
    for j in 0..grid {
        if gap.in_gap(s.omega(j)) {
            picked.push(s.values()[j]);
        }
    }
    let n = crate::signal::l2_complex(&picked) / T::of_usize(grid).sqrt();
    Ok(n * n)
}

/// Find the widest arc around `center` that `x` leaves almost empty.
///
/// Walks the halving schedule `2, 1, 1/2, ..., 2^-20` from the top and
/// returns the first (largest) `delta` whose arc holds at most `eps` of the
/// signal in l2, together with the projection onto that arc's complement.
pub fn densify<T: Scalar>(
    x: &Signal<T>,
    eps: T,
    center: T,
    grid: usize,
) -> Result<(Signal<T>, T)> {
    if !(eps >= T::zero()) {
        return Err(Error::InvalidParam { name: "eps", value: eps.to_f64_lossy() });
    }
    let s = z_transform_on_grid(x, grid)?;
    let probe = SpectralGap::new(center, T::of(2))?;
    // Bin energies sorted by chord, with prefix sums: the residual for any
    // delta is then a prefix lookup instead of a fresh pass.
    let mut by_chord: Vec<(T, T)> = (0..grid)
        .map(|j| {
            let v = s.values()[j];
            (probe.chord(s.omega(j)), v.norm_sqr())
        })
        .collect();
    by_chord.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut prefix = Vec::with_capacity(grid);
    let mut acc = T::zero();
    for &(_, e) in &by_chord {
        acc = acc + e;
        prefix.push(acc);
    }
    let budget = eps * eps * T::of_usize(grid);

    let mut delta = T::of(2);
    for _ in 0..22 {
        let covered = by_chord.partition_point(|&(c, _)| c <= delta);
        let residual = if covered == 0 { T::zero() } else { prefix[covered - 1] };
        if residual <= budget {
            let gap = SpectralGap::new(center, delta)?;
            let projected = project_gap(x, &gap, grid)?;
            return Ok((projected, delta));
        }
        delta = delta / T::of(2);
    }
    Err(Error::NoFeasibleDelta)
}

/// Half-band modulation `y(t) = (-1)^t * x(t)`; swaps the roles of the arcs
/// at 0 and pi, letting center-0 problems reuse center-pi machinery.
pub fn modulate_half_band<T: Scalar>(x: &Signal<T>) -> Signal<T> {
    let mut out = x.clone();
    for i in 0..out.len() {
        let t = out.start() + i as i64;
        if t.rem_euclid(2) == 1 {
            let v = out.values()[i];
            out.values_mut()[i] = Complex::new(-v.re, -v.im);
        }
    }
    out
}

/// Arc description as it appears in config files: center is either the
/// string `"pi"`/`"zero"` or a number in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapConfig {
    pub center: GapCenter,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GapCenter {
    Named(String),
    Radians(f64),
}

impl GapConfig {
    pub fn to_gap<T: Scalar>(&self) -> Result<SpectralGap<T>> {
        let delta = T::from(self.delta)
            .ok_or(Error::InvalidParam { name: "delta", value: self.delta })?;
        match &self.center {
            GapCenter::Named(s) if s == "pi" => SpectralGap::at_pi(delta),
            GapCenter::Named(s) if s == "zero" => SpectralGap::at_zero(delta),
            GapCenter::Named(s) => Err(Error::Parse {
                line: 0,
                msg: format!("unknown gap center {s:?}; use \"pi\", \"zero\", or radians"),
            }),
            GapCenter::Radians(r) => SpectralGap::new(
                T::from(*r).ok_or(Error::InvalidParam { name: "center", value: *r })?,
                delta,
            ),
        }
    }
}
