use std::io::{BufRead, Write};

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::{l2_complex, Signal};

/// Grid spectrum: values of the z-transform on the `G` roots of unity.
///
/// Bin `j` sits at `omega_j = 2*pi*j/G` folded into `(-pi, pi]`. The fold is
/// exact because `j/G` and `(j - G)/G` are dyadic rationals on power-of-two
/// grids.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Scalar> {
    grid: usize,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn new(values: Vec<Complex<T>>) -> Result<Self> {
        let grid = values.len();
        if !grid.is_power_of_two() {
            return Err(Error::GridNotPowerOfTwo { grid });
        }
        Ok(Spectrum { grid, values })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    /// Angular frequency of bin `j`, in `(-pi, pi]`.
    pub fn omega(&self, j: usize) -> T {
        grid_omega(j, self.grid)
    }

    /// `sqrt((1/G) * sum |S_j|^2)`; equals the time-domain l2 norm of the
    /// underlying signal when the signal fits the grid.
    pub fn norm_over_grid(&self) -> T {
        l2_complex(&self.values) / T::of_usize(self.grid).sqrt()
    }

    /// Serialize as `j,omega,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,omega,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{},{}", j, self.omega(j), v.re, v.im)?;
        }
        Ok(())
    }

    /// Parse `j,omega,re,im` rows. Bins must be consecutive from zero and
    /// fill a power-of-two grid; the omega column is informational.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Spectrum<T>> {
        let mut values = Vec::new();
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
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let j: usize = fields[0].parse().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad bin {:?}: {e}", fields[0]),
            })?;
            if j != values.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("non-consecutive bin {j}, expected {}", values.len()),
                });
            }
            let parse_f = |s: &str| -> Result<T> {
                let v: f64 = s.parse().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad value {s:?}: {e}"),
                })?;
                T::from(v).ok_or(Error::Parse { line: idx + 1, msg: format!("{v} not representable") })
            };
            values.push(Complex::new(parse_f(fields[2])?, parse_f(fields[3])?));
        }
        Spectrum::new(values)
    }
}

/// Angular frequency of bin `j` on a `g`-point grid, folded into `(-pi, pi]`.
pub(crate) fn grid_omega<T: Scalar>(j: usize, g: usize) -> T {
    debug_assert!(j < g);
    let signed = if 2 * j <= g { j as i64 } else { j as i64 - g as i64 };
    let two_pi = T::PI() + T::PI();
    two_pi * T::of(signed) / T::of_usize(g)
}

/// Unit complex `e^(i*angle)`.
pub(crate) fn unit_phase<T: Scalar>(angle: T) -> Complex<T> {
    Complex::from_polar(T::one(), angle)
}

pub(crate) fn fft_in_place<T: Scalar>(vals: &mut [Complex<T>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(vals.len())
    } else {
        planner.plan_fft_forward(vals.len())
    };
    fft.process(vals);
}

/// Anchored grid transform: `S_j = sum_t x(t) * e^(-i*omega_j*t)` with the
/// true integer index `t` in the exponent, not the window offset. The
/// signal's support must fit inside one grid period.
pub fn z_transform_on_grid<T: Scalar>(x: &Signal<T>, grid: usize) -> Result<Spectrum<T>> {
    if !grid.is_power_of_two() {
        return Err(Error::GridNotPowerOfTwo { grid });
    }
    if x.len() > grid {
        return Err(Error::SignalTooLongForGrid { len: x.len(), grid });
    }
    let mut buf = vec![Complex::new(T::zero(), T::zero()); grid];
    buf[..x.len()].copy_from_slice(x.values());
    fft_in_place(&mut buf, false);
    let start = T::of(x.start());
    for (j, v) in buf.iter_mut().enumerate() {
        let w = grid_omega::<T>(j, grid);
        *v = *v * unit_phase(-w * start);
    }
    Spectrum::new(buf)
}

/// Windowed inverse transform: reconstructs `x(t) = (1/G) * sum_j S_j *
/// e^(i*omega_j*t)` for `t` in `[window_start, window_start + len)`. The
/// result is the periodic extension of whatever signal produced `s`, so any
/// window of one period length reproduces it up to circular shift.
pub fn inverse_z_on_grid<T: Scalar>(
    s: &Spectrum<T>,
    window_start: i64,
    len: usize,
) -> Result<Signal<T>> {
    let g = s.grid();
    if len > g {
        return Err(Error::WindowExceedsGrid { len, grid: g });
    }
    let w0 = T::of(window_start);
    let mut buf: Vec<Complex<T>> = s
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| *v * unit_phase(grid_omega::<T>(j, g) * w0))
        .collect();
    fft_in_place(&mut buf, true);
    let scale = T::one() / T::of_usize(g);
    let values = buf[..len].iter().map(|v| v.scale(scale)).collect();
    Ok(Signal::new(window_start, values))
}
