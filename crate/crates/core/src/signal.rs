use std::io::{BufRead, Write};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finitely supported complex sequence on the integers.
///
/// Stored as a dense window `[start, start + len)`; everything outside the
/// window is zero. Windows may contain interior zeros (sparse patterns are
/// represented densely with explicit gaps).
#[derive(Debug, Clone)]
pub struct Signal<T: Scalar> {
    start: i64,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(start: i64, values: Vec<Complex<T>>) -> Self {
        Signal { start, values }
    }

    /// Zero signal with an empty window.
    pub fn empty() -> Self {
        Signal { start: 0, values: Vec::new() }
    }

    /// Window of zeros, ready to be filled in place.
    pub fn zeros(start: i64, len: usize) -> Self {
        Signal { start, values: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    /// Real-valued convenience constructor.
    pub fn from_real(start: i64, values: impl IntoIterator<Item = T>) -> Self {
        Signal {
            start,
            values: values.into_iter().map(|v| Complex::new(v, T::zero())).collect(),
        }
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the last stored index.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    /// Value at integer index `t`; zero outside the window.
    pub fn sample(&self, t: i64) -> Complex<T> {
        if t < self.start || t >= self.end() {
            Complex::new(T::zero(), T::zero())
        } else {
            self.values[(t - self.start) as usize]
        }
    }

    pub fn set(&mut self, t: i64, v: Complex<T>) {
        assert!(
            t >= self.start && t < self.end(),
            "set({t}) outside window [{}, {})",
            self.start,
            self.end()
        );
        let i = (t - self.start) as usize;
        self.values[i] = v;
    }

    /// `(index, value)` pairs over the stored window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex<T>)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| (self.start + i as i64, *v))
    }

    /// Copy of the window `[from, from + len)` as its own signal.
    pub fn window(&self, from: i64, len: usize) -> Signal<T> {
        let mut out = Signal::zeros(from, len);
        for i in 0..len {
            out.values[i] = self.sample(from + i as i64);
        }
        out
    }

    /// Drop leading and trailing zeros. Canonical form for equality checks.
    pub fn trimmed(&self) -> Signal<T> {
        let is_zero = |c: &Complex<T>| c.re.is_zero() && c.im.is_zero();
        let first = self.values.iter().position(|c| !is_zero(c));
        match first {
            None => Signal::empty(),
            Some(a) => {
                let b = self.values.iter().rposition(|c| !is_zero(c)).unwrap();
                Signal {
                    start: self.start + a as i64,
                    values: self.values[a..=b].to_vec(),
                }
            }
        }
    }

    /// Time reversal: `y(t) = x(-t)`.
    pub fn reversed(&self) -> Signal<T> {
        let mut values = self.values.clone();
        values.reverse();
        Signal { start: -(self.end() - 1), values }
    }

    /// Pointwise `self + coeff * other` over the union window.
    pub fn add_scaled(&self, other: &Signal<T>, coeff: T) -> Signal<T> {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            let mut out = other.clone();
            for v in out.values.iter_mut() {
                *v = v.scale(coeff);
            }
            return out;
        }
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        let mut out = Signal::zeros(start, (end - start) as usize);
        for i in 0..out.len() {
            let t = start + i as i64;
            out.values[i] = self.sample(t) + other.sample(t).scale(coeff);
        }
        out
    }

    /// Scaled l2 norm of the stored values. Safe against overflow for
    /// component magnitudes up to the float max.
    pub fn norm_l2(&self) -> T {
        l2_complex(&self.values)
    }

    /// Max component magnitude.
    pub fn norm_linf(&self) -> T {
        let mut peak = T::zero();
        for v in &self.values {
            let a = v.norm();
            if a > peak {
                peak = a;
            }
        }
        peak
    }

    /// Exact equality of trimmed windows (bit-level on both components).
    pub fn bit_eq(&self, other: &Signal<T>) -> bool {
        let a = self.trimmed();
        let b = other.trimmed();
        a.start == b.start
            && a.values.len() == b.values.len()
            && a.values.iter().zip(b.values.iter()).all(|(x, y)| {
                x.re.to_f64_lossy().to_bits() == y.re.to_f64_lossy().to_bits()
                    && x.im.to_f64_lossy().to_bits() == y.im.to_f64_lossy().to_bits()
            })
    }

    /// Serialize as `t,re,im` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re,im")?;
        for (t, v) in self.iter() {
            writeln!(w, "{},{},{}", t, v.re, v.im)?;
        }
        Ok(())
    }

    /// Parse `t,re,im` rows; a header line is skipped if present. Indices
    /// must be consecutive (dense window).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Signal<T>> {
        let mut start = None;
        let mut next = 0i64;
        let mut values = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if idx == 0 && fields.first() == Some(&"t") {
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let parse_f = |s: &str, what: &str| -> Result<T> {
                let v: f64 = s.parse().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad {what} {s:?}: {e}"),
                })?;
                T::from(v).ok_or(Error::Parse {
                    line: idx + 1,
                    msg: format!("{what} {v} not representable"),
                })
            };
            let t: i64 = fields[0].parse().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad index {:?}: {e}", fields[0]),
            })?;
            match start {
                None => {
                    start = Some(t);
                    next = t;
                }
                Some(_) => {
                    if t != next {
                        return Err(Error::Parse {
                            line: idx + 1,
                            msg: format!("non-consecutive index {t}, expected {next}"),
                        });
                    }
                }
            }
            next += 1;
            values.push(Complex::new(parse_f(fields[1], "re")?, parse_f(fields[2], "im")?));
        }
        Ok(Signal { start: start.unwrap_or(0), values })
    }
}

/// Scaled l2 norm of a complex slice. Factors out the peak magnitude before
/// squaring, so inputs up to the float max stay finite.
pub fn l2_complex<T: Scalar>(vals: &[Complex<T>]) -> T {
    let mut peak = T::zero();
    for v in vals {
        let a = v.norm();
        if a > peak {
            peak = a;
        }
    }
    if peak.is_zero() || !peak.is_finite() {
        return peak;
    }
    let mut acc = T::zero();
    for v in vals {
        let re = v.re / peak;
        let im = v.im / peak;
        acc = acc + re * re + im * im;
    }
    peak * acc.sqrt()
}

/// Scaled l2 norm of a real slice.
pub fn l2_real<T: Scalar>(vals: &[T]) -> T {
    let mut peak = T::zero();
    for v in vals {
        let a = v.abs();
        if a > peak {
            peak = a;
        }
    }
    if peak.is_zero() || !peak.is_finite() {
        return peak;
    }
    let mut acc = T::zero();
    for v in vals {
        let r = *v / peak;
        acc = acc + r * r;
    }
    peak * acc.sqrt()
}

/// Neumaier compensated accumulator. Used where sums mix magnitudes across
/// many orders (kernel application, Parseval checks).
#[derive(Clone, Copy)]
pub(crate) struct Compensated<T: Scalar> {
    sum: T,
    c: T,
}

impl<T: Scalar> Compensated<T> {
    pub fn new() -> Self {
        Compensated { sum: T::zero(), c: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c = self.c + ((self.sum - t) + x);
        } else {
            self.c = self.c + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn total(self) -> T {
        self.sum + self.c
    }
}

/// Complex compensated accumulator.
#[derive(Clone, Copy)]
pub(crate) struct CompensatedC<T: Scalar> {
    re: Compensated<T>,
    im: Compensated<T>,
}

impl<T: Scalar> CompensatedC<T> {
    pub fn new() -> Self {
        CompensatedC { re: Compensated::new(), im: Compensated::new() }
    }

    pub fn add(&mut self, z: Complex<T>) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn total(self) -> Complex<T> {
        Complex::new(self.re.total(), self.im.total())
    }
}
