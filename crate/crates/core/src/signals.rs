//! Complex baseband series, the telescope signal model and power bookkeeping.
//!
//! The telescope output in a filterbank channel is modelled as
//! `x_T[n] = x_A[n] + x_N[n] + x_R[n]`: a circular complex Gaussian sky term,
//! circular complex Gaussian system noise, and a deterministic interference
//! term. Everything here is pure: values in, values out.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Index;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{invalid, shape, Error, Result};
use crate::rng::rng_from_seed;

/// Uniformly sampled complex baseband time series.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries {
    samples: Vec<Complex64>,
    sample_rate: f64,
    center_freq: f64,
}

impl ComplexSeries {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        Self::with_center(samples, sample_rate, 0.0)
    }

    pub fn with_center(
        samples: Vec<Complex64>,
        sample_rate: f64,
        center_freq: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("series must contain at least one sample"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid(format!(
                "sample_rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            center_freq,
        })
    }

    /// All-zero series of length `n`.
    pub fn zeros(n: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n], sample_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn center_freq(&self) -> f64 {
        self.center_freq
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::with_center(samples, self.sample_rate, self.center_freq)
    }

    /// Total energy `sum |x[n]|^2`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean power `(1/N) sum |x[n]|^2`.
    pub fn power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// Elementwise scale by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| s * factor).collect(),
            ..self.clone()
        }
    }

    /// Contiguous sub-range `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(invalid(format!(
                "window [{start}, {}) outside series of length {}",
                start + len,
                self.len()
            )));
        }
        self.with_samples(self.samples[start..start + len].to_vec())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let out = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        self.with_samples(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let out = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        self.with_samples(out)
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(shape(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let tol = 1e-9 * self.sample_rate.abs().max(other.sample_rate.abs());
        if (self.sample_rate - other.sample_rate).abs() > tol {
            return Err(shape(format!(
                "sample-rate mismatch: {} Hz vs {} Hz",
                self.sample_rate, other.sample_rate
            )));
        }
        Ok(())
    }
}

impl Index<usize> for ComplexSeries {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.samples[i]
    }
}

/// A level in decibels. The reference (dB, dBm, dBi) depends on context.
///
/// `PowerDb::OFF` (negative infinity) is the sentinel for "no power".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDb(pub f64);

impl PowerDb {
    pub const OFF: PowerDb = PowerDb(f64::NEG_INFINITY);

    pub fn from_linear(power: f64) -> Self {
        if power <= 0.0 {
            Self::OFF
        } else {
            PowerDb(10.0 * power.log10())
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_off(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Linear power ratio `10^(dB/10)`.
    pub fn to_linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }

    /// Amplitude ratio `10^(dB/20)`.
    pub fn to_amplitude(self) -> f64 {
        10f64.powf(self.0 / 20.0)
    }
}

impl std::ops::Add for PowerDb {
    type Output = PowerDb;

    fn add(self, rhs: PowerDb) -> PowerDb {
        PowerDb(self.0 + rhs.0)
    }
}

impl std::ops::Sub for PowerDb {
    type Output = PowerDb;

    fn sub(self, rhs: PowerDb) -> PowerDb {
        PowerDb(self.0 - rhs.0)
    }
}

impl fmt::Display for PowerDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} dB", self.0)
    }
}

/// Draws `n` i.i.d. circular complex Gaussian samples with total variance
/// `variance` (each quadrature gets `variance / 2`).
pub fn gen_circular_gaussian(
    n: usize,
    variance: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<ComplexSeries> {
    if n == 0 {
        return Err(invalid("gaussian series length must be >= 1"));
    }
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(invalid(format!("variance must be >= 0, got {variance}")));
    }
    let sigma = (variance / 2.0).sqrt();
    let mut rng = rng_from_seed(seed);
    let samples = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    ComplexSeries::new(samples, sample_rate)
}

/// `base + 10^(gain_db/20) * add`. A gain of `PowerDb::OFF` returns `base`.
pub fn mix(base: &ComplexSeries, add: &ComplexSeries, gain_db: PowerDb) -> Result<ComplexSeries> {
    base.check_compatible(add)?;
    if gain_db.is_off() {
        return Ok(base.clone());
    }
    if !gain_db.0.is_finite() {
        return Err(invalid(format!(
            "gain must be finite or OFF, got {}",
            gain_db.0
        )));
    }
    let g = gain_db.to_amplitude();
    let out = base
        .samples()
        .iter()
        .zip(add.samples())
        .map(|(b, a)| b + a * g)
        .collect();
    base.with_samples(out)
}

/// Integer-sample delay with zero fill; length is preserved.
pub fn delay_samples(x: &ComplexSeries, k: usize) -> Result<ComplexSeries> {
    if k >= x.len() {
        return Err(invalid(format!(
            "delay {k} must be smaller than series length {}",
            x.len()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    out[k..].copy_from_slice(&x.samples()[..x.len() - k]);
    x.with_samples(out)
}

/// Interference-to-noise ratio of `rfi` against a linear noise power.
/// A silent `rfi` yields `PowerDb::OFF`.
pub fn inr_db(rfi: &ComplexSeries, noise_power: f64) -> Result<PowerDb> {
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(invalid(format!(
            "noise_power must be positive, got {noise_power}"
        )));
    }
    Ok(PowerDb::from_linear(rfi.power() / noise_power))
}

/// Band-limited interpolation by an integer factor (spectral zero padding).
/// Input samples are reproduced exactly at every `factor`-th output sample.
pub fn upsample(x: &ComplexSeries, factor: usize) -> Result<ComplexSeries> {
    if factor == 0 {
        return Err(invalid("upsampling factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let n = x.len();
    let mut spec = x.samples().to_vec();
    dft::forward_in_place(&mut spec);

    let m = n * factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    if n.is_multiple_of(2) {
        padded[..half].copy_from_slice(&spec[..half]);
        padded[m - half + 1..].copy_from_slice(&spec[half + 1..]);
        // split the Nyquist bin so real-valued inputs stay real
        padded[half] = spec[half] * 0.5;
        padded[m - half] = spec[half] * 0.5;
    } else {
        padded[..=half].copy_from_slice(&spec[..=half]);
        padded[m - half..].copy_from_slice(&spec[half + 1..]);
    }
    dft::inverse_in_place(&mut padded);
    let s = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= s);
    ComplexSeries::with_center(padded, x.sample_rate() * factor as f64, x.center_freq())
}

/// Multiplies by `exp(j 2 pi offset n / fs)`; the annotation moves with it.
pub fn frequency_shift(x: &ComplexSeries, offset_hz: f64) -> ComplexSeries {
    let w = 2.0 * std::f64::consts::PI * offset_hz / x.sample_rate();
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &s)| s * Complex64::from_polar(1.0, w * n as f64))
        .collect();
    ComplexSeries {
        samples,
        sample_rate: x.sample_rate(),
        center_freq: x.center_freq(),
    }
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &ComplexSeries) -> PowerDb {
    let peak = x.samples().iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
    let mean = x.power();
    if mean == 0.0 {
        return PowerDb::OFF;
    }
    PowerDb::from_linear(peak / mean)
}

const SERIES_MAGIC: &[u8; 4] = b"RFIC";
const SERIES_VERSION: u32 = 1;

/// Writes the raw series format: a 24-byte header (`RFIC`, u32 version,
/// f64 sample rate, f64 center frequency) followed by little-endian
/// interleaved I/Q `f32` pairs.
pub fn write_series<W: Write>(x: &ComplexSeries, mut w: W) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * x.len());
    buf.extend_from_slice(SERIES_MAGIC);
    buf.extend_from_slice(&SERIES_VERSION.to_le_bytes());
    buf.extend_from_slice(&x.sample_rate().to_le_bytes());
    buf.extend_from_slice(&x.center_freq().to_le_bytes());
    for s in x.samples() {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_series<R: Read>(mut r: R) -> Result<ComplexSeries> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..4] != SERIES_MAGIC {
        return Err(Error::Format("missing RFIC header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SERIES_VERSION {
        return Err(Error::Format(format!(
            "unsupported series version {version}"
        )));
    }
    let rate = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let center = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let body = &bytes[24..];
    if body.len() % 8 != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes is not whole I/Q pairs",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ComplexSeries::with_center(samples, rate, center)
}
