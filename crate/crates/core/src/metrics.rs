//! Reconstruction quality, RFI removal and data-rate bookkeeping.

use serde::{Deserialize, Serialize};

use crate::channelizer::channelize;
use crate::error::{invalid, Error, Result};
use crate::signals::ComplexSeries;

/// Reconstruction quality factor: normalized mean-square distortion of the
/// recovered astronomical signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqfValue {
    pub value: f64,
    pub n_samples: usize,
}

/// `mean |ref - rec|^2 / mean |ref|^2`, where `ref` is the interference-free
/// telescope signal (sky plus system noise).
pub fn rqf(reference: &ComplexSeries, reconstructed: &ComplexSeries) -> Result<RqfValue> {
    reference.check_compatible(reconstructed)?;
    let p = reference.power();
    if p == 0.0 {
        return Err(Error::UndefinedMetric("reference has zero power".into()));
    }
    let err: f64 = reference
        .samples()
        .iter()
        .zip(reconstructed.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / reference.len() as f64;
    Ok(RqfValue {
        value: err / p,
        n_samples: reference.len(),
    })
}

/// Detrimental-distortion level for a processing window: 10% of the power
/// over `integration_s`, scaled to `window_s`.
pub fn itu_threshold(integration_s: f64, window_s: f64) -> Result<f64> {
    if !(integration_s > 0.0 && window_s > 0.0) {
        return Err(invalid("integration and window durations must be positive"));
    }
    Ok(0.10 / integration_s * window_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovalFraction {
    pub value: f64,
    /// The raw value fell outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// `x_hat_R = x_T - x_hat_T`, the interference estimate implied by a
/// reconstruction.
pub fn residual_rfi(
    composite: &ComplexSeries,
    reconstructed: &ComplexSeries,
) -> Result<ComplexSeries> {
    composite.sub(reconstructed)
}

/// Fraction of incident interference power removed:
/// `1 - power(rec - (composite - rfi)) / power(rfi)`, clamped to `[0, 1]`.
pub fn removal_fraction(
    incident_rfi: &ComplexSeries,
    composite: &ComplexSeries,
    reconstructed: &ComplexSeries,
) -> Result<RemovalFraction> {
    incident_rfi.check_compatible(composite)?;
    incident_rfi.check_compatible(reconstructed)?;
    let p_rfi = incident_rfi.power();
    if p_rfi == 0.0 {
        return Err(Error::UndefinedMetric("incident RFI has zero power".into()));
    }
    let clean = composite.sub(incident_rfi)?;
    let left = reconstructed.sub(&clean)?;
    let raw = 1.0 - left.power() / p_rfi;
    let value = raw.clamp(0.0, 1.0);
    Ok(RemovalFraction {
        value,
        clamped: value != raw,
    })
}

/// Time-frequency bin view of removal, as a flagger would count it.
///
/// Each series is split by a `n_bins`-channel filterbank. A bin counts as
/// corrupted when its interference power exceeds `threshold` times the mean
/// clean-signal bin power. The result is the fraction of bins corrupted
/// before cancellation that are no longer corrupted after it, or `None`
/// when no bin was corrupted to begin with.
pub fn bin_removal_fraction(
    incident_rfi: &ComplexSeries,
    composite: &ComplexSeries,
    reconstructed: &ComplexSeries,
    n_bins: usize,
    threshold: f64,
) -> Result<Option<f64>> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    let clean = composite.sub(incident_rfi)?;
    let left = reconstructed.sub(&clean)?;
    let tf = |x: &ComplexSeries| -> Result<Vec<f64>> {
        let ch = channelize(x, n_bins, None)?;
        Ok(ch
            .channels
            .iter()
            .flat_map(|c| c.samples().iter().map(|v| v.norm_sqr()))
            .collect())
    };
    let clean_bins = tf(&clean)?;
    let floor = threshold * clean_bins.iter().sum::<f64>() / clean_bins.len() as f64;
    let before = tf(incident_rfi)?;
    let after = tf(&left)?;
    let mut corrupted = 0usize;
    let mut recovered = 0usize;
    for (b, a) in before.iter().zip(&after) {
        if *b > floor {
            corrupted += 1;
            if *a <= floor {
                recovered += 1;
            }
        }
    }
    Ok((corrupted > 0).then(|| recovered as f64 / corrupted as f64))
}

/// Rate needed to share an `L x M` eigenspace every `duration_s` for each
/// fine channel the interference covers:
/// `(1 / duration) * L * M * bits * rfi_bw / fine_bw`.
pub fn rate_budget_bps(
    l: usize,
    m: usize,
    duration_s: f64,
    rfi_bw_hz: f64,
    fine_bw_hz: f64,
    bits_per_entry: u32,
) -> Result<f64> {
    if !(duration_s > 0.0 && rfi_bw_hz > 0.0 && fine_bw_hz > 0.0) {
        return Err(invalid("duration and bandwidths must be positive"));
    }
    Ok(l as f64 * m as f64 * bits_per_entry as f64 * (rfi_bw_hz / fine_bw_hz) / duration_s)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Sample standard deviation (`n - 1` denominator); zero for one value.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return if v.is_empty() { f64::NAN } else { 0.0 };
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
