//! Critically sampled block-DFT filterbank standing in for the telescope's
//! polyphase filterbank.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{invalid, shape, Result};
use crate::signals::ComplexSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelPlan {
    pub coarse_bw_hz: f64,
    pub fine_bw_hz: f64,
    pub n_fine_per_coarse: usize,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            coarse_bw_hz: 11.7e6,
            fine_bw_hz: 30.5e3,
            n_fine_per_coarse: 384,
        }
    }
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.fine_bw_hz > 0.0 && self.coarse_bw_hz > 0.0) {
            return Err(invalid("channel bandwidths must be positive"));
        }
        if self.fine_bw_hz > self.coarse_bw_hz {
            return Err(invalid("fine_bw_hz: must not exceed coarse_bw_hz"));
        }
        if self.n_fine_per_coarse == 0 {
            return Err(invalid("n_fine_per_coarse: must be >= 1"));
        }
        Ok(())
    }

    /// `coarse_bw / fine_bw` rounded to the nearest count.
    pub fn derived_fine_count(&self) -> usize {
        ((self.coarse_bw_hz / self.fine_bw_hz).round() as usize).max(1)
    }
}

/// Output of [`channelize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Channelized {
    pub channels: Vec<ComplexSeries>,
    /// Zeros appended to reach a whole number of blocks.
    pub padded: usize,
}

/// Splits `x` into `n_channels` channels. Each block of `n_channels` samples,
/// optionally weighted by `window`, goes through a unitary DFT; channel `c`
/// is bin `c` across blocks at rate `fs / n_channels`. Channel centres are
/// annotated relative to the input centre, with bins above `n/2` mapped to
/// negative offsets.
pub fn channelize(
    x: &ComplexSeries,
    n_channels: usize,
    window: Option<&[f64]>,
) -> Result<Channelized> {
    if n_channels == 0 {
        return Err(invalid("n_channels must be >= 1"));
    }
    if let Some(w) = window {
        if w.len() != n_channels {
            return Err(shape(format!(
                "window length {} != n_channels {n_channels}",
                w.len()
            )));
        }
    }
    let n_blocks = x.len().div_ceil(n_channels);
    let padded = n_blocks * n_channels - x.len();
    let mut bins = vec![Vec::with_capacity(n_blocks); n_channels];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_channels];
    for b in 0..n_blocks {
        for (i, v) in buf.iter_mut().enumerate() {
            let s = x
                .samples()
                .get(b * n_channels + i)
                .copied()
                .unwrap_or_default();
            *v = match window {
                Some(w) => s * w[i],
                None => s,
            };
        }
        dft::forward_unitary(&mut buf);
        for (c, v) in buf.iter().enumerate() {
            bins[c].push(*v);
        }
    }
    let rate = x.sample_rate() / n_channels as f64;
    let channels = bins
        .into_iter()
        .enumerate()
        .map(|(c, s)| {
            let k = if c > n_channels / 2 {
                c as f64 - n_channels as f64
            } else {
                c as f64
            };
            ComplexSeries::with_center(s, rate, x.center_freq() + k * rate)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Channelized { channels, padded })
}

/// Inverse of the windowless [`channelize`]; padding is kept.
pub fn dechannelize(channels: &[ComplexSeries]) -> Result<ComplexSeries> {
    let first = channels.first().ok_or_else(|| invalid("no channels"))?;
    if channels.iter().any(|c| c.len() != first.len()) {
        return Err(shape("channels have unequal lengths"));
    }
    let n = channels.len();
    let mut out = Vec::with_capacity(n * first.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for b in 0..first.len() {
        for (v, ch) in buf.iter_mut().zip(channels) {
            *v = ch[b];
        }
        dft::inverse_unitary(&mut buf);
        out.extend_from_slice(&buf);
    }
    let k0 = first.center_freq();
    ComplexSeries::with_center(out, first.sample_rate() * n as f64, k0)
}
