//! One Monte-Carlo trial: synthesize the interference, characterize it at
//! the collaborating site, propagate it to the telescope, cancel, score.

use num_complex::Complex64;
use serde::Serialize;

use rfi_core::cancel::{cancel_with, CancelOptions};
use rfi_core::channel::{apply_gain_db, awgn, composite_uplink_path, fade};
use rfi_core::channelizer::channelize;
use rfi_core::klt::{characterize, read_eigenspace, write_eigenspace, Eigenspace};
use rfi_core::lte::{
    build_grid, ofdma_waveform, scfdma_waveform, LteConfig, UeAllocation, SUBCARRIERS_PER_RB,
};
use rfi_core::metrics::{removal_fraction, rqf};
use rfi_core::rng::derive_seed;
use rfi_core::signals::{
    frequency_shift, gen_circular_gaussian, inr_db, upsample, ComplexSeries, PowerDb,
};

use crate::config::{LinkDirection, ScenarioConfig, Site};
use crate::error::Result;

// Seed streams below one trial seed.
const S_GRID: u64 = 1;
const S_ASTRO: u64 = 2;
const S_NOISE: u64 = 3;
const S_SITE_NOISE: u64 = 4;
const S_FADE: u64 = 5;
const S_OFFSET: u64 = 6;
const S_BS_NOISE: u64 = 7;
const S_UE: u64 = 100;

/// Interpolation ringing from the block upsampler stays within this many
/// LTE-rate samples of the ends of the synthesized record.
const EDGE_GUARD: usize = 64;

/// The signals of one trial at the analysis rate, before channelization.
#[derive(Debug, Clone)]
pub struct TrialSignals {
    /// Interference as it arrives at the telescope.
    pub rfi: ComplexSeries,
    pub astro: ComplexSeries,
    pub noise: ComplexSeries,
    /// What the characterizing site sees.
    pub site: ComplexSeries,
    /// Linear system-noise power at the telescope.
    pub noise_power: f64,
}

impl TrialSignals {
    /// Interference-free telescope signal `x_A + x_N`.
    pub fn reference(&self) -> Result<ComplexSeries> {
        Ok(self.astro.add(&self.noise)?)
    }

    /// Telescope input `x_A + x_N + x_R`.
    pub fn composite(&self) -> Result<ComplexSeries> {
        Ok(self.reference()?.add(&self.rfi)?)
    }
}

/// One row of a sweep report. Failed trials carry NaN metrics and the
/// error code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub axis: f64,
    pub trial: usize,
    pub seed: u64,
    pub rqf: f64,
    pub removal_fraction: f64,
    pub inr_db: f64,
    pub error_code: Option<String>,
    #[serde(skip)]
    pub m_r: usize,
    #[serde(skip)]
    pub m_t: usize,
}

fn dbm_to_mw(dbm: f64) -> f64 {
    PowerDb(dbm).to_linear()
}

/// Interference at the analysis rate, as seen by the BS (`site`, aligned
/// with the trial window) and by the telescope (`tel`, `sync_error`
/// samples earlier), both in sqrt(mW).
struct Interference {
    site: ComplexSeries,
    tel: ComplexSeries,
}

fn frames_needed(cfg: &ScenarioConfig, lte: &LteConfig, extra: usize) -> usize {
    let up = cfg.telescope.rfi_upsample;
    let lte_samples = (cfg.telescope.n_samples + extra).div_ceil(up) + 2 * EDGE_GUARD;
    lte_samples.div_ceil(lte.samples_per_frame()).max(1)
}

/// Start of the telescope segment inside an upsampled record of `total`
/// samples, clear of the interpolation edges.
fn segment_start(total: usize, seg_len: usize, guard: usize, seed: u64) -> Result<usize> {
    let span = total.checked_sub(seg_len + 2 * guard).ok_or_else(|| {
        rfi_core::Error::InvalidArgument("record too short for the trial window".into())
    })?;
    Ok(guard + (derive_seed(seed, S_OFFSET) % (span as u64 + 1)) as usize)
}

fn downlink(cfg: &ScenarioConfig, lte: &LteConfig, seed: u64) -> Result<Interference> {
    let t = &cfg.telescope;
    let rate = lte.sampling_freq_hz * t.rfi_upsample as f64;
    let scenario = cfg.channel.scenario_at(cfg.channel.scenario, rate)?;
    let md = scenario.max_delay();
    let k = t.sync_error_samples;
    let n = t.n_samples;
    let n_frames = frames_needed(cfg, lte, md + k);
    let grid = build_grid(
        lte,
        cfg.lte.occupancy,
        cfg.lte.modulation,
        n_frames,
        derive_seed(seed, S_GRID),
        cfg.lte.sync,
    )?;
    // Scale so that a fully occupied grid radiates the configured power.
    let full = lte.n_data_subcarriers() as f64 / lte.n_fft as f64;
    let amp = (dbm_to_mw(cfg.lte.downlink_power_dbm) / full).sqrt();
    let x = ofdma_waveform(&grid, lte)?.scaled(Complex64::new(amp, 0.0));
    let x = upsample(&x, t.rfi_upsample)?;

    let guard = EDGE_GUARD * t.rfi_upsample;
    let seg_len = n + md + k;
    let start = segment_start(x.len(), seg_len, guard, seed)?;
    let seg = x.window(start, seg_len)?;
    let site = seg.window(md + k, n)?;
    let faded = fade(&seg, &scenario, derive_seed(seed, S_FADE))?;
    let gain = cfg
        .channel
        .budget
        .telescope_gain_db(cfg.channel.budget.distance_km * 1e3);
    let tel = apply_gain_db(&faded.window(md, n)?, gain)?;
    Ok(Interference { site, tel })
}

fn uplink(cfg: &ScenarioConfig, lte: &LteConfig, seed: u64) -> Result<Interference> {
    let t = &cfg.telescope;
    let rate = lte.sampling_freq_hz * t.rfi_upsample as f64;
    let scenario = cfg.channel.scenario_at(cfg.channel.scenario, rate)?;
    let md = scenario.max_delay();
    let k = t.sync_error_samples;
    let n = t.n_samples;
    let n_frames = frames_needed(cfg, lte, md + k);
    let n_ue = cfg.lte.ues.len();
    let n_rb = lte.n_resource_blocks;
    let rb_each =
        ((cfg.lte.occupancy * n_rb as f64 / n_ue as f64).round() as usize).clamp(1, n_rb / n_ue);

    let guard = EDGE_GUARD * t.rfi_upsample;
    let seg_len = n + md + k;
    let mut site = ComplexSeries::zeros(n, rate)?;
    let mut tel = ComplexSeries::zeros(n, rate)?;
    let mut start = None;
    for (i, ue) in cfg.lte.ues.iter().enumerate() {
        let ue_seed = derive_seed(seed, S_UE + i as u64);
        let grid = build_grid(
            lte,
            1.0,
            cfg.lte.modulation,
            n_frames,
            derive_seed(ue_seed, S_GRID),
            false,
        )?;
        let alloc = UeAllocation {
            first_row: i * rb_each * SUBCARRIERS_PER_RB,
            n_rows: rb_each * SUBCARRIERS_PER_RB,
        };
        let x = scfdma_waveform(&grid, lte, &[alloc])?;
        // unit (0 dBm) transmit power; power control is applied by the path
        let x = x.scaled(Complex64::new(1.0 / x.power().sqrt(), 0.0));
        let x = frequency_shift(&upsample(&x, t.rfi_upsample)?, ue.center_freq_offset_hz);
        let s = match start {
            Some(s) => s,
            None => *start.insert(segment_start(x.len(), seg_len, guard, seed)?),
        };
        let seg = x.window(s, seg_len)?;
        let (to_bs, to_tel) = composite_uplink_path(
            &ue.geometry(),
            &scenario,
            &cfg.channel.budget,
            &seg,
            derive_seed(ue_seed, S_FADE),
        )?;
        site = site.add(&to_bs.window(md + k, n)?)?;
        tel = tel.add(&to_tel.window(md, n)?)?;
    }
    let site = awgn(
        &site,
        dbm_to_mw(t.bs_noise_power_dbm),
        derive_seed(seed, S_BS_NOISE),
    )?;
    Ok(Interference { site, tel })
}

/// Generates every signal of one trial. `cfg` must already carry the sweep
/// value.
pub fn synthesize(cfg: &ScenarioConfig, seed: u64) -> Result<TrialSignals> {
    let lte = cfg.lte.lte_config()?;
    let t = &cfg.telescope;
    let n = t.n_samples;
    let rate = lte.sampling_freq_hz * t.rfi_upsample as f64;
    let Interference { site, tel } = match cfg.lte.link_direction {
        LinkDirection::Downlink => downlink(cfg, &lte, seed)?,
        LinkDirection::Uplink => uplink(cfg, &lte, seed)?,
    };

    let noise_power = dbm_to_mw(t.noise_power_dbm);
    let rfi = match t.inr_db {
        Some(inr) => {
            let p = tel.power();
            if p == 0.0 {
                return Err(rfi_core::Error::UndefinedMetric(
                    "telescope interference is silent".into(),
                )
                .into());
            }
            tel.scaled(Complex64::new(
                (noise_power * PowerDb(inr).to_linear() / p).sqrt(),
                0.0,
            ))
        }
        None => tel,
    };
    let astro_power = noise_power * PowerDb(t.astro_power_db).to_linear();
    let (astro, noise) = if t.separate_astro {
        (
            gen_circular_gaussian(n, astro_power, rate, derive_seed(seed, S_ASTRO))?,
            gen_circular_gaussian(n, noise_power, rate, derive_seed(seed, S_NOISE))?,
        )
    } else {
        (
            ComplexSeries::zeros(n, rate)?,
            gen_circular_gaussian(
                n,
                noise_power + astro_power,
                rate,
                derive_seed(seed, S_NOISE),
            )?,
        )
    };
    let site = match t.characterization_site {
        Site::Bs => site,
        // the telescope can only characterize what it receives; it gets its
        // own noise realization, independent of the one it later cleans
        Site::Telescope => rfi.add(&gen_circular_gaussian(
            n,
            noise_power,
            rate,
            derive_seed(seed, S_SITE_NOISE),
        )?)?,
    };
    Ok(TrialSignals {
        rfi,
        astro,
        noise,
        site,
        noise_power,
    })
}

/// Passes an eigenspace through the 32-bit exchange format.
pub fn exchange(es: &Eigenspace) -> Result<Eigenspace> {
    let mut buf = Vec::with_capacity(es.exchange_size_bytes());
    write_eigenspace(es, &mut buf)?;
    Ok(read_eigenspace(buf.as_slice())?)
}

fn pick_channel(x: &ComplexSeries, n_channels: usize, index: usize) -> Result<ComplexSeries> {
    if n_channels == 1 {
        return Ok(x.clone());
    }
    Ok(channelize(x, n_channels, None)?.channels.swap_remove(index))
}

struct Scores {
    rqf: f64,
    removal: f64,
    inr: f64,
    m_r: usize,
    m_t: usize,
}

fn score(cfg: &ScenarioConfig, seed: u64) -> Result<Scores> {
    let sig = synthesize(cfg, seed)?;
    let t = &cfg.telescope;
    let ch = |x: &ComplexSeries| pick_channel(x, t.n_channels, t.channel_index);
    let reference = ch(&sig.reference()?)?;
    let rfi = ch(&sig.rfi)?;
    let composite = reference.add(&rfi)?;
    let site = ch(&sig.site)?;

    let l = cfg.klt.window_length;
    let mut phi_r = characterize(&site, l, cfg.klt.truncation_threshold)?;
    if cfg.klt.exchange_f32 {
        phi_r = exchange(&phi_r)?;
    }
    let opts = CancelOptions {
        truncate_phi_t: cfg.klt.truncate_phi_t,
        threshold: cfg.klt.truncation_threshold,
        route: cfg.klt.route,
    };
    let out = cancel_with(&composite, &phi_r, l, &opts)?;
    Ok(Scores {
        rqf: rqf(&reference, &out.reconstructed)?.value,
        removal: removal_fraction(&rfi, &composite, &out.reconstructed)?.value,
        // channelization is unitary, so per-channel noise power is unchanged
        inr: inr_db(&rfi, sig.noise_power)?.value(),
        m_r: phi_r.m(),
        m_t: out.m_t,
    })
}

/// Runs one trial of `cfg` (already carrying `axis_value`). Failures become
/// rows with NaN metrics and the error code.
pub fn run_trial(cfg: &ScenarioConfig, axis_value: f64, trial: usize, seed: u64) -> TrialRow {
    match score(cfg, seed) {
        Ok(s) => TrialRow {
            axis: axis_value,
            trial,
            seed,
            rqf: s.rqf,
            removal_fraction: s.removal,
            inr_db: s.inr,
            error_code: None,
            m_r: s.m_r,
            m_t: s.m_t,
        },
        Err(e) => TrialRow {
            axis: axis_value,
            trial,
            seed,
            rqf: f64::NAN,
            removal_fraction: f64::NAN,
            inr_db: f64::NAN,
            error_code: Some(match e {
                crate::error::HarnessError::Core(c) => c.code().to_string(),
                crate::error::HarnessError::Config(_) => "config".to_string(),
                _ => "io".to_string(),
            }),
            m_r: 0,
            m_t: 0,
        },
    }
}
