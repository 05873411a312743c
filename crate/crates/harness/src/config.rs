//! Scenario configuration: a TOML tree describing the interferer, the
//! propagation, the telescope, the KLT parameters and the sweep.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rfi_core::cancel::Route;
use rfi_core::channel::{ChannelScenario, LinkBudget, ScenarioKind, Tap};
use rfi_core::channelizer::ChannelPlan;
use rfi_core::lte::{CpMode, LteConfig, Modulation, UeGeometry};

use crate::error::{HarnessError, Result};

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    Downlink,
    Uplink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Bs,
    Telescope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Inr,
    Occupancy,
    SyncError,
    WindowLength,
    UeDistance,
    Scenario,
}

impl Axis {
    /// Stable id mixed into trial seeds. Seeds do not depend on the grid
    /// value, so every grid point sees the same random draws.
    pub fn id(self) -> u64 {
        match self {
            Axis::Inr => 0,
            Axis::Occupancy => 1,
            Axis::SyncError => 2,
            Axis::WindowLength => 3,
            Axis::UeDistance => 4,
            Axis::Scenario => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    pub distance_m: f64,
    #[serde(default = "default_pmax")]
    pub p_max_dbm: f64,
    #[serde(default)]
    pub center_freq_offset_hz: f64,
}

fn default_pmax() -> f64 {
    rfi_core::lte::DEFAULT_UE_PMAX_DBM
}

impl UeConfig {
    pub fn geometry(&self) -> UeGeometry {
        UeGeometry {
            distance_m: self.distance_m,
            p_max_dbm: self.p_max_dbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LteSection {
    pub bandwidth_mhz: f64,
    pub cp_mode: CpMode,
    // Table fields default to the row for `bandwidth_mhz`; when given they
    // are checked against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fft: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_subcarrier: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_guard: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_freq_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_resource_blocks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols_per_slot: Option<usize>,
    pub occupancy: f64,
    pub modulation: Modulation,
    pub link_direction: LinkDirection,
    pub downlink_power_dbm: f64,
    pub sync: bool,
    #[serde(default)]
    pub ues: Vec<UeConfig>,
}

impl LteSection {
    pub fn lte_config(&self) -> Result<LteConfig> {
        let mut c = LteConfig::new(self.bandwidth_mhz, self.cp_mode)
            .map_err(|e| config_err(format!("lte.{e}")))?;
        if let Some(v) = self.n_fft {
            c.n_fft = v;
        }
        if let Some(v) = self.n_subcarrier {
            c.n_subcarrier = v;
        }
        if let Some(v) = self.n_guard {
            c.n_guard = v;
        }
        if let Some(v) = self.sampling_freq_hz {
            c.sampling_freq_hz = v;
        }
        if let Some(v) = self.n_resource_blocks {
            c.n_resource_blocks = v;
        }
        if let Some(v) = self.symbols_per_slot {
            c.symbols_per_slot = v;
        }
        c.validate()
            .map_err(|e| config_err(format!("lte.{}", strip_kind(&e.to_string()))))?;
        Ok(c)
    }
}

fn strip_kind(msg: &str) -> &str {
    msg.strip_prefix("invalid argument: ").unwrap_or(msg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub scenario: ScenarioKind,
    /// Replaces the preset profile; delays are in analysis-rate samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<Tap>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_radius_m: Option<f64>,
    #[serde(default)]
    pub budget: LinkBudget,
}

impl ChannelSection {
    pub fn scenario_at(&self, kind: ScenarioKind, sample_rate: f64) -> Result<ChannelScenario> {
        let mut s = ChannelScenario::preset(kind, sample_rate)
            .map_err(|e| config_err(format!("channel.{e}")))?;
        if let Some(t) = &self.taps {
            s.taps = t.clone();
        }
        if let Some(r) = self.cell_radius_m {
            s.cell_radius_m = r;
        }
        s.validate()
            .map_err(|e| config_err(format!("channel.{}", strip_kind(&e.to_string()))))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KltSection {
    pub window_length: usize,
    pub truncation_threshold: f64,
    pub truncate_phi_t: bool,
    pub route: Route,
    /// Pass `Phi_R` through the 32-bit exchange format before use.
    pub exchange_f32: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelescopeSection {
    /// Samples per trial at the analysis rate.
    pub n_samples: usize,
    /// Interference-free noise reference level.
    pub noise_power_dbm: f64,
    /// Fixes the INR at the telescope; without it the link budget decides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inr_db: Option<f64>,
    /// Sky power relative to the system noise.
    pub astro_power_db: f64,
    /// Draw sky and noise separately (otherwise one process with the
    /// combined variance).
    pub separate_astro: bool,
    pub characterization_site: Site,
    /// Integer band-limited interpolation from the LTE rate to the analysis
    /// rate.
    pub rfi_upsample: usize,
    pub sync_error_samples: usize,
    /// Base-station receiver noise used for uplink characterization.
    pub bs_noise_power_dbm: f64,
    #[serde(default)]
    pub fine_channel_plan: ChannelPlan,
    /// Filterbank channels formed before cancellation.
    pub n_channels: usize,
    /// Channel processed.
    pub channel_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Axis,
    pub grid: Vec<f64>,
    #[serde(default = "default_bins")]
    pub distance_bins: usize,
}

fn default_bins() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeSection {
    /// Seconds of data each shared eigenspace covers.
    pub duration_s: f64,
    pub bits_per_entry: u32,
    /// Eigenspace size to price; measured from one characterization when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_estimate: Option<usize>,
    /// Interference bandwidth; defaults to the LTE channel bandwidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rfi_bw_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub base_seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub lte: LteSection,
    pub channel: ChannelSection,
    pub klt: KltSection,
    pub telescope: TelescopeSection,
    pub sweep: SweepSection,
    pub exchange: ExchangeSection,
}

impl ScenarioConfig {
    /// Desk-scale preset: 1.25 MHz downlink at 70% occupancy, 5 dB INR,
    /// AWGN, `N = 4000`, `L = 100`, 20 trials.
    pub fn desk() -> Self {
        Self {
            base_seed: 2024,
            trials: 20,
            output_path: None,
            lte: LteSection {
                bandwidth_mhz: 1.25,
                cp_mode: CpMode::Short,
                n_fft: None,
                n_subcarrier: None,
                n_guard: None,
                sampling_freq_hz: None,
                n_resource_blocks: None,
                symbols_per_slot: None,
                occupancy: 0.7,
                modulation: Modulation::Qpsk,
                link_direction: LinkDirection::Downlink,
                downlink_power_dbm: 46.0,
                sync: true,
                ues: vec![
                    UeConfig {
                        distance_m: 400.0,
                        p_max_dbm: 23.0,
                        center_freq_offset_hz: 0.0,
                    },
                    UeConfig {
                        distance_m: 900.0,
                        p_max_dbm: 23.0,
                        center_freq_offset_hz: 0.5e6,
                    },
                ],
            },
            channel: ChannelSection {
                scenario: ScenarioKind::Awgn,
                taps: None,
                cell_radius_m: None,
                budget: LinkBudget::default(),
            },
            klt: KltSection {
                window_length: 100,
                truncation_threshold: 0.01,
                truncate_phi_t: false,
                route: Route::Literal,
                exchange_f32: true,
            },
            telescope: TelescopeSection {
                n_samples: 4000,
                // a fully occupied carrier through the default budget lands at 5 dB INR
                noise_power_dbm: -91.46,
                inr_db: Some(5.0),
                astro_power_db: -40.0,
                separate_astro: true,
                characterization_site: Site::Bs,
                rfi_upsample: 6,
                sync_error_samples: 0,
                bs_noise_power_dbm: -108.0,
                fine_channel_plan: ChannelPlan::default(),
                n_channels: 1,
                channel_index: 0,
            },
            sweep: SweepSection {
                axis: Axis::Inr,
                grid: vec![5.0],
                distance_bins: 5,
            },
            exchange: ExchangeSection {
                duration_s: 4.0,
                bits_per_entry: 32,
                m_estimate: None,
                rfi_bw_hz: None,
            },
        }
    }

    /// Full-scale preset: 20 MHz LTE at its native 30.72 MHz rate,
    /// `N = 64000`, `L = 500`, 100 trials. Slow.
    pub fn full_scale() -> Self {
        let mut c = Self::desk();
        c.trials = 100;
        c.lte.bandwidth_mhz = 20.0;
        c.klt.window_length = 500;
        c.klt.route = Route::Structured;
        c.telescope.n_samples = 64_000;
        c.telescope.rfi_upsample = 1;
        c.exchange.m_estimate = Some(300);
        c
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Analysis sample rate at the telescope.
    pub fn analysis_rate(&self) -> Result<f64> {
        Ok(self.lte.lte_config()?.sampling_freq_hz * self.telescope.rfi_upsample as f64)
    }

    /// Checks every section. Errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(config_err("trials: must be >= 1"));
        }
        let lte = self.lte.lte_config()?;
        if !(0.0..=1.0).contains(&self.lte.occupancy) {
            return Err(config_err("lte.occupancy: must lie in [0, 1]"));
        }
        if !self.lte.downlink_power_dbm.is_finite() {
            return Err(config_err("lte.downlink_power_dbm: must be finite"));
        }
        let t = &self.telescope;
        if t.rfi_upsample == 0 {
            return Err(config_err("telescope.rfi_upsample: must be >= 1"));
        }
        let rate = lte.sampling_freq_hz * t.rfi_upsample as f64;
        let scenario = self.channel.scenario_at(self.channel.scenario, rate)?;
        self.channel
            .budget
            .validate()
            .map_err(|e| config_err(format!("channel.budget.{}", strip_kind(&e.to_string()))))?;
        if self.lte.link_direction == LinkDirection::Uplink {
            if self.lte.ues.is_empty() {
                return Err(config_err("lte.ues: uplink needs at least one UE"));
            }
            if self.lte.ues.len() > lte.n_resource_blocks {
                return Err(config_err("lte.ues: more UEs than resource blocks"));
            }
            for (i, ue) in self.lte.ues.iter().enumerate() {
                if !(ue.distance_m > 0.0 && ue.distance_m <= scenario.cell_radius_m) {
                    return Err(config_err(format!(
                        "lte.ues[{i}].distance_m: must lie in (0, {}]",
                        scenario.cell_radius_m
                    )));
                }
            }
            if self.channel.budget.distance_km * 1e3 <= scenario.cell_radius_m {
                return Err(config_err(
                    "channel.budget.distance_km: telescope must lie outside the cell",
                ));
            }
        }
        let k = &self.klt;
        if !(k.truncation_threshold > 0.0 && k.truncation_threshold <= 1.0) {
            return Err(config_err("klt.truncation_threshold: must lie in (0, 1]"));
        }
        if t.n_channels == 0 {
            return Err(config_err("telescope.n_channels: must be >= 1"));
        }
        if t.channel_index >= t.n_channels {
            return Err(config_err(
                "telescope.channel_index: must be below n_channels",
            ));
        }
        if t.sync_error_samples >= t.n_samples {
            return Err(config_err(
                "telescope.sync_error_samples: must be below n_samples",
            ));
        }
        if !t.inr_db.is_none_or(f64::is_finite) || !t.astro_power_db.is_finite() {
            return Err(config_err("telescope: power levels must be finite"));
        }
        t.fine_channel_plan.validate().map_err(|e| {
            config_err(format!(
                "telescope.fine_channel_plan.{}",
                strip_kind(&e.to_string())
            ))
        })?;
        let per_channel = t.n_samples / t.n_channels;
        if per_channel <= 2 * k.window_length || k.window_length < 2 {
            return Err(config_err(format!(
                "klt.window_length: need 2 <= L and 2L < samples per channel ({per_channel})"
            )));
        }
        let s = &self.sweep;
        if s.grid.is_empty() {
            return Err(config_err("sweep.grid: must not be empty"));
        }
        if s.grid.iter().any(|v| !v.is_finite()) {
            return Err(config_err("sweep.grid: values must be finite"));
        }
        if s.distance_bins == 0 {
            return Err(config_err("sweep.distance_bins: must be >= 1"));
        }
        for &v in &s.grid {
            self.with_axis_value(v)?;
        }
        let e = &self.exchange;
        if !(e.duration_s > 0.0) || e.bits_per_entry == 0 {
            return Err(config_err(
                "exchange: duration_s and bits_per_entry must be positive",
            ));
        }
        Ok(())
    }

    /// Copy of the configuration with the sweep axis set to `value`.
    pub fn with_axis_value(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let whole = |name: &str| -> Result<usize> {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(config_err(format!(
                    "sweep.grid: {name} values must be whole numbers, got {value}"
                )));
            }
            Ok(value as usize)
        };
        match self.sweep.axis {
            Axis::Inr => c.telescope.inr_db = Some(value),
            Axis::Occupancy => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(config_err(format!(
                        "sweep.grid: occupancy {value} outside [0, 1]"
                    )));
                }
                c.lte.occupancy = value;
            }
            Axis::SyncError => {
                let k = whole("sync_error")?;
                if k >= c.telescope.n_samples {
                    return Err(config_err(
                        "sweep.grid: sync error exceeds the trial length",
                    ));
                }
                c.telescope.sync_error_samples = k;
            }
            Axis::WindowLength => {
                let l = whole("window_length")?;
                if l < 2 || 2 * l >= c.telescope.n_samples / c.telescope.n_channels {
                    return Err(config_err(format!(
                        "sweep.grid: window length {l} out of range"
                    )));
                }
                c.klt.window_length = l;
            }
            Axis::UeDistance => {
                if self.lte.link_direction != LinkDirection::Uplink {
                    return Err(config_err(
                        "sweep.axis: ue_distance needs lte.link_direction = \"uplink\"",
                    ));
                }
                if !(value > 0.0) {
                    return Err(config_err("sweep.grid: UE distances must be positive"));
                }
                for ue in &mut c.lte.ues {
                    ue.distance_m = value;
                }
            }
            Axis::Scenario => {
                let i = whole("scenario")?;
                c.channel.scenario = ScenarioKind::from_index(i)
                    .ok_or_else(|| config_err(format!("sweep.grid: no scenario with index {i}")))?;
            }
        }
        Ok(c)
    }
}
