//! Propagation from the base station or a UE to the telescope: fixed dB
//! losses, AWGN, and tapped-delay fading profiles.
//!
//! The multipath presets are fixed six-tap exponential profiles, not full
//! geometric channel models. Fading taps are drawn once per 10 ms frame and
//! held constant within it.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lte::{uplink_power_dbm, UeGeometry};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signals::{gen_circular_gaussian, ComplexSeries, PowerDb};

pub const FRAME_SECONDS: f64 = 0.01;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const PRESET_TAPS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Awgn,
    UrbanMicro,
    BadUrbanMicro,
    IndoorToOutdoor,
    UrbanMacro,
    BadUrbanMacro,
    SuburbanMacro,
    RuralMacro,
    FlatRayleigh,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Awgn,
        ScenarioKind::UrbanMicro,
        ScenarioKind::BadUrbanMicro,
        ScenarioKind::IndoorToOutdoor,
        ScenarioKind::UrbanMacro,
        ScenarioKind::BadUrbanMacro,
        ScenarioKind::SuburbanMacro,
        ScenarioKind::RuralMacro,
        ScenarioKind::FlatRayleigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Awgn => "awgn",
            ScenarioKind::UrbanMicro => "urban_micro",
            ScenarioKind::BadUrbanMicro => "bad_urban_micro",
            ScenarioKind::IndoorToOutdoor => "indoor_to_outdoor",
            ScenarioKind::UrbanMacro => "urban_macro",
            ScenarioKind::BadUrbanMacro => "bad_urban_macro",
            ScenarioKind::SuburbanMacro => "suburban_macro",
            ScenarioKind::RuralMacro => "rural_macro",
            ScenarioKind::FlatRayleigh => "flat_rayleigh",
        }
    }

    /// Position in [`ScenarioKind::ALL`], used as a numeric sweep value.
    pub fn index(self) -> usize {
        ScenarioKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        ScenarioKind::ALL.get(i).copied()
    }

    /// RMS-like delay span of the preset profile in seconds.
    pub fn delay_span_s(self) -> f64 {
        match self {
            ScenarioKind::Awgn | ScenarioKind::FlatRayleigh => 0.0,
            ScenarioKind::UrbanMicro => 0.3e-6,
            ScenarioKind::BadUrbanMicro => 0.6e-6,
            ScenarioKind::IndoorToOutdoor => 0.4e-6,
            ScenarioKind::UrbanMacro => 1.0e-6,
            ScenarioKind::BadUrbanMacro => 2.0e-6,
            ScenarioKind::SuburbanMacro => 0.8e-6,
            ScenarioKind::RuralMacro => 0.5e-6,
        }
    }

    pub fn cell_radius_m(self) -> f64 {
        match self {
            ScenarioKind::UrbanMicro
            | ScenarioKind::BadUrbanMicro
            | ScenarioKind::IndoorToOutdoor => 1000.0,
            ScenarioKind::RuralMacro => 10_000.0,
            _ => 5000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay_samples: usize,
    /// Mean linear power of the tap.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    pub kind: ScenarioKind,
    pub taps: Vec<Tap>,
    pub cell_radius_m: f64,
}

impl ChannelScenario {
    /// Preset profile at `sample_rate`. Multipath presets spread six taps
    /// uniformly over the scenario's delay span with power falling as
    /// `exp(-i)`; taps that round to the same sample are merged.
    pub fn preset(kind: ScenarioKind, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(invalid(format!(
                "sample_rate must be positive, got {sample_rate}"
            )));
        }
        let taps = match kind {
            ScenarioKind::Awgn | ScenarioKind::FlatRayleigh => vec![Tap {
                delay_samples: 0,
                power: 1.0,
            }],
            _ => {
                let span = kind.delay_span_s() * sample_rate;
                let mut taps: Vec<Tap> = Vec::with_capacity(PRESET_TAPS);
                for i in 0..PRESET_TAPS {
                    let delay = (span * i as f64 / (PRESET_TAPS - 1) as f64).round() as usize;
                    let power = (-(i as f64)).exp();
                    match taps.last_mut() {
                        Some(t) if t.delay_samples == delay => t.power += power,
                        _ => taps.push(Tap {
                            delay_samples: delay,
                            power,
                        }),
                    }
                }
                let total: f64 = taps.iter().map(|t| t.power).sum();
                taps.iter_mut().for_each(|t| t.power /= total);
                taps
            }
        };
        let s = Self {
            kind,
            taps,
            cell_radius_m: kind.cell_radius_m(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(invalid("taps: at least one tap required"));
        }
        if self.taps[0].delay_samples != 0 {
            return Err(invalid("taps: first tap must have zero delay"));
        }
        if self
            .taps
            .windows(2)
            .any(|w| w[1].delay_samples <= w[0].delay_samples)
        {
            return Err(invalid("taps: delays must be strictly increasing"));
        }
        if self.taps.iter().any(|t| !(t.power >= 0.0)) {
            return Err(invalid("taps: powers must be non-negative"));
        }
        let total: f64 = self.taps.iter().map(|t| t.power).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("taps: powers must sum to 1, got {total}")));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(invalid("cell_radius_m: must be positive"));
        }
        Ok(())
    }

    pub fn max_delay(&self) -> usize {
        self.taps.last().map_or(0, |t| t.delay_samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Use `propagation_loss_db` as given at `distance_km`.
    #[default]
    Fixed,
    /// Free-space path loss at `carrier_hz`.
    Fspl,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkBudget {
    pub propagation_loss_db: f64,
    pub sidelobe_gain_dbi: f64,
    pub distance_km: f64,
    pub mode: LossMode,
    pub carrier_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            propagation_loss_db: 92.46,
            sidelobe_gain_dbi: -40.0,
            distance_km: 20.0,
            mode: LossMode::Fixed,
            carrier_hz: 1.4e9,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.propagation_loss_db >= 0.0) {
            return Err(invalid("propagation_loss_db: must be >= 0"));
        }
        if !self.sidelobe_gain_dbi.is_finite() {
            return Err(invalid("sidelobe_gain_dbi: must be finite"));
        }
        if !(self.distance_km > 0.0) {
            return Err(invalid("distance_km: must be positive"));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(invalid("carrier_hz: must be positive"));
        }
        Ok(())
    }

    /// Path loss at `distance_m`. In fixed mode the configured loss is the
    /// value at `distance_km` and other distances scale as `20 log10(d)`.
    pub fn loss_at_db(&self, distance_m: f64) -> f64 {
        match self.mode {
            LossMode::Fixed => {
                self.propagation_loss_db + 20.0 * (distance_m / (self.distance_km * 1e3)).log10()
            }
            LossMode::Fspl => {
                20.0 * (4.0 * std::f64::consts::PI * distance_m * self.carrier_hz / SPEED_OF_LIGHT)
                    .log10()
            }
        }
    }

    /// Loss over the configured BS-to-telescope distance.
    pub fn loss_db(&self) -> f64 {
        self.loss_at_db(self.distance_km * 1e3)
    }

    /// Net gain into the telescope sidelobe from `distance_m` away.
    pub fn telescope_gain_db(&self, distance_m: f64) -> PowerDb {
        PowerDb(self.sidelobe_gain_dbi - self.loss_at_db(distance_m))
    }
}

/// Scales amplitudes by `10^(g/20)`.
pub fn apply_gain_db(x: &ComplexSeries, g: PowerDb) -> Result<ComplexSeries> {
    if !g.0.is_finite() {
        return Err(invalid(format!("gain must be finite, got {}", g.0)));
    }
    Ok(x.scaled(Complex64::new(g.to_amplitude(), 0.0)))
}

/// Adds circular Gaussian noise of the given power.
pub fn awgn(x: &ComplexSeries, noise_power: f64, seed: u64) -> Result<ComplexSeries> {
    if !(noise_power >= 0.0) {
        return Err(invalid(format!(
            "noise_power must be >= 0, got {noise_power}"
        )));
    }
    if noise_power == 0.0 {
        return Ok(x.clone());
    }
    let n = gen_circular_gaussian(x.len(), noise_power, x.sample_rate(), seed)?;
    x.add(&n)
}

/// Tap gains for one frame, each circular Gaussian with the tap's mean power.
fn draw_taps(scenario: &ChannelScenario, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_from_seed(seed);
    scenario
        .taps
        .iter()
        .map(|t| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * (t.power / 2.0).sqrt()
        })
        .collect()
}

/// Block-fading FIR channel. The tap vector is redrawn every 10 ms frame
/// (frame `f` uses seed stream `f`); output sample `n` uses the taps of the
/// frame it falls in. The awgn scenario is the identity.
pub fn fade(x: &ComplexSeries, scenario: &ChannelScenario, seed: u64) -> Result<ComplexSeries> {
    scenario.validate()?;
    if scenario.kind == ScenarioKind::Awgn {
        return Ok(x.clone());
    }
    if scenario.max_delay() >= x.len() {
        return Err(invalid(format!(
            "tap delay {} exceeds series length {}",
            scenario.max_delay(),
            x.len()
        )));
    }
    let frame_len = ((FRAME_SECONDS * x.sample_rate()).round() as usize).max(1);
    let xs = x.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    for (f, block) in out.chunks_mut(frame_len).enumerate() {
        let h = draw_taps(scenario, derive_seed(seed, f as u64));
        let start = f * frame_len;
        for (i, y) in block.iter_mut().enumerate() {
            let n = start + i;
            for (tap, g) in scenario.taps.iter().zip(&h) {
                if n >= tap.delay_samples {
                    *y += g * xs[n - tap.delay_samples];
                }
            }
        }
    }
    x.with_samples(out)
}

/// Uplink from one UE to its base station and to the telescope.
///
/// The UE sits on the line from the BS towards the telescope, `d_n` from the
/// BS, so the telescope is `R - d_n` away. Both paths share one fading draw,
/// standing in for the in-cell multipath; beyond the cell boundary the path
/// to the telescope is flat. Gains:
///
/// * to BS: `P_ue(d_n) - loss(d_n)`
/// * to telescope: `P_ue(d_n) - loss(R - d_n) + sidelobe`
///
/// where `loss(d)` is [`LinkBudget::loss_at_db`]. Since power control grows
/// as `d_n^2`, the power received at the BS does not depend on `d_n` unless
/// the -40 dBm floor is active.
pub fn composite_uplink_path(
    ue: &UeGeometry,
    scenario: &ChannelScenario,
    budget: &LinkBudget,
    x: &ComplexSeries,
    seed: u64,
) -> Result<(ComplexSeries, ComplexSeries)> {
    budget.validate()?;
    let p_ue = uplink_power_dbm(ue, scenario.cell_radius_m)?;
    if ue.distance_m <= 0.0 {
        return Err(invalid("UE distance must be positive"));
    }
    let range_m = budget.distance_km * 1e3;
    if range_m <= scenario.cell_radius_m {
        return Err(invalid("distance_km: telescope must lie outside the cell"));
    }
    let faded = fade(x, scenario, seed)?;
    let to_bs = apply_gain_db(&faded, PowerDb(p_ue.0 - budget.loss_at_db(ue.distance_m)))?;
    let to_tel = apply_gain_db(
        &faded,
        p_ue + budget.telescope_gain_db(range_m - ue.distance_m),
    )?;
    Ok((to_bs, to_tel))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_noise(n: usize, fs: f64, seed: u64) -> ComplexSeries {
        gen_circular_gaussian(n, 1.0, fs, seed).unwrap()
    }

    #[test]
    fn presets_are_valid() {
        for kind in ScenarioKind::ALL {
            for fs in [1.92e6, 11.52e6, 30.72e6] {
                let s = ChannelScenario::preset(kind, fs).unwrap();
                s.validate().unwrap();
                assert_eq!(ScenarioKind::from_index(kind.index()), Some(kind));
            }
        }
        let bum = ChannelScenario::preset(ScenarioKind::BadUrbanMacro, 30.72e6).unwrap();
        assert_eq!(bum.taps.len(), 6);
        assert_eq!(bum.max_delay(), 61);
        // at low rates short spreads collapse onto fewer taps
        let um = ChannelScenario::preset(ScenarioKind::UrbanMicro, 1.92e6).unwrap();
        assert!(um.taps.len() < 6);
    }

    #[test]
    fn invalid_taps_rejected() {
        let mut s = ChannelScenario::preset(ScenarioKind::UrbanMacro, 30.72e6).unwrap();
        s.taps[1].power += 0.1;
        assert!(s.validate().is_err());
        let mut s = ChannelScenario::preset(ScenarioKind::UrbanMacro, 30.72e6).unwrap();
        s.taps.swap(1, 2);
        assert!(s.validate().is_err());
    }

    #[test]
    fn gain_identities() {
        let x = unit_noise(256, 1.0, 1);
        assert_eq!(apply_gain_db(&x, PowerDb(0.0)).unwrap(), x);
        let back =
            apply_gain_db(&apply_gain_db(&x, PowerDb(-40.0)).unwrap(), PowerDb(40.0)).unwrap();
        for (a, b) in back.samples().iter().zip(x.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let one = ComplexSeries::new(vec![Complex64::new(1.0, 0.0); 16], 1.0).unwrap();
        let p = apply_gain_db(&one, PowerDb(-92.46)).unwrap().power();
        assert!((p / 10f64.powf(-9.246) - 1.0).abs() < 1e-12);
        assert!(apply_gain_db(&x, PowerDb::OFF).is_err());
    }

    #[test]
    fn awgn_behaviour() {
        let x = unit_noise(64, 1.0, 1);
        assert_eq!(awgn(&x, 0.0, 3).unwrap(), x);
        let z = ComplexSeries::zeros(100_000, 1.0).unwrap();
        let y = awgn(&z, 1.0, 3).unwrap();
        assert!((y.power() - 1.0).abs() < 0.03);
        assert_eq!(awgn(&z, 1.0, 3).unwrap(), y);
        assert!(awgn(&z, -1.0, 3).is_err());
    }

    #[test]
    fn awgn_scenario_is_identity() {
        let x = unit_noise(64, 1.0, 1);
        let s = ChannelScenario::preset(ScenarioKind::Awgn, 1.0).unwrap();
        assert_eq!(fade(&x, &s, 5).unwrap(), x);
    }

    #[test]
    fn flat_rayleigh_is_a_scalar() {
        // at 1 kHz all 8 samples sit inside one 10 ms frame
        let x = unit_noise(8, 1e3, 1);
        let s = ChannelScenario::preset(ScenarioKind::FlatRayleigh, 1e3).unwrap();
        let mut gains = 0.0;
        for seed in 0..1000 {
            let y = fade(&x, &s, seed).unwrap();
            let h = y[0] / x[0];
            for i in 0..x.len() {
                assert!((y[i] - h * x[i]).norm() < 1e-12);
            }
            gains += h.norm_sqr();
        }
        assert!(
            (gains / 1000.0 - 1.0).abs() < 0.05,
            "mean |h|^2 {}",
            gains / 1000.0
        );
    }

    #[test]
    fn two_tap_impulse_response() {
        let s = ChannelScenario {
            kind: ScenarioKind::UrbanMicro,
            taps: vec![
                Tap {
                    delay_samples: 0,
                    power: 0.5,
                },
                Tap {
                    delay_samples: 3,
                    power: 0.5,
                },
            ],
            cell_radius_m: 1000.0,
        };
        let mut imp = vec![Complex64::new(0.0, 0.0); 16];
        imp[0] = Complex64::new(1.0, 0.0);
        let x = ComplexSeries::new(imp, 1e3).unwrap();
        let y = fade(&x, &s, 2).unwrap();
        let nz: Vec<usize> = (0..16).filter(|&i| y[i].norm() > 0.0).collect();
        assert_eq!(nz, vec![0, 3]);
    }

    #[test]
    fn fade_rejects_long_delays() {
        let s = ChannelScenario::preset(ScenarioKind::BadUrbanMacro, 30.72e6).unwrap();
        let x = unit_noise(32, 30.72e6, 1);
        assert!(fade(&x, &s, 1).is_err());
    }

    #[test]
    fn fading_redraws_each_frame() {
        let s = ChannelScenario::preset(ScenarioKind::FlatRayleigh, 1e3).unwrap();
        let x = ComplexSeries::new(vec![Complex64::new(1.0, 0.0); 30], 1e3).unwrap();
        let y = fade(&x, &s, 4).unwrap();
        assert_eq!(y[0], y[9]);
        assert_ne!(y[9], y[10]);
        assert_eq!(y[10], y[19]);
    }

    #[test]
    fn fade_conserves_energy_on_average() {
        let s = ChannelScenario::preset(ScenarioKind::UrbanMacro, 11.52e6).unwrap();
        let x = unit_noise(512, 11.52e6, 9);
        let mean: f64 = (0..1000)
            .map(|seed| fade(&x, &s, seed).unwrap().power())
            .sum::<f64>()
            / 1000.0;
        // the first max_delay samples lose part of their tail
        assert!(
            (mean / x.power() - 1.0).abs() < 0.05,
            "ratio {}",
            mean / x.power()
        );
    }

    #[test]
    fn fspl_mode_matches_formula() {
        let b = LinkBudget {
            mode: LossMode::Fspl,
            ..LinkBudget::default()
        };
        assert!((b.loss_db() - 121.4).abs() < 0.2);
        let fixed = LinkBudget::default();
        assert!((fixed.loss_db() - 92.46).abs() < 1e-12);
        assert!((fixed.telescope_gain_db(20e3).0 + 132.46).abs() < 1e-12);
    }

    #[test]
    fn uplink_at_cell_edge() {
        let scen = ChannelScenario::preset(ScenarioKind::Awgn, 1e6).unwrap();
        let budget = LinkBudget::default();
        let x = unit_noise(1000, 1e6, 3);
        let r = scen.cell_radius_m;
        let (_, tel) = composite_uplink_path(&UeGeometry::new(r), &scen, &budget, &x, 1).unwrap();
        let got = 10.0 * (tel.power() / x.power()).log10();
        let in_cell = 20.0 * ((20e3 - r) / 20e3).log10();
        let want = 23.0 - (92.46 + in_cell) - 40.0;
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn uplink_paths_share_fading() {
        let fs = 11.52e6;
        let scen = ChannelScenario::preset(ScenarioKind::FlatRayleigh, fs).unwrap();
        let x = unit_noise(1000, fs, 3);
        let (bs, tel) = composite_uplink_path(
            &UeGeometry::new(2000.0),
            &scen,
            &LinkBudget::default(),
            &x,
            7,
        )
        .unwrap();
        let ratio = tel[5] / bs[5];
        for i in 0..x.len() {
            assert!((tel[i] - ratio * bs[i]).norm() < 1e-9 * tel[i].norm().max(1e-30));
        }
    }

    #[test]
    fn power_control_cancels_bs_path_loss() {
        let scen = ChannelScenario::preset(ScenarioKind::Awgn, 1e6).unwrap();
        let x = unit_noise(1000, 1e6, 3);
        let powers: Vec<f64> = [500.0, 1000.0, 2500.0, 5000.0]
            .iter()
            .map(|&d| {
                let (bs, _) = composite_uplink_path(
                    &UeGeometry::new(d),
                    &scen,
                    &LinkBudget::default(),
                    &x,
                    1,
                )
                .unwrap();
                bs.power()
            })
            .collect();
        for p in &powers {
            assert!((p / powers[0] - 1.0).abs() < 1e-9);
        }
    }
}
