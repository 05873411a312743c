//! LTE-shaped interference: resource grids, OFDMA downlink and SC-FDMA
//! uplink synthesis, PSS, and uplink power control.
//!
//! Grid rows are the `12 * n_rb` data subcarriers centred on (and skipping)
//! DC. Row `i` sits on FFT bin `i - 6 n_rb` below DC and `i - 6 n_rb + 1`
//! above it. Columns are OFDM symbols, `symbols_per_slot` per 0.5 ms slot.

use std::io::Write;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{invalid, shape, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signals::{ComplexSeries, PowerDb};

pub const SUBCARRIERS_PER_RB: usize = 12;
pub const SLOTS_PER_FRAME: usize = 20;
/// Allocation owner id used for base-station (downlink) data.
pub const BS_OWNER: u32 = 1;
/// Lowest uplink transmit power the power-control rule will produce.
pub const UPLINK_FLOOR_DBM: f64 = -40.0;
pub const DEFAULT_UE_PMAX_DBM: f64 = 23.0;

const PSS_ROOTS: [u32; 3] = [25, 29, 34];
const PSS_LEN: usize = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpMode {
    Short,
    Long,
}

impl CpMode {
    pub fn symbols_per_slot(self) -> usize {
        match self {
            CpMode::Short => 7,
            CpMode::Long => 6,
        }
    }
}

/// One column of the LTE parameter table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRow {
    pub bandwidth_mhz: f64,
    pub n_fft: usize,
    pub n_subcarrier: usize,
    pub n_guard: usize,
    pub sampling_freq_hz: f64,
    pub n_resource_blocks: usize,
}

pub const BANDWIDTH_TABLE: [BandwidthRow; 6] = [
    BandwidthRow {
        bandwidth_mhz: 1.25,
        n_fft: 128,
        n_subcarrier: 76,
        n_guard: 52,
        sampling_freq_hz: 1.92e6,
        n_resource_blocks: 6,
    },
    BandwidthRow {
        bandwidth_mhz: 2.5,
        n_fft: 256,
        n_subcarrier: 151,
        n_guard: 105,
        sampling_freq_hz: 3.84e6,
        n_resource_blocks: 12,
    },
    BandwidthRow {
        bandwidth_mhz: 5.0,
        n_fft: 512,
        n_subcarrier: 301,
        n_guard: 211,
        sampling_freq_hz: 7.68e6,
        n_resource_blocks: 25,
    },
    BandwidthRow {
        bandwidth_mhz: 10.0,
        n_fft: 1024,
        n_subcarrier: 601,
        n_guard: 423,
        sampling_freq_hz: 15.36e6,
        n_resource_blocks: 50,
    },
    BandwidthRow {
        bandwidth_mhz: 15.0,
        n_fft: 1536,
        n_subcarrier: 901,
        n_guard: 635,
        sampling_freq_hz: 23.04e6,
        n_resource_blocks: 75,
    },
    BandwidthRow {
        bandwidth_mhz: 20.0,
        n_fft: 2048,
        n_subcarrier: 1201,
        n_guard: 847,
        sampling_freq_hz: 30.72e6,
        n_resource_blocks: 100,
    },
];

pub fn bandwidth_row(bandwidth_mhz: f64) -> Result<&'static BandwidthRow> {
    BANDWIDTH_TABLE
        .iter()
        .find(|r| (r.bandwidth_mhz - bandwidth_mhz).abs() < 1e-9)
        .ok_or_else(|| {
            invalid(format!(
                "bandwidth_mhz: {bandwidth_mhz} is not one of 1.25, 2.5, 5, 10, 15, 20"
            ))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LteConfig {
    pub bandwidth_mhz: f64,
    pub n_fft: usize,
    /// Occupied subcarriers including DC.
    pub n_subcarrier: usize,
    pub n_guard: usize,
    pub sampling_freq_hz: f64,
    pub n_resource_blocks: usize,
    pub symbols_per_slot: usize,
    pub cp_mode: CpMode,
}

impl LteConfig {
    /// Table row for `bandwidth_mhz` with the given cyclic-prefix mode.
    pub fn new(bandwidth_mhz: f64, cp_mode: CpMode) -> Result<Self> {
        let row = bandwidth_row(bandwidth_mhz)?;
        Ok(Self {
            bandwidth_mhz: row.bandwidth_mhz,
            n_fft: row.n_fft,
            n_subcarrier: row.n_subcarrier,
            n_guard: row.n_guard,
            sampling_freq_hz: row.sampling_freq_hz,
            n_resource_blocks: row.n_resource_blocks,
            symbols_per_slot: cp_mode.symbols_per_slot(),
            cp_mode,
        })
    }

    /// Checks every field against the table row for `bandwidth_mhz`.
    /// Errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let row = bandwidth_row(self.bandwidth_mhz)?;
        let check = |name: &str, got: usize, want: usize| {
            if got == want {
                Ok(())
            } else {
                Err(invalid(format!(
                    "{name}: expected {want} for {} MHz, got {got}",
                    row.bandwidth_mhz
                )))
            }
        };
        check("n_fft", self.n_fft, row.n_fft)?;
        check("n_subcarrier", self.n_subcarrier, row.n_subcarrier)?;
        check("n_guard", self.n_guard, row.n_guard)?;
        check(
            "n_resource_blocks",
            self.n_resource_blocks,
            row.n_resource_blocks,
        )?;
        check(
            "symbols_per_slot",
            self.symbols_per_slot,
            self.cp_mode.symbols_per_slot(),
        )?;
        if (self.sampling_freq_hz - row.sampling_freq_hz).abs() > 1e-6 {
            return Err(invalid(format!(
                "sampling_freq_hz: expected {} for {} MHz, got {}",
                row.sampling_freq_hz, row.bandwidth_mhz, self.sampling_freq_hz
            )));
        }
        if self.n_subcarrier + self.n_guard != self.n_fft {
            return Err(invalid(
                "n_subcarrier: occupied plus guard subcarriers must fill n_fft",
            ));
        }
        if self.n_data_subcarriers() >= self.n_subcarrier {
            return Err(invalid(
                "n_resource_blocks: resource blocks exceed the occupied band",
            ));
        }
        Ok(())
    }

    /// Subcarriers covered by resource blocks (DC excluded).
    pub fn n_data_subcarriers(&self) -> usize {
        self.n_resource_blocks * SUBCARRIERS_PER_RB
    }

    pub fn symbols_per_frame(&self) -> usize {
        self.symbols_per_slot * SLOTS_PER_FRAME
    }

    /// Cyclic prefix length of symbol `sym_in_slot`.
    pub fn cp_len(&self, sym_in_slot: usize) -> usize {
        match self.cp_mode {
            CpMode::Short if sym_in_slot == 0 => 160 * self.n_fft / 2048,
            CpMode::Short => 144 * self.n_fft / 2048,
            CpMode::Long => 512 * self.n_fft / 2048,
        }
    }

    pub fn samples_per_slot(&self) -> usize {
        (0..self.symbols_per_slot)
            .map(|s| self.n_fft + self.cp_len(s))
            .sum()
    }

    pub fn samples_per_frame(&self) -> usize {
        self.samples_per_slot() * SLOTS_PER_FRAME
    }

    /// FFT bin (in `0..n_fft`) carrying grid row `row`.
    pub fn row_to_bin(&self, row: usize) -> usize {
        let half = (self.n_data_subcarriers() / 2) as isize;
        let mut k = row as isize - half;
        if k >= 0 {
            k += 1;
        }
        k.rem_euclid(self.n_fft as isize) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }
}

/// Gray-maps a bit string (one bit per byte, 0 or 1) onto unit-average-energy
/// constellation points using the 3GPP tables:
///
/// * QPSK: `((1 - 2b0) + j(1 - 2b1)) / sqrt(2)`
/// * 16-QAM: `I = (1 - 2b0)(2 - (1 - 2b2)) / sqrt(10)`, Q likewise from b1, b3
/// * 64-QAM: `I = (1 - 2b0)(4 - (1 - 2b2)(2 - (1 - 2b4))) / sqrt(42)`,
///   Q likewise from b1, b3, b5
pub fn modulate(bits: &[u8], scheme: Modulation) -> Result<Vec<Complex64>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(invalid(format!(
            "{} bits is not a multiple of {k} bits per symbol",
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(invalid(format!("bit values must be 0 or 1, got {b}")));
    }
    let s = |b: u8| 1.0 - 2.0 * b as f64;
    Ok(bits
        .chunks_exact(k)
        .map(|b| match scheme {
            Modulation::Qpsk => Complex64::new(s(b[0]), s(b[1])) / 2f64.sqrt(),
            Modulation::Qam16 => {
                Complex64::new(s(b[0]) * (2.0 - s(b[2])), s(b[1]) * (2.0 - s(b[3]))) / 10f64.sqrt()
            }
            Modulation::Qam64 => {
                Complex64::new(
                    s(b[0]) * (4.0 - s(b[2]) * (2.0 - s(b[4]))),
                    s(b[1]) * (4.0 - s(b[3]) * (2.0 - s(b[5]))),
                ) / 42f64.sqrt()
            }
        })
        .collect())
}

fn random_symbols(n: usize, scheme: Modulation, rng: &mut impl Rng) -> Vec<Complex64> {
    let bits: Vec<u8> = (0..n * scheme.bits_per_symbol())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    modulate(&bits, scheme).expect("bit count is a whole number of symbols")
}

/// Length-63 Zadoff-Chu sequence with the DC element punctured.
pub fn pss_sequence(root: u32) -> Result<Vec<Complex64>> {
    if !PSS_ROOTS.contains(&root) {
        return Err(invalid(format!(
            "PSS root must be 25, 29 or 34, got {root}"
        )));
    }
    let u = root as f64;
    let pi = std::f64::consts::PI;
    Ok((0..PSS_LEN)
        .map(|n| {
            let nf = n as f64;
            let phase = if n < 31 {
                -pi * u * nf * (nf + 1.0) / 63.0
            } else {
                -pi * u * (nf + 1.0) * (nf + 2.0) / 63.0
            };
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// Time-frequency grid of modulated symbols.
///
/// Cells are stored symbol-major: `cells[symbol * n_subcarriers + row]`.
/// Synchronization REs (PSS and the slot marker) are written on top of the
/// data allocation, so an empty RB may still carry sync symbols unless the
/// grid was built with `sync = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    cells: Vec<Complex64>,
    n_subcarriers: usize,
    n_symbols: usize,
    symbols_per_slot: usize,
    n_rb: usize,
    /// Owner per `(slot, rb)`, index `slot * n_rb + rb`; 0 means empty.
    allocation: Vec<u32>,
    occupancy_fraction: f64,
}

impl ResourceGrid {
    /// Empty grid covering `n_frames` frames of `cfg`.
    pub fn empty(cfg: &LteConfig, n_frames: usize) -> Result<Self> {
        cfg.validate()?;
        if n_frames == 0 {
            return Err(invalid("n_frames must be >= 1"));
        }
        let n_symbols = n_frames * cfg.symbols_per_frame();
        let n_subcarriers = cfg.n_data_subcarriers();
        Ok(Self {
            cells: vec![Complex64::new(0.0, 0.0); n_symbols * n_subcarriers],
            n_subcarriers,
            n_symbols,
            symbols_per_slot: cfg.symbols_per_slot,
            n_rb: cfg.n_resource_blocks,
            allocation: vec![0; n_frames * SLOTS_PER_FRAME * cfg.n_resource_blocks],
            occupancy_fraction: 0.0,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_resource_blocks(&self) -> usize {
        self.n_rb
    }

    pub fn n_slots(&self) -> usize {
        self.n_symbols / self.symbols_per_slot
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    pub fn get(&self, row: usize, symbol: usize) -> Complex64 {
        self.cells[symbol * self.n_subcarriers + row]
    }

    pub fn set(&mut self, row: usize, symbol: usize, value: Complex64) {
        self.cells[symbol * self.n_subcarriers + row] = value;
    }

    pub fn symbol(&self, symbol: usize) -> &[Complex64] {
        &self.cells[symbol * self.n_subcarriers..(symbol + 1) * self.n_subcarriers]
    }

    pub fn owner(&self, slot: usize, rb: usize) -> u32 {
        self.allocation[slot * self.n_rb + rb]
    }

    /// Owner of the resource block containing `(row, symbol)`.
    pub fn owner_of(&self, row: usize, symbol: usize) -> u32 {
        self.owner(symbol / self.symbols_per_slot, row / SUBCARRIERS_PER_RB)
    }

    pub fn allocation_map(&self) -> &[u32] {
        &self.allocation
    }

    /// Fraction of `(slot, rb)` entries with an owner.
    pub fn occupancy_fraction(&self) -> f64 {
        self.occupancy_fraction
    }

    pub fn energy(&self) -> f64 {
        self.cells.iter().map(|c| c.norm_sqr()).sum()
    }

    fn recompute_occupancy(&mut self) {
        let owned = self.allocation.iter().filter(|&&o| o != 0).count();
        self.occupancy_fraction = owned as f64 / self.allocation.len() as f64;
    }

    /// Marks `rb` in `slot` as owned by `owner` and fills it with random
    /// symbols.
    fn fill_rb(
        &mut self,
        slot: usize,
        rb: usize,
        owner: u32,
        scheme: Modulation,
        rng: &mut impl Rng,
    ) {
        self.allocation[slot * self.n_rb + rb] = owner;
        let syms = random_symbols(SUBCARRIERS_PER_RB * self.symbols_per_slot, scheme, rng);
        let mut it = syms.into_iter();
        for s in 0..self.symbols_per_slot {
            let symbol = slot * self.symbols_per_slot + s;
            for r in 0..SUBCARRIERS_PER_RB {
                self.set(rb * SUBCARRIERS_PER_RB + r, symbol, it.next().unwrap());
            }
        }
    }

    fn write_sync(&mut self, symbol: usize, root: u32) {
        let seq = pss_sequence(root).expect("fixed roots are valid");
        let first = self.n_subcarriers / 2 - PSS_LEN / 2;
        for (n, v) in seq.into_iter().enumerate() {
            self.set(first + n, symbol, v);
        }
    }
}

/// Builds `n_frames` frames with `round(occupancy * n_rb)` RBs owned per
/// frame, chosen uniformly at random per frame. When `sync` is set, the PSS
/// (root 25) occupies the central 62 subcarriers of the last symbol of slots
/// 0 and 10, and a marker using root 29 fills the symbol before it.
pub fn build_grid(
    cfg: &LteConfig,
    occupancy: f64,
    scheme: Modulation,
    n_frames: usize,
    seed: u64,
    sync: bool,
) -> Result<ResourceGrid> {
    if !(0.0..=1.0).contains(&occupancy) {
        return Err(invalid(format!(
            "occupancy must lie in [0, 1], got {occupancy}"
        )));
    }
    let mut grid = ResourceGrid::empty(cfg, n_frames)?;
    let n_rb = cfg.n_resource_blocks;
    let n_occ = (occupancy * n_rb as f64).round() as usize;
    for frame in 0..n_frames {
        let mut rng = rng_from_seed(derive_seed(seed, frame as u64));
        let chosen = index::sample(&mut rng, n_rb, n_occ).into_vec();
        for slot in frame * SLOTS_PER_FRAME..(frame + 1) * SLOTS_PER_FRAME {
            for &rb in &chosen {
                grid.fill_rb(slot, rb, BS_OWNER, scheme, &mut rng);
            }
        }
        if sync {
            for slot in [frame * SLOTS_PER_FRAME, frame * SLOTS_PER_FRAME + 10] {
                let last = (slot + 1) * cfg.symbols_per_slot - 1;
                grid.write_sync(last, PSS_ROOTS[0]);
                grid.write_sync(last - 1, PSS_ROOTS[1]);
            }
        }
    }
    grid.recompute_occupancy();
    Ok(grid)
}

fn check_grid(grid: &ResourceGrid, cfg: &LteConfig) -> Result<()> {
    cfg.validate()?;
    if grid.n_subcarriers != cfg.n_data_subcarriers()
        || grid.symbols_per_slot != cfg.symbols_per_slot
    {
        return Err(shape(format!(
            "grid has {} subcarriers x {} symbols/slot, config expects {} x {}",
            grid.n_subcarriers,
            grid.symbols_per_slot,
            cfg.n_data_subcarriers(),
            cfg.symbols_per_slot
        )));
    }
    Ok(())
}

fn synthesize(grid: &ResourceGrid, cfg: &LteConfig, with_cp: bool) -> Result<ComplexSeries> {
    check_grid(grid, cfg)?;
    let n_fft = cfg.n_fft;
    let bins: Vec<usize> = (0..grid.n_subcarriers).map(|r| cfg.row_to_bin(r)).collect();
    let mut out = Vec::with_capacity(grid.n_symbols * (n_fft + cfg.cp_len(1)) + n_fft);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for sym in 0..grid.n_symbols {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (row, &v) in grid.symbol(sym).iter().enumerate() {
            buf[bins[row]] = v;
        }
        dft::inverse_unitary(&mut buf);
        if with_cp {
            let cp = cfg.cp_len(sym % cfg.symbols_per_slot);
            out.extend_from_slice(&buf[n_fft - cp..]);
        }
        out.extend_from_slice(&buf);
    }
    ComplexSeries::new(out, cfg.sampling_freq_hz)
}

/// OFDMA synthesis: per-symbol unitary inverse DFT with guards zeroed and
/// the cyclic prefix prepended. The output rate is the configured sampling
/// frequency.
pub fn ofdma_waveform(grid: &ResourceGrid, cfg: &LteConfig) -> Result<ComplexSeries> {
    synthesize(grid, cfg, true)
}

/// As [`ofdma_waveform`] but without cyclic prefixes.
pub fn ofdma_waveform_without_cp(grid: &ResourceGrid, cfg: &LteConfig) -> Result<ComplexSeries> {
    synthesize(grid, cfg, false)
}

/// Inverts [`ofdma_waveform`]: strips CPs, applies the forward unitary DFT and
/// demaps. Returns cells in the grid's symbol-major layout.
pub fn ofdma_demodulate(
    x: &ComplexSeries,
    cfg: &LteConfig,
    n_symbols: usize,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let n_fft = cfg.n_fft;
    let needed: usize = (0..n_symbols)
        .map(|s| n_fft + cfg.cp_len(s % cfg.symbols_per_slot))
        .sum();
    if x.len() < needed {
        return Err(shape(format!(
            "need {needed} samples for {n_symbols} symbols, got {}",
            x.len()
        )));
    }
    let n_sc = cfg.n_data_subcarriers();
    let bins: Vec<usize> = (0..n_sc).map(|r| cfg.row_to_bin(r)).collect();
    let mut cells = Vec::with_capacity(n_symbols * n_sc);
    let mut pos = 0;
    for s in 0..n_symbols {
        pos += cfg.cp_len(s % cfg.symbols_per_slot);
        let mut buf = x.samples()[pos..pos + n_fft].to_vec();
        pos += n_fft;
        dft::forward_unitary(&mut buf);
        cells.extend(bins.iter().map(|&b| buf[b]));
    }
    Ok(cells)
}

/// Contiguous block of grid rows assigned to one uplink user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeAllocation {
    pub first_row: usize,
    pub n_rows: usize,
}

/// SC-FDMA synthesis. For each UE and symbol the UE's `m` grid symbols are
/// precoded with a unitary size-`m` DFT and mapped back onto its rows; the
/// shared inverse DFT and CP then follow as in OFDMA. Rows outside every
/// allocation are not transmitted.
pub fn scfdma_waveform(
    grid: &ResourceGrid,
    cfg: &LteConfig,
    ue_alloc: &[UeAllocation],
) -> Result<ComplexSeries> {
    check_grid(grid, cfg)?;
    let mut used = vec![false; grid.n_subcarriers];
    for a in ue_alloc {
        if a.n_rows == 0 || a.first_row + a.n_rows > grid.n_subcarriers {
            return Err(invalid(format!(
                "allocation rows [{}, {}) outside the {} data subcarriers",
                a.first_row,
                a.first_row + a.n_rows,
                grid.n_subcarriers
            )));
        }
        if a.n_rows >= cfg.n_fft {
            return Err(invalid("allocation must be narrower than n_fft"));
        }
        for u in &mut used[a.first_row..a.first_row + a.n_rows] {
            if *u {
                return Err(invalid(format!(
                    "allocation starting at row {} overlaps another UE",
                    a.first_row
                )));
            }
            *u = true;
        }
    }
    let mut pre = grid.clone();
    pre.cells
        .iter_mut()
        .for_each(|c| *c = Complex64::new(0.0, 0.0));
    for sym in 0..grid.n_symbols {
        for a in ue_alloc {
            let mut block: Vec<Complex64> = (a.first_row..a.first_row + a.n_rows)
                .map(|r| grid.get(r, sym))
                .collect();
            dft::forward_unitary(&mut block);
            for (i, v) in block.into_iter().enumerate() {
                pre.set(a.first_row + i, sym, v);
            }
        }
    }
    synthesize(&pre, cfg, true)
}

/// Position of one uplink user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeGeometry {
    /// Distance from the base station in meters.
    pub distance_m: f64,
    #[serde(default = "default_pmax")]
    pub p_max_dbm: f64,
}

fn default_pmax() -> f64 {
    DEFAULT_UE_PMAX_DBM
}

impl UeGeometry {
    pub fn new(distance_m: f64) -> Self {
        Self {
            distance_m,
            p_max_dbm: DEFAULT_UE_PMAX_DBM,
        }
    }
}

/// Inverse-square power control `P_max (d / d_max)^2`, floored at -40 dBm.
pub fn uplink_power_dbm(ue: &UeGeometry, d_max: f64) -> Result<PowerDb> {
    if !(d_max > 0.0) {
        return Err(invalid(format!(
            "cell radius must be positive, got {d_max}"
        )));
    }
    if !(ue.distance_m >= 0.0 && ue.distance_m <= d_max) {
        return Err(invalid(format!(
            "UE distance {} m outside cell radius {d_max} m",
            ue.distance_m
        )));
    }
    if ue.distance_m == 0.0 {
        return Ok(PowerDb(UPLINK_FLOOR_DBM));
    }
    let p = ue.p_max_dbm + 20.0 * (ue.distance_m / d_max).log10();
    Ok(PowerDb(p.max(UPLINK_FLOOR_DBM)))
}

/// Debug dump with columns `subcarrier,symbol,re,im,owner`.
pub fn write_grid_csv<W: Write>(grid: &ResourceGrid, mut w: W) -> Result<()> {
    writeln!(w, "subcarrier,symbol,re,im,owner")?;
    for sym in 0..grid.n_symbols {
        for row in 0..grid.n_subcarriers {
            let v = grid.get(row, sym);
            writeln!(
                w,
                "{row},{sym},{},{},{}",
                v.re,
                v.im,
                grid.owner_of(row, sym)
            )?;
        }
    }
    Ok(())
}
