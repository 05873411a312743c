//! The `rfi-cancel` command line.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rfi_core::klt::characterize;
use rfi_core::metrics::rate_budget_bps;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::sweep::{run_sweep_threads, write_report, write_rows};
use crate::trial::synthesize;

#[derive(Debug, Parser)]
#[command(
    name = "rfi-cancel",
    version,
    about = "Collaborative eigenspace RFI cancellation sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the configured sweep and write CSV reports.
    Run(RunArgs),
    /// Check a configuration and print it with defaults filled in.
    Validate(ConfigArgs),
    /// Print the data rate needed to share the eigenspace.
    Budget(ConfigArgs),
    /// Run the built-in desk-scale downlink scenario.
    Demo(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Paper,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Scenario file (TOML).
    pub config_file: Option<PathBuf>,
    #[arg(long = "config", conflicts_with = "config_file")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: ConfigArgs,
    /// Trial CSV path; aggregates go next to it. Without it, rows go to
    /// stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to RFI_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ConfigArgs {
    fn load(&self, default: Option<Preset>) -> Result<ScenarioConfig> {
        let path = self.config_file.as_ref().or(self.config.as_ref());
        if path.is_some() && self.preset.is_some() {
            return Err(HarnessError::Config(
                "give either a config file or --preset, not both".into(),
            ));
        }
        match (path, self.preset.or(default)) {
            (Some(p), _) => ScenarioConfig::load(p),
            (None, Some(Preset::Desk)) => Ok(ScenarioConfig::desk()),
            (None, Some(Preset::Paper)) => Ok(ScenarioConfig::full_scale()),
            (None, None) => Err(HarnessError::Config(
                "no config file or --preset given".into(),
            )),
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("RFI_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                HarnessError::Config(format!(
                    "RFI_THREADS: expected a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn run(args: &RunArgs, default: Option<Preset>) -> Result<()> {
    let mut cfg = args.source.load(default)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(o) = &args.output {
        cfg.output_path = Some(o.clone());
    }
    if args.threads == Some(0) {
        return Err(HarnessError::Config("threads: must be >= 1".into()));
    }
    let threads = match args.threads {
        Some(n) => Some(n),
        None => threads_from_env()?,
    };
    cfg.validate()?;
    let report = run_sweep_threads(&cfg, threads)?;
    let failed = report
        .rows
        .iter()
        .filter(|r| r.error_code.is_some())
        .count();
    match &cfg.output_path {
        Some(path) => {
            for p in write_report(&report, path)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => write_rows(&report.rows, std::io::stdout().lock())?,
    }
    for a in &report.aggregates {
        eprintln!(
            "axis={} rqf_mean={:.4e} rqf_median={:.4e} rqf_std={:.2e} n={}",
            a.axis, a.rqf_mean, a.rqf_median, a.rqf_std, a.n
        );
    }
    if failed > 0 {
        eprintln!("{failed} trial(s) failed; see error_code");
    }
    Ok(())
}

fn validate(args: &ConfigArgs) -> Result<()> {
    let cfg = args.load(None)?;
    cfg.validate()?;
    let mut out = std::io::stdout().lock();
    out.write_all(cfg.to_toml_string().as_bytes())?;
    Ok(())
}

/// Rate needed to share the eigenspace of `cfg`, with the `M` used.
pub fn budget_bps(cfg: &ScenarioConfig) -> Result<(f64, usize)> {
    cfg.validate()?;
    let m = match cfg.exchange.m_estimate {
        Some(m) => m,
        None => {
            let sig = synthesize(cfg, cfg.base_seed)?;
            characterize(
                &sig.site,
                cfg.klt.window_length,
                cfg.klt.truncation_threshold,
            )?
            .m()
        }
    };
    let rfi_bw = cfg
        .exchange
        .rfi_bw_hz
        .unwrap_or(cfg.lte.bandwidth_mhz * 1e6);
    let bps = rate_budget_bps(
        cfg.klt.window_length,
        m,
        cfg.exchange.duration_s,
        rfi_bw,
        cfg.telescope.fine_channel_plan.fine_bw_hz,
        cfg.exchange.bits_per_entry,
    )?;
    Ok((bps, m))
}

fn budget(args: &ConfigArgs) -> Result<()> {
    let cfg = args.load(None)?;
    let (bps, m) = budget_bps(&cfg)?;
    println!(
        "L={} M={} duration={} s bits={} -> {:.2} Mbps",
        cfg.klt.window_length,
        m,
        cfg.exchange.duration_s,
        cfg.exchange.bits_per_entry,
        bps / 1e6
    );
    Ok(())
}

/// Runs the command line and returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a, None),
        Command::Validate(a) => validate(a),
        Command::Budget(a) => budget(a),
        Command::Demo(a) => run(a, Some(Preset::Desk)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rfi-cancel: {e}");
            e.exit_code()
        }
    }
}
