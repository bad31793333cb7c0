//! `wva-probe`: command-line runner for weak-value-amplified spectroscopy
//! simulations. Each subcommand writes CSV tables, a flat `meta.json` that
//! fully records the resolved configuration (a run can be replayed with
//! `--config meta.json`), and optionally a quick-look SVG.
//!
//! All energies are in units of the linewidth and all times in units of
//! the radiative lifetime.

mod commands;
mod config;
mod output;
mod svg;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Mixing, RangeSpec, RawOptions};

#[derive(Debug)]
pub enum AppError {
    /// Invalid flags, ranges, or config file. Exit code 2.
    Config(String),
    /// Numerical failure during the computation. Exit code 3.
    Numeric(wva_core::Error),
    /// Filesystem failure. Exit code 4.
    Io(std::io::Error),
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    /// Domain validation of user-provided parameters is a configuration
    /// error, not a numerical one.
    pub fn from_config_domain(err: wva_core::Error) -> Self {
        AppError::Config(err.to_string())
    }

    pub fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numeric(_) => 3,
            AppError::Io(_) => 4,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            AppError::Numeric(err) => write!(f, "numerical failure: {err}"),
            AppError::Io(err) => write!(f, "i/o failure: {err}"),
        }
    }
}

impl From<wva_core::Error> for AppError {
    fn from(err: wva_core::Error) -> Self {
        AppError::Numeric(err)
    }
}

#[derive(Parser)]
#[command(
    name = "wva-probe",
    version,
    about = "Weak-value-amplified spectroscopy simulations: post-selected spectra, probe \
             shifts, dephasing, and correlated-noise SNR"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Post-selected spectra and probe shifts versus the post-selection parameter
    Fig1c(CommonArgs),
    /// Probe-shift map versus post-selection parameter and splitting
    Fig2(CommonArgs),
    /// SNR versus pump rate under slow correlated noise, with and without post-selection
    Fig3(CommonArgs),
    /// Probe shift and optimal amplification versus dephasing width
    Fig4(CommonArgs),
    /// Single-point probe shift (optionally dephased), with closed-form audit
    Shift(CommonArgs),
    /// Single-point SNR, analytic and Monte Carlo
    Snr(CommonArgs),
    /// Free-form shift sweep over post-selection parameter and splitting
    Sweep(CommonArgs),
}

fn parse_range(s: &str) -> Result<RangeSpec, String> {
    s.parse()
}

fn parse_mixing(s: &str) -> Result<Mixing, String> {
    s.parse()
}

#[derive(Args)]
struct CommonArgs {
    /// Central line energy (linewidths)
    #[arg(long, allow_hyphen_values = true)]
    e0: Option<f64>,
    /// Energy splitting between the branches (linewidths)
    #[arg(long)]
    delta_e: Option<f64>,
    /// Linewidth (FWHM); 1 by convention
    #[arg(long)]
    gamma: Option<f64>,
    /// Post-selection parameter; defaults to the computed optimum
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Post-selection axis LO:HI:N (linear)
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    delta_range: Option<RangeSpec>,
    /// Splitting axis LO:HI:N (linear)
    #[arg(long, value_parser = parse_range)]
    delta_e_range: Option<RangeSpec>,
    /// Lorentzian dephasing width (linewidths)
    #[arg(long)]
    gamma_noise: Option<f64>,
    /// Dephasing-width axis LO:HI:N (linear)
    #[arg(long, value_parser = parse_range)]
    gamma_noise_range: Option<RangeSpec>,
    /// Dephasing mixing convention: state-average or probability-weighted
    #[arg(long, value_parser = parse_mixing)]
    mixing: Option<Mixing>,
    /// Per-event noise standard deviation (linewidths)
    #[arg(long)]
    sigma: Option<f64>,
    /// Noise correlation time (lifetimes)
    #[arg(long)]
    tau_c: Option<f64>,
    /// Attempted events per lifetime, capped at 1
    #[arg(long)]
    pump_rate: Option<f64>,
    /// Pump-rate axis LO:HI:N (linear)
    #[arg(long, value_parser = parse_range)]
    rate_range: Option<RangeSpec>,
    /// Run duration (lifetimes)
    #[arg(long)]
    total_time: Option<f64>,
    /// Monte Carlo repetitions (0 disables the Monte Carlo rows)
    #[arg(long)]
    trials: Option<u32>,
    /// Master seed for all random streams
    #[arg(long)]
    seed: Option<u64>,
    /// Spectrum grid points (odd)
    #[arg(long)]
    grid_points: Option<usize>,
    /// Spectrum grid half-width (linewidths)
    #[arg(long)]
    grid_half_width: Option<f64>,
    /// Re-optimize the post-selection per pump rate in the SNR sweep
    #[arg(long)]
    reoptimize_delta: bool,
    /// Recompute closed forms by direct quadrature and record both in meta.json
    #[arg(long)]
    audit: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit a quick-look SVG next to the CSV data
    #[arg(long)]
    svg: bool,
    /// JSON config file (flags take precedence); a previous run's meta.json works
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn raw(&self) -> RawOptions {
        RawOptions {
            e0: self.e0,
            delta_e: self.delta_e,
            gamma: self.gamma,
            delta: self.delta,
            delta_range: self.delta_range,
            delta_e_range: self.delta_e_range,
            gamma_noise: self.gamma_noise,
            gamma_noise_range: self.gamma_noise_range,
            mixing: self.mixing,
            sigma: self.sigma,
            tau_c: self.tau_c,
            pump_rate: self.pump_rate,
            total_time: self.total_time,
            rate_range: self.rate_range,
            trials: self.trials,
            seed: self.seed,
            grid_points: self.grid_points,
            grid_half_width: self.grid_half_width,
            reoptimize_delta: self.reoptimize_delta,
            audit: self.audit,
            out: self.out.clone(),
            svg: self.svg,
            config: self.config.clone(),
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.command {
        Cmd::Fig1c(args) => commands::run_fig1c(&config::resolve("fig1c", &args.raw())?),
        Cmd::Fig2(args) => commands::run_fig2(&config::resolve("fig2", &args.raw())?),
        Cmd::Fig3(args) => commands::run_fig3(&config::resolve("fig3", &args.raw())?),
        Cmd::Fig4(args) => commands::run_fig4(&config::resolve("fig4", &args.raw())?),
        Cmd::Shift(args) => commands::run_shift(&config::resolve("shift", &args.raw())?),
        Cmd::Snr(args) => commands::run_snr(&config::resolve("snr", &args.raw())?),
        Cmd::Sweep(args) => commands::run_sweep(&config::resolve("sweep", &args.raw())?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
