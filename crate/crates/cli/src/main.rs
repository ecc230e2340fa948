//! Command-line front end for the X-duplex relay engines: metric sweeps,
//! figure data, mode-selection tables, and the self-test suite.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration error,
//! 3 i/o error.

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use xduplex_core::bench::{self, FigureKind, SweepConfig};
use xduplex_core::Error;

#[derive(Parser)]
#[command(
    name = "xduplex",
    about = "Outage, SER, and diversity for the X-duplex adaptive relay: \
             seeded Monte Carlo simulation cross-checked against closed forms",
    version
)]
struct Cli {
    /// Threads for the Monte Carlo worker pool (default: all cores).
    /// Results are bit-identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by every metric-producing subcommand; CLI flags override
/// the config file, which overrides the built-in defaults.
#[derive(Args, Debug, Default, Clone)]
struct SweepArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep start, transmit SNR in dB.
    #[arg(long)]
    snr_start: Option<f64>,
    /// Sweep stop, transmit SNR in dB (inclusive).
    #[arg(long)]
    snr_stop: Option<f64>,
    /// Sweep step in dB.
    #[arg(long)]
    snr_step: Option<f64>,
    /// RSI-to-signal ratio eta.
    #[arg(long)]
    eta: Option<f64>,
    /// Target spectral efficiency R0 in bps/Hz.
    #[arg(long)]
    r0: Option<f64>,
    /// Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; together with the trial index it fixes every draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated schemes: xd,fd-a,fd-b,hd-a,hd-b,hy,rams.
    #[arg(long)]
    schemes: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn resolve(&self) -> Result<SweepConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => bench::parse_config_file(path)?,
            None => SweepConfig::default(),
        };
        if let Some(v) = self.snr_start {
            cfg.snr_db_start = v;
        }
        if let Some(v) = self.snr_stop {
            cfg.snr_db_stop = v;
        }
        if let Some(v) = self.snr_step {
            cfg.snr_db_step = v;
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.r0 {
            cfg.r0 = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(list) = &self.schemes {
            cfg.schemes = bench::parse_schemes(list)?;
        }
        if let Some(path) = &self.out {
            cfg.output_path = Some(path.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo + analytic sweep and emit one CSV record per
    /// (SNR point, scheme).
    Sweep(SweepArgs),
    /// Emit plot-ready CSV for one figure: ser, outage, or diversity.
    Figure {
        /// ser, outage, or diversity.
        kind: String,
        #[command(flatten)]
        args: SweepArgs,
    },
    /// Print per-SNR X-duplex mode-selection fractions.
    Modes(SweepArgs),
    /// Run the special-function oracle suite, closed-form-vs-quadrature
    /// checks, and a reduced Monte Carlo cross-validation.
    Selftest,
}

fn emit(content: &str, path: Option<&PathBuf>) -> Result<(), Error> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            log::info!("wrote {}", p.display());
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let records = bench::run_sweep(&cfg)?;
            emit(&bench::records_to_csv(&records), cfg.output_path.as_ref())?;
            report_clamps();
            Ok(true)
        }
        Command::Figure { kind, args } => {
            let kind: FigureKind = kind.parse()?;
            let cfg = args.resolve()?;
            let csv = bench::figure(kind, &cfg)?;
            emit(&csv, cfg.output_path.as_ref())?;
            report_clamps();
            Ok(true)
        }
        Command::Modes(args) => {
            let cfg = args.resolve()?;
            let csv = bench::mode_table(&cfg)?;
            emit(&csv, cfg.output_path.as_ref())?;
            Ok(true)
        }
        Command::Selftest => {
            let report = bench::run_selftest();
            print!("{}", report.render());
            Ok(report.passed())
        }
    }
}

fn report_clamps() {
    let clamps = xduplex_core::analytic::clamp_events();
    if clamps > 0 {
        log::warn!(
            "{clamps} analytic value(s) clamped into [0, 1]; \
             some points lie outside the asymptotic validity region"
        );
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            log::warn!("could not size worker pool: {e}");
        }
    }

    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Parameter(_) => 2,
                Error::Io(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
