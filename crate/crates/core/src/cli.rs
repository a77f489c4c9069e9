//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
//! (including any failed sweep cell), 3 a validation check failed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::SystemConfig;
use crate::error::Error;
use crate::experiment::{run_sweep, Mode};
use crate::output::{write_run, write_sweep_summary, RunSummary};
use crate::validate::{run_suite, BerFn, Level, REFERENCE_BER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lumisec", version, about = "Adaptive modulation and precoding for VLC secrecy, by Q-learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System description (TOML). Defaults to the bundled configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every setup once, adaptive and/or baseline.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ModeArg::All)]
        mode: ModeArg,
    },
    /// Check the metrics and learner against independent oracles.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "validate-level", value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
    },
    /// Run every (setup, mode, seed) combination concurrently.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Comma-separated seeds, e.g. `1,2,3`.
        #[arg(long, value_parser = parse_seeds, required = true)]
        seeds: Seeds,
        #[arg(long, value_enum, default_value_t = ModeArg::All)]
        mode: ModeArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Adaptive,
    Fixed64,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let seeds = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err("at least one seed is required".into());
    }
    Ok(Seeds(seeds))
}

fn modes(arg: ModeArg, cfg: &SystemConfig) -> Vec<Mode> {
    match arg {
        ModeArg::Adaptive => vec![Mode::Adaptive],
        ModeArg::Fixed64 => vec![Mode::FixedOrder(64)],
        ModeArg::All => vec![Mode::Adaptive, cfg.baseline_mode()],
    }
}

fn load(config: Option<&Path>) -> Result<SystemConfig, i32> {
    match config {
        Some(path) => SystemConfig::load(path),
        None => SystemConfig::parse(crate::config::DEFAULT_CONFIG),
    }
    .map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn code(result: Result<i32, i32>) -> i32 {
    result.unwrap_or_else(|c| c)
}

fn report_failures(run: &RunSummary) -> i32 {
    if run.failures.is_empty() {
        return EXIT_OK;
    }
    eprintln!("{} episode(s) failed:", run.failures.len());
    for f in &run.failures {
        eprintln!("  {}/{}/seed{}: {}", f.scenario, f.mode, f.seed, f.error);
    }
    EXIT_RUNTIME
}

fn execute(cfg: &SystemConfig, seeds: &[u64], mode: ModeArg, out: &Path) -> Result<RunSummary, i32> {
    let runtime = |e: Error| {
        eprintln!("error: {e}");
        EXIT_RUNTIME
    };
    let scenarios = cfg.scenarios().map_err(runtime)?;
    let base = cfg.run_config(Mode::Adaptive).map_err(runtime)?;
    let cells = run_sweep(&scenarios, &modes(mode, cfg), seeds, &base).map_err(runtime)?;
    write_run(out, &cells, base.summary_window).map_err(runtime)
}

pub fn cmd_run(config: Option<&Path>, seed: Option<u64>, mode: ModeArg, out: &Path) -> i32 {
    code((|| {
        let cfg = load(config)?;
        let run = execute(&cfg, &[seed.unwrap_or(cfg.run.seed)], mode, out)?;
        println!("wrote {} episode(s) to {}", run.episodes.len(), out.display());
        Ok(report_failures(&run))
    })())
}

pub fn cmd_sweep(config: Option<&Path>, seeds: &[u64], mode: ModeArg, out: &Path) -> i32 {
    if seeds.is_empty() {
        eprintln!("error: at least one seed is required");
        return EXIT_USAGE;
    }
    code((|| {
        let cfg = load(config)?;
        let run = execute(&cfg, seeds, mode, out)?;
        let sweep = write_sweep_summary(out, &run).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        })?;
        for g in &sweep.groups {
            println!(
                "{:<10} {:<10} C_s {:.4} +/- {:.4}  u {:.4} +/- {:.4}  BER bob {:.3e} eve {:.3e}",
                g.scenario,
                g.mode,
                g.secrecy_capacity.mean,
                g.secrecy_capacity.std,
                g.utility.mean,
                g.utility.std,
                g.ber_bob.mean,
                g.ber_eve.mean
            );
        }
        Ok(report_failures(&run))
    })())
}

/// Validation with an injectable BER implementation (used to check that the
/// suite notices a broken formula).
pub fn cmd_validate_with(config: Option<&Path>, level: LevelArg, ber: BerFn) -> i32 {
    code((|| {
        let cfg = load(config)?;
        let scenarios = cfg.scenarios().map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })?;
        let level = match level {
            LevelArg::Fast => Level::Fast,
            LevelArg::Full => Level::Full,
        };
        let report = run_suite(level, &scenarios[0], &cfg.quadrature, &cfg.learner, ber);
        println!("{report}");
        Ok(match report.first_failure() {
            Some(c) => {
                eprintln!("validation failed: {}", c.name);
                EXIT_VALIDATION
            }
            None => EXIT_OK,
        })
    })())
}

pub fn cmd_validate(config: Option<&Path>, level: LevelArg) -> i32 {
    cmd_validate_with(config, level, REFERENCE_BER)
}

/// Parses `args` (including the program name) and dispatches.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run { common, out, seed, mode } => cmd_run(common.config.as_deref(), seed, mode, &out),
        Command::Validate { common, level } => cmd_validate(common.config.as_deref(), level),
        Command::Sweep { common, out, seeds, mode } => cmd_sweep(common.config.as_deref(), &seeds.0, mode, &out),
    }
}
