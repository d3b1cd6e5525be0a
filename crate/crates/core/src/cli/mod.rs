//! The `ltd` experiment runner.
//!
//! Every subcommand reads an optional TOML config (positional argument),
//! applies command-line overrides and prints a CSV table followed by
//! `# key=value` report lines. The first line is `# timestamp=<unix secs>`
//! unless `--no-timestamp` is given; everything after it is byte-identical
//! for a fixed config, seed and worker count.
//!
//! Exit codes: 0 on success, 1 on invalid input or a runtime error, 2 when
//! `--assert` is given and a check fails.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{two_state_closed_form, Outcome, TestFunctional};
pub use config::{ExperimentConfig, GeneratorSource};
pub use output::Table;

use crate::error::{Error, Result};
use crate::parallel::with_workers;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ASSERT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ltd", version, about = "Local-time densities of finite Markov chains: evaluators, oracles and bounds")]
pub struct Cli {
    /// Omit the timestamp line.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Exit with status 2 if any check fails.
    #[arg(long, global = true)]
    pub assert: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, env = "LTD_WORKERS")]
    pub workers: Option<usize>,
    /// Emit the table in long form (row, column, value).
    #[arg(long, global = true)]
    pub plot_data: bool,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the density by every evaluator over `l_grid`.
    DensityEval(CommonArgs),
    /// Monte Carlo against simplex integration of F times the density.
    McValidate(CommonArgs),
    /// Integral of the density against inclusion-exclusion of killed semigroups.
    MarginalCheck(CommonArgs),
    /// Pointwise density bound and region bound against exact values.
    BoundsCheck(CommonArgs),
    /// Rate function of a measure on the range.
    RateFunction(CommonArgs),
    /// Discrete variational value on a lattice box.
    Chi(CommonArgs),
    /// Rescaled finite-horizon bound over several horizons.
    Rescaled(CommonArgs),
    /// Statistical test of walk local times against the Ray-Knight kernels.
    RayknightTest(RayKnightArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Simplex grid nodes per axis.
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct RayKnightArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Site where the local time is stopped.
    #[arg(long)]
    pub b: Option<i64>,
    /// Local-time level at `b`.
    #[arg(long)]
    pub h: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.seed = self.seed.or(cfg.seed);
        cfg.horizon = self.horizon.or(cfg.horizon);
        cfg.paths = self.paths.or(cfg.paths);
        cfg.tol = self.tol.or(cfg.tol);
        cfg.nodes = self.nodes.or(cfg.nodes);
        Ok(cfg)
    }
}

impl Command {
    pub fn execute(&self) -> Result<Outcome> {
        match self {
            Command::DensityEval(a) => commands::density_eval(&a.load()?),
            Command::McValidate(a) => commands::mc_validate(&a.load()?),
            Command::MarginalCheck(a) => commands::marginal_check(&a.load()?),
            Command::BoundsCheck(a) => commands::bounds_check(&a.load()?),
            Command::RateFunction(a) => commands::rate_function(&a.load()?),
            Command::Chi(a) => commands::chi(&a.load()?),
            Command::Rescaled(a) => commands::rescaled(&a.load()?),
            Command::RayknightTest(a) => {
                let mut cfg = a.common.load()?;
                cfg.b = a.b.or(cfg.b);
                cfg.h = a.h.or(cfg.h);
                commands::rayknight_test(&cfg)
            }
        }
    }
}

/// Renders an outcome: timestamp line, table and report, then check lines.
pub fn render(outcome: &Outcome, long: bool, timestamp: Option<u64>) -> String {
    let mut s = String::new();
    if let Some(ts) = timestamp {
        s.push_str(&format!("# timestamp={ts}\n"));
    }
    s.push_str(&if long { outcome.table.render_long() } else { outcome.table.render() });
    for (name, pass) in &outcome.checks {
        s.push_str(&format!("# check.{name}={}\n", if *pass { "PASS" } else { "FAIL" }));
    }
    s
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match run_cli(&cli) {
        Ok(passed) if passed || !cli.assert => EXIT_OK,
        Ok(_) => {
            eprintln!("ltd: a check failed");
            EXIT_ASSERT
        }
        Err(e) => {
            eprintln!("ltd: {e}");
            EXIT_ERROR
        }
    }
}

fn run_cli(cli: &Cli) -> Result<bool> {
    let outcome = with_workers(cli.workers, || cli.command.execute())??;
    let ts = (!cli.no_timestamp).then(|| {
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    });
    let text = render(&outcome, cli.plot_data, ts);
    match &cli.output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(outcome.passed())
}

/// Entry point of the `ltd` binary.
pub fn main_entry() -> i32 {
    run(std::env::args_os())
}
