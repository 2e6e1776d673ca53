//! `intergen`: runs the solver stages from a TOML config and writes tables.
//!
//! Every flag has an environment override: INTERGEN_CONFIG, INTERGEN_OUT,
//! INTERGEN_SEED, INTERGEN_THREADS, INTERGEN_SOLUTION.
//!
//! Exit codes: 0 success, 2 invalid input or failed assumption checks,
//! 3 numerical failure.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

/// Input problem that is not a numerical failure.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser, Debug)]
#[command(name = "intergen", version, about = "Intergenerational risk sharing under limited commitment")]
struct Cli {
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true, env = "INTERGEN_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true, env = "INTERGEN_OUT")]
    out: Option<PathBuf>,

    /// Seed for every random stage (overrides ergodic.seed and shock.seed).
    #[arg(long, global = true, env = "INTERGEN_SEED")]
    seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "INTERGEN_THREADS")]
    threads: Option<usize>,

    /// Solution file read by downstream stages [default: <out>/solution.json].
    #[arg(long, global = true, env = "INTERGEN_SOLUTION")]
    solution: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Check the assumptions on primitives.
    Validate,
    /// First-best allocation and debts.
    FirstBest,
    /// Deterministic benchmark at one endowment share.
    Deterministic {
        /// Share of the young [default: largest share in the economy].
        #[arg(long)]
        share: Option<f64>,
    },
    /// Value-function iteration; writes solution.json.
    Solve,
    /// Simulated sample path and regeneration statistics.
    Simulate,
    /// Invariant distribution on promise bins.
    Invariant,
    /// Debt policies, bond revenue and fiscal reaction.
    Debt,
    /// Perron root, yields and the Martin-Ross bound.
    Yields,
    /// Risk premium on debt across the support.
    Mrp,
    /// Insurance coefficient and welfare loss.
    Welfare,
    /// Response to a one-off population increase.
    Shock,
    /// Multiplier ladder of the two-state economy.
    Shoot,
    /// Every stage for the two built-in economies.
    ReproduceAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::FirstBest => "first-best",
            Command::Deterministic { .. } => "deterministic",
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Invariant => "invariant",
            Command::Debt => "debt",
            Command::Yields => "yields",
            Command::Mrp => "mrp",
            Command::Welfare => "welfare",
            Command::Shock => "shock",
            Command::Shoot => "shoot",
            Command::ReproduceAll => "reproduce-all",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<intergen::Error>() {
            return if e.is_validation() { 2 } else { 3 };
        }
        if cause.is::<ConfigError>() || cause.is::<toml::de::Error>() {
            return 2;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> anyhow::Result<()> {
        let cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut cfg = cfg.with_seed(cli.seed);
        if let Some(o) = &cli.out {
            cfg.output.dir = o.clone();
        }
        cfg.check()?;
        if let Some(n) = cli.threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        let threads = rayon::current_num_threads();
        run::execute(cli.command, cfg, cli.solution.clone(), cli.seed, threads)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
