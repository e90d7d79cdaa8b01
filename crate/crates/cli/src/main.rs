//! `kgfa`: experiments, cross-checks and table/figure recipes for the
//! grant-free access laboratory.

mod commands;
mod output;
mod params;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgfa_core::analytics::Engine;

use commands::Context;
use output::{Format, Sink};
use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kgfa_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing output: {0}")]
    Output(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(kgfa_core::Error::Budget(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Output(_) => 1,
            CliError::CheckFailed(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "kgfa", version, about = "Grant-free access protocol laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` parameter file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter override, `key=value`; repeatable
    #[arg(short, long = "param", value_name = "KEY=VALUE", global = true)]
    params: Vec<String>,
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[arg(long, global = true, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Term budget for the exact and float analytic engines
    #[arg(long, global = true)]
    budget_terms: Option<u64>,
    /// Worker threads for simulations
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write a gnuplot script plotting the `--out` CSV
    #[arg(long, global = true)]
    gnuplot_script: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: kgfa_core::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Finite-size access probability: R (or gamma), N, K, Q
    Analytic(Common),
    /// Large-system approximation: gamma, K, Q
    Approx(Common),
    /// Monte Carlo access probability of one configuration
    Simulate(Common),
    /// Monte Carlo message delay with retransmissions (uses M)
    Delay(Common),
    /// Simulation over lists (`K=1,2,3`) or ranges (`K=1..7`) of parameters
    Sweep(Common),
    /// Accuracy table: simulation, exact model and approximation
    Table1 {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 if a cell is outside tolerance
        #[arg(long)]
        check: bool,
    },
    /// Access probability versus K for the four decoder variants
    Fig4(Common),
    /// Access probability and message delay versus Q
    Fig5(Common),
    /// Operation counters of the generic IIC model and their scaling fits
    IicBench(Common),
    /// Checks the set-difference identity on random event spaces
    CheckEq2(Common),
    /// Draws one access map and writes it in the text format
    GenMap(Common),
    /// Decodes an access map file
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        map: PathBuf,
        /// Use the generic branching model instead of the oracle decoder
        #[arg(long)]
        generic: bool,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analytic(c)
            | Command::Approx(c)
            | Command::Simulate(c)
            | Command::Delay(c)
            | Command::Sweep(c)
            | Command::Fig4(c)
            | Command::Fig5(c)
            | Command::IicBench(c)
            | Command::CheckEq2(c)
            | Command::GenMap(c) => c,
            Command::Table1 { common, .. } | Command::Decode { common, .. } => common,
        }
    }
}

fn context(common: &Common) -> Result<Context, CliError> {
    let mut params = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Params::parse_file(&text)?
        }
        None => Params::default(),
    };
    for p in &common.params {
        params.apply(p)?;
    }
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    if common.trials == Some(0) {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    Ok(Context {
        params,
        seed: common.seed,
        trials: common.trials,
        engine: common.engine,
        budget_terms: common.budget_terms,
        sink: Sink {
            format: common.format,
            path: common.out.clone(),
        },
        gnuplot: common.gnuplot_script.clone(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = context(cli.command.common())?;
    match &cli.command {
        Command::Analytic(_) => commands::analytic(&ctx),
        Command::Approx(_) => commands::approx(&ctx),
        Command::Simulate(_) => commands::simulate(&ctx),
        Command::Delay(_) => commands::delay(&ctx),
        Command::Sweep(_) => commands::sweep(&ctx),
        Command::Table1 { check, .. } => commands::run_table1(&ctx, *check),
        Command::Fig4(_) => commands::run_fig4(&ctx),
        Command::Fig5(_) => commands::run_fig5(&ctx),
        Command::IicBench(_) => commands::run_iic_bench(&ctx),
        Command::CheckEq2(_) => commands::check_eq2(&ctx),
        Command::GenMap(_) => commands::gen_map(&ctx),
        Command::Decode { map, generic, .. } => commands::decode(&ctx, map, *generic),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
