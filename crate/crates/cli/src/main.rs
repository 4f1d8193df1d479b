//! `rice-lab`: data generation, training, sweeps and oracle checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CommandError, Context};
use crate::config::FlatConfig;

#[derive(Parser, Debug)]
#[command(
    name = "rice-lab",
    version,
    about = "Causal-invariance training laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a toy dataset to data.csv.
    GenData(Common),
    /// Train one toy model and evaluate it across the shift grid.
    ToyTrain(Common),
    /// Replicated four-method sweep over the shift grid.
    ToySweep(Common),
    /// Spurious-colour classification analog.
    Spurious(Common),
    /// Run the finite-space oracle suite.
    VerifyOracle(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Master seed; overrides any `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Worker threads [env: RICE_LAB_JOBS; default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
}

fn context(common: &Common) -> Result<Context, CommandError> {
    let mut cfg = match &common.config {
        Some(p) => FlatConfig::load(p)?,
        None => FlatConfig::default(),
    };
    cfg.apply_overrides(&common.sets)?;
    if let Some(s) = common.seed {
        cfg.set("seed", s);
    }
    let seed = cfg.get("seed", 0u64)?;
    let jobs = match common.jobs {
        Some(j) => Some(j),
        None => match std::env::var("RICE_LAB_JOBS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                rice_lab::Error::Config(format!(
                    "RICE_LAB_JOBS must be a positive integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if jobs == Some(0) {
        return Err(rice_lab::Error::Config("jobs must be at least 1".into()).into());
    }
    Ok(Context {
        cfg,
        out: common.out.clone(),
        seed,
        jobs,
    })
}

type Handler = fn(&Context) -> Result<(), CommandError>;

fn run(cli: Cli) -> Result<(), CommandError> {
    let (common, f): (&Common, Handler) = match &cli.command {
        Command::GenData(c) => (c, commands::gen_data),
        Command::ToyTrain(c) => (c, commands::toy_train),
        Command::ToySweep(c) => (c, commands::toy_sweep),
        Command::Spurious(c) => (c, commands::spurious),
        Command::VerifyOracle(c) => (c, commands::verify_oracle),
    };
    f(&context(common)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
