//! `busflow`: runs the transit analytics pipeline over NDJSON inputs and
//! writes CSV artifacts plus a `manifest.json` into the output directory.

mod config;
mod error;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::pipeline::{Command, Pipeline};

#[derive(Debug, Parser)]
#[command(name = "busflow", version, about = "Bus GPS log analytics pipeline")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir` in the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampling and OD generation (overrides `seed` in the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses one per core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Serialize)]
struct Done<'a> {
    status: &'static str,
    command: &'a str,
    out_dir: String,
    artifacts: usize,
}

fn run(cli: &Cli) -> Result<Done<'static>, CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let base = cli.config.parent().map(PathBuf::from).unwrap_or_default();
    let out_dir = match (&cli.out, &cfg.out_dir) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => {
            return Err(CliError::config(
                &cli.config,
                "no output directory: set out_dir or pass --out",
            ))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| CliError::config(&cli.config, e.to_string()))?;
    let artifacts = Pipeline::new(&cfg, base, out_dir.clone()).run(cli.command)?;
    Ok(Done {
        status: "ok",
        command: cli.command.name(),
        out_dir: out_dir.display().to_string(),
        artifacts,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(done) => {
            println!("{}", serde_json::to_string(&done).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            println!(
                "{}",
                serde_json::to_string(&e.record(cli.command.name())).expect("serializable")
            );
            ExitCode::FAILURE
        }
    }
}
