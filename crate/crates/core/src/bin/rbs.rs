use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resonant_beam::config::Config;
use resonant_beam::experiments::{run_experiment, EXPERIMENTS};
use resonant_beam::Error;

/// Resonant beam link simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one experiment and writes its CSV and JSON files.
    Run { experiment: String },
    /// Checks the config and prints it with every default filled in.
    Validate,
    /// Lists the available experiments.
    ListExperiments,
}

fn load(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::ListExperiments => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<24}{about}");
            }
        }
        Command::Validate => {
            let cfg = load(cli)?;
            println!("# config_hash={}", cfg.hash());
            print!("{}", cfg.normalized().to_toml());
        }
        Command::Run { experiment } => {
            let cfg = load(cli)?;
            if let Some(j) = cli.jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build_global()
                    .map_err(|e| Error::InvalidParameter(format!("--jobs: {e}")))?;
            }
            let out = run_experiment(experiment, &cfg, &cli.out)?;
            for f in &out.files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
