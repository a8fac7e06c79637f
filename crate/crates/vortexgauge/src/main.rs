use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use vortexgauge::cli::{run, Command, RunConfig};
use vortexgauge::Error;

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Verify,
    Bifurcate,
    Classify,
    Mesh,
    Spectrum,
}

/// Ginzburg-Landau vortices on compact Riemann surfaces.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("E_USAGE {}", e.to_string().lines().next().unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    match execute(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{} {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, Error> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let cmd = match args.command {
        Sub::Verify => Command::Verify,
        Sub::Bifurcate => Command::Bifurcate,
        Sub::Classify => Command::Classify,
        Sub::Mesh => Command::Mesh,
        Sub::Spectrum => Command::Spectrum,
    };
    run(cmd, &cfg, &out)
}
