//! `stochstab`: equilibria, simulations, Lyapunov exponents and stability
//! verdicts for two-dimensional immune-tumor models.

mod commands;
mod config;
mod error;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;
use manifest::Recorder;

#[derive(Parser, Debug)]
#[command(name = "stochstab", version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `[sim] seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model name (overrides `model`).
    #[arg(long, global = true)]
    model: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// List the equilibria with residuals and Jacobian eigenvalues.
    Equilibria,
    /// Simulate one trajectory and plot it.
    Simulate,
    /// Top Lyapunov exponent of the linearization.
    Lyapunov,
    /// Exponent as a function of alpha for B = [[alpha, -beta], [beta, alpha]].
    Sweep,
    /// Stability verdict for every equilibrium.
    Stability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Simulate => "simulate",
            Command::Lyapunov => "lyapunov",
            Command::Sweep => "sweep",
            Command::Stability => "stability",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        model: cli.model.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let resolved = config::resolve(&file, &overrides)?;
    let mut rec = Recorder::new(&resolved.out, cli.command.name(), resolved.echo.clone())?;
    let report = match cli.command {
        Command::Equilibria => commands::equilibria(&resolved, &mut rec),
        Command::Simulate => commands::simulate_cmd(&resolved, &mut rec),
        Command::Lyapunov => commands::lyapunov_cmd(&resolved, &mut rec),
        Command::Sweep => commands::sweep_cmd(&resolved, &mut rec),
        Command::Stability => commands::stability_cmd(&resolved, &mut rec),
    }?;
    print!("{report}");
    let manifest = rec.finish()?;
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        resolved.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
