//! `gkdv`: soliton profiles, collisions, PDE runs, perturbed dynamics and
//! weak-residual validation for `u_t + g'(u)_x + ε² u_xxx = F`.
//!
//! Every run reads one TOML file (`--config`) and writes CSV files plus
//! `manifest.csv` into `--out`. Wall-clock timings go to `timings.csv`, which
//! is the only output that differs between identical reruns.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gkdv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true, default_value = "gkdv.toml")]
    config: PathBuf,

    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for randomized checks; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check admissibility and the moment identities of the nonlinearity.
    ValidateNl,
    /// Solve one soliton profile and its moments.
    Profile,
    /// Solve the two-soliton collision layer.
    Collide,
    /// Run the pseudo-spectral PDE solver.
    Simulate,
    /// Evolve perturbed solitons and their tails.
    Perturb,
    /// Weak residuals, balance laws and PDE comparison for a collision.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ValidateNl => "validate-nl",
            Command::Profile => "profile",
            Command::Collide => "collide",
            Command::Simulate => "simulate",
            Command::Perturb => "perturb",
            Command::Validate => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match config::Config::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let mut ctx = run::Context::new(cli.out, text, seed, cli.verbose);
    let result = match cli.command {
        Command::ValidateNl => run::validate_nl(&cfg, &mut ctx),
        Command::Profile => run::profile(&cfg, &mut ctx),
        Command::Collide => run::collide(&cfg, &mut ctx),
        Command::Simulate => run::simulate(&cfg, &mut ctx),
        Command::Perturb => run::perturb(&cfg, &mut ctx),
        Command::Validate => run::validate(&cfg, &mut ctx),
    };
    let status = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            run::exit_code(e)
        }
    };
    if let Err(e) = ctx.finish(cli.command.name(), result.as_ref().err()) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(4);
    }
    ExitCode::from(status)
}
