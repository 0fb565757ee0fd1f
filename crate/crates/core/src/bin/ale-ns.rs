use std::path::PathBuf;
use std::process::ExitCode;

use ale_ns::harness::{self, RunOptions};
use clap::{Args, Parser, Subcommand};

/// ALE finite-volume runs and energy diagnostics for compressible flow on moving domains.
#[derive(Parser)]
#[command(name = "ale-ns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file, or the name of a shipped scenario.
    config: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Override of the emission period.
    #[arg(long)]
    emit_every: Option<f64>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { seed: self.seed, emit_every: self.emit_every }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment at the configured resolution.
    Run(Common),
    /// Run every refinement level of the study section.
    Study(Common),
    /// Parse and validate a configuration.
    Validate { config: String },
    /// List the shipped scenarios.
    ListScenarios,
}

fn verdict(name: &str, value: f64, limit: f64, pass: bool) {
    println!("{} {name}: {value:e} (limit {limit:e})", if pass { "PASS" } else { "FAIL" });
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(c) => {
            let config = harness::load(&c.config)?;
            let summary = harness::run_experiment(&config, &c.out, &c.options())?;
            for k in &summary.outcome.contracts {
                verdict(&k.name, k.value, k.limit, k.pass);
            }
            println!("manifest: {}", summary.manifest.display());
            Ok(summary.pass())
        }
        Command::Study(c) => {
            let config = harness::load(&c.config)?;
            let result = harness::convergence_study(&config, Some(&c.out), &c.options())?;
            for (m, o) in &result.orders {
                println!("order {m}: {o:.3}");
            }
            for k in &result.contracts {
                verdict(&k.name, k.value, k.limit, k.pass);
            }
            for f in &result.failures {
                println!("FAIL {f}");
            }
            println!("manifest: {}", c.out.join(&result.name).join("manifest.json").display());
            Ok(result.pass())
        }
        Command::Validate { config } => {
            let c = harness::load(&config)?;
            println!("valid: {} (config hash {})", c.name, c.hash());
            Ok(true)
        }
        Command::ListScenarios => {
            for (name, _) in harness::CATALOGUE {
                let c = harness::builtin(name)?;
                println!("{name:24} {}", c.description);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
