mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::{info, warn};

use phasenls::verify::{run_suite, Suite};
use phasenls::{evolve, presets, Dynamics, Error, Model, TwoBody};

use config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "phasenls",
    version,
    about = "Phase-nonlinear Schrödinger experiments and invariant checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the state described by a JSON config and write its outputs.
    Run { config: PathBuf },
    /// Run an invariant suite and print one JSON line per metric.
    Check {
        /// conservation, homogeneity, reversibility, galilean, separability or oracles
        suite: String,
    },
    /// List the initial-state presets and their parameters.
    Presets,
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, e) = match self {
            Failure::Config(e) => (EXIT_CONFIG, e),
            Failure::Numerical(e) => (EXIT_NUMERICAL, e),
        };
        eprintln!("error: {e:#}");
        ExitCode::from(code)
    }
}

fn run(path: PathBuf) -> Result<(), Failure> {
    let config = RunConfig::load(&path).map_err(Failure::Config)?;
    let psi0 = config.initial_state().map_err(Failure::Config)?;
    let model: Box<dyn Dynamics> = match (&config.model, &config.two_body) {
        (Some(spec), _) => {
            Box::new(Model::new(spec.clone(), config.grid).map_err(|e| Failure::Config(e.into()))?)
        }
        (None, Some(spec)) => Box::new(
            TwoBody::new(spec.clone(), config.grid).map_err(|e| Failure::Config(e.into()))?,
        ),
        (None, None) => unreachable!("validated on load"),
    };
    let dir = config.output_dir();
    info!("running {} into {}", path.display(), dir.display());

    let (traj, failure) = match evolve(&psi0, model.as_ref(), &config.controls) {
        Ok(traj) => (traj, None),
        Err(e @ Error::Stiffness(_)) => {
            let msg = e.to_string();
            let Error::Stiffness(report) = e else {
                unreachable!()
            };
            (report.partial, Some(msg))
        }
        Err(e) => return Err(Failure::Numerical(e.into())),
    };
    if !traj.records.iter().all(|r| r.seam_decayed) {
        warn!(
            "the state reached the periodic seam; the Ehrenfest corrections carry boundary terms"
        );
    }
    let status = failure.clone().unwrap_or_else(|| "completed".into());
    output::write_run(&dir, &config, &traj, status)
        .with_context(|| format!("writing outputs to {}", dir.display()))
        .map_err(Failure::Config)?;
    match failure {
        Some(msg) => Err(Failure::Numerical(anyhow::anyhow!(
            "{msg}; partial outputs kept in {}. If the stiffness grows out of the density tails, \
             a larger taper_rel (1e-4 to 1e-3) damps it",
            dir.display()
        ))),
        None => Ok(()),
    }
}

fn check(name: &str) -> Result<(), Failure> {
    let suite: Suite = name.parse().map_err(|e: Error| Failure::Config(e.into()))?;
    let results = run_suite(suite);
    for r in &results {
        println!(
            "{}",
            serde_json::to_string(r).expect("check results serialize")
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Numerical(anyhow::anyhow!(
            "{failed} of {} checks failed in suite {suite}",
            results.len()
        )))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config } => run(config),
        Command::Check { suite } => check(&suite),
        Command::Presets => {
            for p in presets::catalog() {
                println!("{:<16} {:<40} {}", p.name, p.params, p.description);
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
