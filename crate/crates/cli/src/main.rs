//! `twistlab`: batch runner for twisted L² experiments.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails (artifacts are
//! still written), 1 on invalid input or a solver size overflow (nothing is
//! written).

mod config;
mod report;
mod run;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Kind, Params, SCHEMA_VERSION};
use report::{Report, Stages};

#[derive(Parser)]
#[command(name = "twistlab", version, about = "Twisted L² invariants of discretized manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run a bundled reproduction suite: circle, torus, genus2 or inequalities.
    ReportAll {
        suite: String,
        #[arg(long, default_value = "twistlab-out")]
        outdir: PathBuf,
    },
    /// Check a config against the schema and solver limits without running it.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ExperimentConfig::parse(&text).map_err(|e| e.to_string())
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    let threads = run::thread_budget();
    let mut stages = Stages::start();
    let outcome = match run::execute(cfg, threads, &mut stages) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e.0);
            return ExitCode::from(1);
        }
    };
    let (report, csv) = Report::assemble(cfg, outcome, stages, threads);
    let paths = match report.write(&csv) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot write artifacts to {}: {e}", cfg.outdir.display());
            return ExitCode::from(1);
        }
    };
    print!("{}", report.table());
    for p in paths {
        println!("wrote {}", p.display());
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match load(&config) {
            Ok(cfg) => execute(&cfg),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} config, artifacts {}.csv|json", cfg.kind.name(), report::artifact_stem(&cfg));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::ReportAll { suite, outdir } => {
            let cfg = ExperimentConfig {
                schema: SCHEMA_VERSION,
                kind: Kind::ReportAll,
                seed: 0,
                outdir,
                model: None,
                twist: None,
                fiber: Default::default(),
                sweep: None,
                params: Params { suite: Some(suite), ..Params::default() },
            };
            if let Err(e) = cfg.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            execute(&cfg)
        }
    }
}
