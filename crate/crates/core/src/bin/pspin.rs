use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use pspin::config::ExperimentConfig;
use pspin::report::{exit_code_for, run, Command, RunOptions, Verdict};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Predict,
    SampleLandscape,
    ReplicaBound,
    Langevin,
    Report,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Predict => Command::Predict,
            Cmd::SampleLandscape => Command::SampleLandscape,
            Cmd::ReplicaBound => Command::ReplicaBound,
            Cmd::Langevin => Command::Langevin,
            Cmd::Report => Command::Report,
        }
    }
}

/// Ground states, landscape probes and replica bounds for mixed spherical spin glasses.
///
/// Exit codes: 1 configuration error, 2 numerical failure, 3 failed claim under --strict.
/// PSPIN_WORKERS sets the worker thread count.
#[derive(Debug, Parser)]
#[command(name = "pspin", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Experiment file (TOML, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config. Defaults to `out/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with code 3 when any checked claim fails.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(w) = std::env::var("PSPIN_WORKERS") {
        match w.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: PSPIN_WORKERS must be a positive integer, got {w:?}");
                return ExitCode::from(1);
            }
        }
    }
    let mut cfg = match ExperimentConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { out, strict: cli.strict };
    match run(cli.command.into(), &cfg, &opts) {
        Ok(outcome) => {
            for c in &outcome.claims {
                let tag = match c.verdict {
                    Verdict::Pass => "PASS",
                    Verdict::Fail => "FAIL",
                    Verdict::NotReached => "N/R ",
                };
                println!("{tag} {:<28} {}", c.id, c.statement);
            }
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
