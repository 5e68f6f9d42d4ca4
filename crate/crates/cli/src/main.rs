use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use okounkov_cli::{config, Outcome, Overrides, RunConfig, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "okounkov",
    version,
    about = "Okounkov bodies and arithmetic volumes of toric adelic line bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured checks and write JSON/CSV reports.
    Run(Common),
    /// Validate a configuration and print every problem found.
    Validate(Common),
    /// Okounkov body and volume only.
    Okounkov(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    #[arg(long)]
    max_level: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of checks.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
}

fn load(c: &Common) -> Result<RunConfig, ExitCode> {
    let text = match std::fs::read_to_string(&c.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", c.config.display());
            return Err(ExitCode::from(2));
        }
    };
    let overrides = Overrides {
        max_level: c.max_level,
        out: c.out.clone(),
        checks: c.checks.clone(),
    };
    config::parse_config_with(&text, &overrides).map_err(|errs| {
        for e in &errs {
            eprintln!("error: {e}");
        }
        eprintln!("{} problem(s) in {}", errs.len(), c.config.display());
        ExitCode::from(2)
    })
}

fn report(outcome: &Outcome) -> ExitCode {
    for (check, verdict) in &outcome.results {
        println!("{:<12} {check}", verdict.as_str());
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "config {}; overall {}",
        outcome.config_hash,
        outcome.verdict().as_str()
    );
    ExitCode::from(outcome.exit_code() as u8)
}

fn configure_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring {THREADS_ENV}={v}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (common, action): (&Common, fn(&RunConfig) -> _) = match &cli.command {
        Command::Validate(c) => {
            return match load(c) {
                Ok(cfg) => {
                    println!(
                        "ok: {} checks, max level {}",
                        cfg.checks.len(),
                        cfg.max_level
                    );
                    ExitCode::SUCCESS
                }
                Err(code) => code,
            };
        }
        Command::Run(c) => (c, okounkov_cli::run),
        Command::Okounkov(c) => (c, okounkov_cli::okounkov),
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match action(&cfg) {
        Ok(outcome) => report(&outcome),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
