use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ncerg::{
    emit_plot_data, run, ExperimentConfig, RunError, Suite, EXIT_CHECK_FAILED, EXIT_ERROR,
    EXIT_PASS,
};

#[derive(Parser)]
#[command(
    name = "ncerg",
    version,
    about = "Local ergodic theorems in finite noncommutative L^p spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite.
    Run {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Print the CSV and JSON output schemas.
    Schema,
    ValidateSemigroup(Common),
    LocalAvg(Common),
    Sandwich(Common),
    Maximal(Common),
    WeightedAvg(Common),
    Besicovitch(Common),
    BanachCheck(Common),
    Full(Common),
}

#[derive(Args)]
struct Common {
    /// JSON or TOML config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn configure_threads() -> Result<(), RunError> {
    if let Ok(v) = std::env::var("NCERG_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            RunError::Config(format!(
                "NCERG_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(suite: Suite, common: Common) -> Result<bool, RunError> {
    configure_threads()?;
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = common.out {
        cfg.out = Some(out);
    }
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("ncerg-out"));
    let start = Instant::now();
    let report = run(cfg, suite)?;
    emit_plot_data(&report, &out)?;
    for c in report.checks() {
        let mark = if c.passed { "pass" } else { "FAIL" };
        println!(
            "{mark} {}: {} ({:e} vs {:e}) {}",
            c.suite, c.name, c.value, c.threshold, c.detail
        );
    }
    // Kept out of the report so that reports are reproducible byte for byte.
    eprintln!(
        "{suite}: {:.2}s, output in {}",
        start.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, common) = match cli.command {
        Command::Schema => {
            println!(
                "{}",
                serde_json::to_string_pretty(&ncerg::schema::schema_json())
                    .expect("schema serializes")
            );
            return ExitCode::from(EXIT_PASS as u8);
        }
        Command::Run { suite, common } => (suite, common),
        Command::ValidateSemigroup(c) => (Suite::ValidateSemigroup, c),
        Command::LocalAvg(c) => (Suite::LocalAvg, c),
        Command::Sandwich(c) => (Suite::Sandwich, c),
        Command::Maximal(c) => (Suite::Maximal, c),
        Command::WeightedAvg(c) => (Suite::WeightedAvg, c),
        Command::Besicovitch(c) => (Suite::Besicovitch, c),
        Command::BanachCheck(c) => (Suite::BanachCheck, c),
        Command::Full(c) => (Suite::Full, c),
    };
    let code = match execute(suite, common) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
