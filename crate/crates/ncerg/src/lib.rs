//! Experiment runner: loads a config, runs named suites, writes CSV tables,
//! JSON certificates and a report.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod schema;
pub mod suites;

use std::fmt;

use rayon::prelude::*;

pub use config::ExperimentConfig;
pub use report::{emit_plot_data, RunReport, SuiteOutcome};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<ncerg_core::Error> for RunError {
    fn from(e: ncerg_core::Error) -> Self {
        match e {
            ncerg_core::Error::InvalidParameter(_)
            | ncerg_core::Error::InvalidAlgebra(_)
            | ncerg_core::Error::InvalidSemigroup(_)
            | ncerg_core::Error::ShapeMismatch(_)
            | ncerg_core::Error::NotSelfAdjoint { .. }
            | ncerg_core::Error::Json(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    ValidateSemigroup,
    LocalAvg,
    Sandwich,
    Maximal,
    WeightedAvg,
    Besicovitch,
    BanachCheck,
    Full,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::ValidateSemigroup => "validate-semigroup",
            Suite::LocalAvg => "local-avg",
            Suite::Sandwich => "sandwich",
            Suite::Maximal => "maximal",
            Suite::WeightedAvg => "weighted-avg",
            Suite::Besicovitch => "besicovitch",
            Suite::BanachCheck => "banach-check",
            Suite::Full => "full",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seed of the random stream reserved for `name` (FNV-1a of the name, mixed by SplitMix64).
pub fn stream_seed(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_one(ctx: &suites::Context, suite: Suite) -> Result<SuiteOutcome, RunError> {
    match suite {
        Suite::ValidateSemigroup => suites::validate_semigroup(ctx),
        Suite::LocalAvg => suites::local_avg(ctx),
        Suite::Sandwich => suites::sandwich(ctx),
        Suite::Maximal => suites::maximal(ctx),
        Suite::WeightedAvg => suites::weighted_avg(ctx),
        Suite::Besicovitch => suites::besicovitch(ctx),
        Suite::BanachCheck => suites::banach_check(ctx, ctx.cfg.c),
        Suite::Full => unreachable!("full is expanded by run"),
    }
}

/// Runs `suite`. The full suite runs the others concurrently, then the
/// banach check with the maximal-inequality constant measured by `maximal`.
pub fn run(cfg: ExperimentConfig, suite: Suite) -> Result<RunReport, RunError> {
    let ctx = suites::Context::new(cfg)?;
    let mut report = RunReport::empty(suite.name(), ctx.cfg.seed);
    if suite != Suite::Full {
        report.suites.push(run_one(&ctx, suite)?);
        return Ok(report);
    }
    let independent = [
        Suite::ValidateSemigroup,
        Suite::LocalAvg,
        Suite::Sandwich,
        Suite::Maximal,
        Suite::WeightedAvg,
        Suite::Besicovitch,
    ];
    report.suites = independent
        .par_iter()
        .map(|&s| run_one(&ctx, s))
        .collect::<Result<Vec<_>, _>>()?;
    let measured = report
        .suites
        .iter()
        .find_map(|s| s.empirical_c)
        .filter(|c| *c > 0.0 && c.is_finite());
    report
        .suites
        .push(suites::banach_check(&ctx, measured.unwrap_or(ctx.cfg.c))?);
    Ok(report)
}
