//! Command implementations behind the `neural-map` binary.
//!
//! Each command is a plain function over typed arguments writing progress
//! to a caller-supplied sink, so tests drive them without a subprocess.
//! The binary in `main.rs` only parses flags, applies the `NMAP_SEED`
//! override, and maps outcomes onto exit codes: 0 success, 1 usage error,
//! 2 runtime failure, 3 verification failure.

mod commands;
mod config;
mod episode;

pub use commands::{
    cmd_eval, cmd_gen_mazes, cmd_gradcheck, cmd_heatmap, cmd_train, EvalArgs, GenMazesArgs,
    HeatmapArgs, TrainArgs, TrainSummary,
};
pub use config::{parse_agent_variant, parse_sizes, seed_from_env, RunConfig};
pub use episode::{attention_analysis, run_heatmap_episode, EpisodeTrace, IndicatorAttention};

use crate::autodiff::AdError;

/// Failure modes of a command, one per exit code above zero.
#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong: bad flag values, missing input
    /// files, contradictory options.
    Usage(String),
    /// The invocation was valid but execution failed.
    Runtime(String),
    /// A verification command ran to completion and found failures.
    CheckFailed,
}

impl From<AdError> for CliError {
    fn from(e: AdError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
            CliError::CheckFailed => write!(f, "verification failed"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::CheckFailed => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
