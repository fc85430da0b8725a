//! The run configuration file and flag-value parsers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentSpec, AgentVariant};
use crate::env::EVAL_STEP_LIMIT;
use crate::trainer::TrainConfig;

use super::{CliError, CliResult};

/// Everything a training run depends on besides the held-out maze file:
/// seed, architecture, and trainer hyperparameters. Loadable from one
/// JSON file; unknown keys anywhere in the tree are rejected. A verbatim
/// copy is written into every run directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub agent: AgentSpec,
    pub train: TrainConfig,
    /// Per-episode step cap for the final and standalone evaluations.
    pub eval_cap: usize,
    /// Training-distribution mazes drawn for the `train_*` half of the
    /// final report.
    pub eval_train_mazes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            agent: AgentSpec::default(),
            train: TrainConfig::default(),
            eval_cap: EVAL_STEP_LIMIT,
            eval_train_mazes: 200,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.agent.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.eval_cap == 0 {
            return Err(CliError::Usage("eval-cap must be at least 1".to_string()));
        }
        Ok(())
    }
}

/// Parses a size list: comma-separated entries, each a single odd size or
/// an inclusive `lo-hi` range stepping by 2. `"5,9-13"` → `[5, 9, 11, 13]`.
pub fn parse_sizes(text: &str) -> CliResult<Vec<usize>> {
    let bad = |msg: String| Err(CliError::Usage(format!("--sizes {text:?}: {msg}")));
    let mut sizes = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return bad("empty entry".to_string());
        }
        let bounds: Vec<&str> = token.splitn(2, '-').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("--sizes {text:?}: {s:?} is not a number")))
        };
        let (lo, hi) = match bounds.as_slice() {
            [single] => {
                let n = parse(single)?;
                (n, n)
            }
            [lo, hi] => (parse(lo)?, parse(hi)?),
            _ => unreachable!("splitn(2) yields at most two pieces"),
        };
        if lo > hi {
            return bad(format!("range {lo}-{hi} is reversed"));
        }
        for size in (lo..=hi).step_by(2) {
            if size % 2 == 0 || !(5..=15).contains(&size) {
                return bad(format!("size {size} must be odd and within 5..=15"));
            }
            if !sizes.contains(&size) {
                sizes.push(size);
            }
        }
    }
    if sizes.is_empty() {
        return bad("no sizes given".to_string());
    }
    Ok(sizes)
}

pub fn parse_agent_variant(name: &str) -> CliResult<AgentVariant> {
    match name {
        "neural-map" => Ok(AgentVariant::NeuralMap),
        "lstm" => Ok(AgentVariant::Lstm),
        "mqn" => Ok(AgentVariant::Mqn),
        "random" => Ok(AgentVariant::Random),
        "oracle" => Ok(AgentVariant::Oracle),
        other => Err(CliError::Usage(format!(
            "unknown agent {other:?}; expected neural-map, lstm, mqn, random, or oracle"
        ))),
    }
}

/// Parses the `NMAP_SEED` environment variable's raw value.
pub fn seed_from_env(raw: Option<&str>) -> CliResult<Option<u64>> {
    match raw {
        None => Ok(None),
        Some(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("NMAP_SEED {text:?} is not an unsigned integer"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_lists_parse_and_dedupe() {
        assert_eq!(parse_sizes("7-15").unwrap(), vec![7, 9, 11, 13, 15]);
        assert_eq!(parse_sizes("5,7").unwrap(), vec![5, 7]);
        assert_eq!(parse_sizes("5,9-13,5").unwrap(), vec![5, 9, 11, 13]);
        assert_eq!(parse_sizes(" 5 , 7 ").unwrap(), vec![5, 7]);
    }

    #[test]
    fn bad_size_lists_are_usage_errors() {
        for text in ["", "4", "17", "6-10", "9-7", "a", "5,,7", "5-"] {
            let err = parse_sizes(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text:?} gave {err}");
        }
    }

    #[test]
    fn agent_names_round_trip() {
        for (name, variant) in [
            ("neural-map", AgentVariant::NeuralMap),
            ("lstm", AgentVariant::Lstm),
            ("mqn", AgentVariant::Mqn),
            ("random", AgentVariant::Random),
            ("oracle", AgentVariant::Oracle),
        ] {
            assert_eq!(parse_agent_variant(name).unwrap(), variant);
        }
        assert_eq!(parse_agent_variant("dqn").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn config_rejects_unknown_keys_at_any_depth() {
        let default = RunConfig::default();
        let json = serde_json::to_string_pretty(&default).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, default);

        for bad in [
            "{\"mystery\": 1}",
            "{\"train\": {\"mystery\": 1}}",
            "{\"agent\": {\"mystery\": 1}}",
            "{\"agent\": {\"map\": {\"mystery\": 1}}}",
        ] {
            assert!(serde_json::from_str::<RunConfig>(bad).is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn env_seed_parses_or_complains() {
        assert_eq!(seed_from_env(None).unwrap(), None);
        assert_eq!(seed_from_env(Some("42")).unwrap(), Some(42));
        assert_eq!(seed_from_env(Some(" 7 ")).unwrap(), Some(7));
        assert_eq!(seed_from_env(Some("-1")).unwrap_err().exit_code(), 1);
        assert_eq!(seed_from_env(Some("x")).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn config_loads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, "{\"seed\": 9, \"eval-cap\": 50}").unwrap();
        let config = RunConfig::load(&path).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.eval_cap, 50);
        assert_eq!(config.train, TrainConfig::default());
        assert_eq!(RunConfig::load(&dir.path().join("absent.json")).unwrap_err().exit_code(), 1);
    }
}
