//! The training loop: rollouts, updates, a metrics log, and periodic
//! checkpoints, deterministic for a given seed.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{Agent, AgentSpec};
use crate::autodiff::{
    checkpoint, AdError, AdResult, Graph, ParamStore, Real, RmsProp, RmsPropConfig,
};
use crate::env::{TRAIN_SIZES, TRAIN_STEP_LIMIT};

use super::a2c::{a2c_update, A2cParams};
use super::metrics::{MetricsRow, CSV_HEADER};
use super::rollout::{collect_rollout, EnvPool, EpisodeStat};

/// Episodes contributing to each metrics row's aggregates.
const EPISODE_WINDOW: usize = 100;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Environments advanced in lockstep.
    pub n_envs: usize,
    /// Steps per environment between updates.
    pub rollout_len: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm ceiling.
    pub grad_clip: f64,
    /// Total environment steps to train for.
    pub total_steps: u64,
    /// Environment steps between checkpoints.
    pub checkpoint_interval: u64,
    /// Maze sizes the training distribution draws from.
    pub sizes: Vec<usize>,
    /// Per-episode step limit during training.
    pub step_limit: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_envs: 16,
            rollout_len: 20,
            gamma: 0.99,
            learning_rate: 7e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            grad_clip: 40.0,
            total_steps: 2_000_000,
            checkpoint_interval: 100_000,
            sizes: TRAIN_SIZES.to_vec(),
            step_limit: TRAIN_STEP_LIMIT,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> AdResult<()> {
        let fail = |message: String| Err(AdError::Argument { op: "train-config", message });
        if self.n_envs == 0 {
            return fail("n-envs must be at least 1".to_string());
        }
        if self.rollout_len == 0 {
            return fail("rollout-len must be at least 1".to_string());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning-rate {} must be positive", self.learning_rate));
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return fail("loss coefficients must be nonnegative".to_string());
        }
        if !(self.grad_clip > 0.0) {
            return fail(format!("grad-clip {} must be positive", self.grad_clip));
        }
        if self.checkpoint_interval == 0 {
            return fail("checkpoint-interval must be at least 1".to_string());
        }
        if self.sizes.is_empty() {
            return fail("sizes must not be empty".to_string());
        }
        for &s in &self.sizes {
            if s % 2 == 0 || !(5..=15).contains(&s) {
                return fail(format!("maze size {s} must be odd and within 5..=15"));
            }
        }
        if self.step_limit == 0 {
            return fail("step-limit must be at least 1".to_string());
        }
        Ok(())
    }

    pub fn a2c(&self) -> A2cParams {
        A2cParams {
            gamma: self.gamma,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
        }
    }

    pub fn optimizer(&self) -> RmsPropConfig {
        RmsPropConfig {
            learning_rate: self.learning_rate,
            decay: 0.99,
            epsilon: 1e-5,
            max_grad_norm: self.grad_clip,
        }
    }
}

/// Everything the caller needs after training: the learned weights stay
/// in memory so a final evaluation needs no reload.
pub struct TrainResult<E> {
    pub store: ParamStore<E>,
    pub agent: Agent,
    pub env_steps: u64,
    pub checkpoints: Vec<PathBuf>,
    pub metrics_path: PathBuf,
    pub rows: usize,
}

fn window_aggregates(window: &VecDeque<EpisodeStat>) -> (f64, f64, f64) {
    if window.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = window.len() as f64;
    let mean_return = window.iter().map(|e| e.ret).sum::<f64>() / n;
    let success = window.iter().filter(|e| e.success).count() as f64 / n;
    let mean_length = window.iter().map(|e| e.steps as f64).sum::<f64>() / n;
    (mean_return, success, mean_length)
}

fn save_checkpoint<E: Real>(
    run_dir: &Path,
    env_steps: u64,
    store: &ParamStore<E>,
    opt: &RmsProp<E>,
    spec: &AgentSpec,
    config: &TrainConfig,
    seed: u64,
) -> AdResult<PathBuf> {
    let mut meta = serde_json::Map::new();
    let to_value = |label: &str, v: serde_json::Result<serde_json::Value>| {
        v.map_err(|e| AdError::Checkpoint(format!("{label} encode: {e}")))
    };
    meta.insert("agent-spec".to_string(), to_value("agent spec", serde_json::to_value(spec))?);
    meta.insert(
        "train-config".to_string(),
        to_value("train config", serde_json::to_value(config))?,
    );
    meta.insert("env-steps".to_string(), env_steps.into());
    let path = run_dir.join(format!("ckpt_{env_steps}.nmck"));
    checkpoint::save(&path, store, Some(opt), seed, meta)?;
    Ok(path)
}

/// Trains an agent from scratch. Writes `metrics.csv` (one row per
/// update) and `ckpt_<envsteps>.nmck` files into `run_dir`; with zero
/// total steps only the initial checkpoint is written. A non-finite loss
/// or gradient aborts with the last completed metrics row attached.
pub fn train_loop<E: Real>(
    config: &TrainConfig,
    spec: &AgentSpec,
    seed: u64,
    test_hashes: &HashSet<u64>,
    run_dir: &Path,
) -> AdResult<TrainResult<E>> {
    config.validate()?;
    spec.validate()?;
    fs::create_dir_all(run_dir)?;

    // stream 0 initializes parameters; environment streams start at 1
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<E> = ParamStore::new();
    let agent = Agent::register(spec.clone(), &mut store, &mut init_rng)?;
    let mut opt = RmsProp::new(config.optimizer(), &store);
    let mut pool: EnvPool<E> = EnvPool::new(
        &agent,
        config.n_envs,
        &config.sizes,
        test_hashes.clone(),
        config.step_limit,
        seed,
    )?;

    let metrics_path = run_dir.join("metrics.csv");
    let mut metrics = fs::File::create(&metrics_path)?;
    writeln!(metrics, "{CSV_HEADER}")?;

    let hp = config.a2c();
    let steps_per_update = (config.n_envs * config.rollout_len) as u64;
    let mut env_steps: u64 = 0;
    let mut next_checkpoint = config.checkpoint_interval;
    let mut checkpoints = Vec::new();
    let mut window: VecDeque<EpisodeStat> = VecDeque::with_capacity(EPISODE_WINDOW);
    let mut last_row: Option<MetricsRow> = None;
    let mut rows = 0usize;
    let start = Instant::now();

    if config.total_steps == 0 {
        checkpoints.push(save_checkpoint(run_dir, 0, &store, &opt, spec, config, seed)?);
    }

    while env_steps < config.total_steps {
        let mut g: Graph<E> = Graph::new();
        let binding = store.bind(&mut g);
        let (buffer, episodes) =
            collect_rollout(&mut g, &binding, &agent, &mut pool, config.rollout_len)?;
        let stats = a2c_update(&mut g, &binding, &buffer, hp, &mut store, &mut opt)
            .map_err(|e| match &last_row {
                Some(row) => AdError::State {
                    op: "train",
                    message: format!("{e}; last metrics row: {row}"),
                },
                None => AdError::State {
                    op: "train",
                    message: format!("{e}; failed on the first update"),
                },
            })?;
        drop(g);
        env_steps += steps_per_update;

        for episode in episodes {
            if window.len() == EPISODE_WINDOW {
                window.pop_front();
            }
            window.push_back(episode);
        }
        let (mean_return, success_rate, mean_length) = window_aggregates(&window);
        let row = MetricsRow {
            env_steps,
            mean_return,
            success_rate,
            mean_length,
            policy_loss: stats.policy,
            value_loss: stats.value,
            entropy: stats.entropy,
            grad_norm: stats.grad_norm,
            wall_clock_s: start.elapsed().as_secs_f64(),
        };
        writeln!(metrics, "{}", row.to_csv())?;
        rows += 1;
        last_row = Some(row);

        if env_steps >= next_checkpoint || env_steps >= config.total_steps {
            checkpoints.push(save_checkpoint(
                run_dir, env_steps, &store, &opt, spec, config, seed,
            )?);
            while next_checkpoint <= env_steps {
                next_checkpoint += config.checkpoint_interval;
            }
        }
    }
    metrics.flush()?;

    Ok(TrainResult { store, agent, env_steps, checkpoints, metrics_path, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentVariant;
    use crate::map::NeuralMapConfig;

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            n_envs: 2,
            rollout_len: 5,
            total_steps: 40,
            checkpoint_interval: 20,
            sizes: vec![5],
            step_limit: 20,
            ..TrainConfig::default()
        }
    }

    fn tiny_spec() -> AgentSpec {
        AgentSpec {
            variant: AgentVariant::NeuralMap,
            map: NeuralMapConfig {
                channels: 8,
                height: 5,
                width: 5,
                ..NeuralMapConfig::default()
            },
            ..AgentSpec::default()
        }
    }

    #[test]
    fn loop_writes_metrics_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let result: TrainResult<f32> =
            train_loop(&tiny_config(), &tiny_spec(), 7, &HashSet::new(), dir.path()).unwrap();
        assert_eq!(result.env_steps, 40);
        assert_eq!(result.rows, 4);
        let text = fs::read_to_string(&result.metrics_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        // checkpoints at the interval crossings: 20 and 40
        assert_eq!(result.checkpoints.len(), 2);
        assert!(result.checkpoints[0].ends_with("ckpt_20.nmck"));
        assert!(result.checkpoints[1].ends_with("ckpt_40.nmck"));
        // a reload round-trips the weights
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut fresh: ParamStore<f32> = ParamStore::new();
        Agent::register(tiny_spec(), &mut fresh, &mut rng).unwrap();
        let run = checkpoint::load(&result.checkpoints[1], &mut fresh, None).unwrap();
        assert_eq!(run.seed, 7);
        assert_eq!(run.meta["env-steps"], 40);
        for id in fresh.ids() {
            assert_eq!(fresh.data(id), result.store.data(result.store.lookup(fresh.name(id)).unwrap()));
        }
    }

    #[test]
    fn zero_steps_leaves_initial_checkpoint_only() {
        let dir = tempfile::tempdir().unwrap();
        let config = TrainConfig { total_steps: 0, ..tiny_config() };
        let result: TrainResult<f32> =
            train_loop(&config, &tiny_spec(), 1, &HashSet::new(), dir.path()).unwrap();
        assert_eq!(result.rows, 0);
        assert_eq!(result.checkpoints.len(), 1);
        assert!(result.checkpoints[0].ends_with("ckpt_0.nmck"));
        let text = fs::read_to_string(&result.metrics_path).unwrap();
        assert_eq!(text.trim(), CSV_HEADER);
    }

    #[test]
    fn identical_seeds_reproduce_metrics_exactly() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a: TrainResult<f32> =
            train_loop(&tiny_config(), &tiny_spec(), 21, &HashSet::new(), dir_a.path()).unwrap();
        let b: TrainResult<f32> =
            train_loop(&tiny_config(), &tiny_spec(), 21, &HashSet::new(), dir_b.path()).unwrap();
        let rows = |path: &Path| -> Vec<MetricsRow> {
            fs::read_to_string(path)
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| MetricsRow::from_csv(l).unwrap())
                .collect()
        };
        let (ra, rb) = (rows(&a.metrics_path), rows(&b.metrics_path));
        assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            assert!(x.same_ignoring_clock(y), "rows diverged:\n{x}\n{y}");
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        for bad in [
            TrainConfig { n_envs: 0, ..tiny_config() },
            TrainConfig { gamma: 0.0, ..tiny_config() },
            TrainConfig { gamma: 1.5, ..tiny_config() },
            TrainConfig { sizes: vec![], ..tiny_config() },
            TrainConfig { sizes: vec![6], ..tiny_config() },
            TrainConfig { sizes: vec![17], ..tiny_config() },
            TrainConfig { checkpoint_interval: 0, ..tiny_config() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?} accepted");
        }
        tiny_config().validate().unwrap();
    }

    #[test]
    fn config_file_round_trips_and_rejects_unknown_keys() {
        let config = tiny_config();
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back: TrainConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, config);
        let err = serde_json::from_str::<TrainConfig>("{\"mystery-knob\": 3}").unwrap_err();
        assert!(err.to_string().contains("mystery-knob"));
    }
}
