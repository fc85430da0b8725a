//! The five commands: maze-set generation, training, evaluation,
//! attention export, and the gradient suite.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, AgentSpec, AgentVariant};
use crate::autodiff::checkpoint::{self, read_manifest};
use crate::autodiff::gradcheck::op_suite;
use crate::autodiff::{ParamStore, Real};
use crate::env::{build_test_set_from, hash_set, load_maze_set, save_maze_set, MazeSpec};
use crate::map::composed_suite;
use crate::map::heatmap::write_heatmap;
use crate::trainer::{evaluate, train_loop, training_eval_set, EvalReport, TrainResult};

use super::config::{parse_agent_variant, RunConfig};
use super::episode::run_heatmap_episode;
use super::{CliError, CliResult};

/// Mixed into the run seed for evaluation episodes so their color draws
/// never replay a training environment's stream.
const EVAL_SEED_XOR: u64 = 0x6576_616c;

pub struct GenMazesArgs {
    pub count: usize,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Builds a held-out maze set and reports how many mazes of each size it
/// contains.
pub fn cmd_gen_mazes(args: &GenMazesArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mazes = build_test_set_from(args.count, &args.sizes, &mut rng)?;
    save_maze_set(&args.out, &mazes)?;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for maze in &mazes {
        *counts.entry(maze.size).or_default() += 1;
    }
    for (size, count) in &counts {
        writeln!(out, "size {size}: {count}")?;
    }
    writeln!(out, "wrote {} mazes to {}", mazes.len(), args.out.display())?;
    Ok(())
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub agent: Option<String>,
    pub steps: Option<u64>,
    pub test_set: PathBuf,
    pub out_dir: PathBuf,
    /// From `NMAP_SEED`; wins over the config file.
    pub seed_override: Option<u64>,
}

#[derive(Debug)]
pub struct TrainSummary {
    pub config: RunConfig,
    pub env_steps: u64,
    pub checkpoints: Vec<PathBuf>,
    pub report: BTreeMap<String, f64>,
    pub report_path: PathBuf,
}

/// Success rates under the six reporting keys: training-distribution and
/// held-out halves, each split small / large / total.
fn six_key_report(train: &EvalReport, test: &EvalReport) -> BTreeMap<String, f64> {
    let mut report = BTreeMap::new();
    for (prefix, half) in [("train", train), ("test", test)] {
        report.insert(format!("{prefix}_small"), half.small.success_rate());
        report.insert(format!("{prefix}_large"), half.large.success_rate());
        report.insert(format!("{prefix}_total"), half.total.success_rate());
    }
    report
}

/// Trains per the run config (flags win over the file), then evaluates on
/// the held-out set and a fresh training-distribution sample. The run
/// directory receives the config copy, `metrics.csv`, checkpoints, and
/// `eval_report.json`.
pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<TrainSummary> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &args.agent {
        config.agent.variant = parse_agent_variant(name)?;
    }
    if let Some(steps) = args.steps {
        config.train.total_steps = steps;
    }
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }
    config.validate()?;
    if config.agent.variant == AgentVariant::Oracle && config.train.total_steps > 0 {
        return Err(CliError::Usage(
            "the oracle has no trainable policy; use --steps 0 for an evaluation-only checkpoint"
                .to_string(),
        ));
    }
    if !args.test_set.exists() {
        return Err(CliError::Usage(format!(
            "held-out maze set {} does not exist; build one with gen-mazes first",
            args.test_set.display()
        )));
    }
    let test_mazes = load_maze_set(&args.test_set)?;
    let test_hashes = hash_set(&test_mazes);

    fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::Usage(format!("cannot create run directory {}: {e}", args.out_dir.display()))
    })?;
    let config_path = args.out_dir.join("config.json");
    let config_json = serde_json::to_string_pretty(&config)
        .map_err(|e| CliError::Runtime(format!("config serialize: {e}")))?;
    fs::write(&config_path, config_json + "\n")?;

    writeln!(
        out,
        "training {:?} for {} env-steps (seed {}, {} held-out mazes)",
        config.agent.variant, config.train.total_steps, config.seed, test_mazes.len()
    )?;
    let result: TrainResult<f32> =
        train_loop(&config.train, &config.agent, config.seed, &test_hashes, &args.out_dir)?;
    writeln!(
        out,
        "trained {} env-steps: {} metrics rows, {} checkpoints",
        result.env_steps,
        result.rows,
        result.checkpoints.len()
    )?;

    let eval_seed = config.seed ^ EVAL_SEED_XOR;
    let train_eval_mazes = training_eval_set(
        config.eval_train_mazes,
        &config.train.sizes,
        &test_hashes,
        eval_seed.wrapping_add(1),
    )?;
    let train_half = evaluate(&result.agent, &result.store, &train_eval_mazes, config.eval_cap, eval_seed)?;
    let test_half = evaluate(&result.agent, &result.store, &test_mazes, config.eval_cap, eval_seed)?;
    let report = six_key_report(&train_half, &test_half);

    let report_path = args.out_dir.join("eval_report.json");
    let report_json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("report serialize: {e}")))?;
    fs::write(&report_path, report_json + "\n")?;
    for (key, rate) in &report {
        writeln!(out, "{key}: {:.1}%", rate * 100.0)?;
    }

    Ok(TrainSummary {
        config,
        env_steps: result.env_steps,
        checkpoints: result.checkpoints,
        report,
        report_path,
    })
}

/// Reconstructs the agent a training checkpoint describes and restores
/// its weights, failing with the offending parameter names on mismatch.
fn restore<E: Real>(path: &Path, spec: &AgentSpec, seed: u64) -> CliResult<(ParamStore<E>, Agent)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<E> = ParamStore::new();
    let agent = Agent::register(spec.clone(), &mut store, &mut rng)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    checkpoint::load(path, &mut store, None)?;
    Ok((store, agent))
}

/// The checkpoint's agent spec, element type, and stored seed.
fn checkpoint_header(path: &Path) -> CliResult<(AgentSpec, String, u64)> {
    if !path.exists() {
        return Err(CliError::Usage(format!("checkpoint {} does not exist", path.display())));
    }
    let manifest = read_manifest(path)?;
    let spec_value = manifest.meta.get("agent-spec").ok_or_else(|| {
        CliError::Runtime(format!(
            "checkpoint {} carries no agent-spec metadata; was it written by train?",
            path.display()
        ))
    })?;
    let spec: AgentSpec = serde_json::from_value(spec_value.clone())
        .map_err(|e| CliError::Runtime(format!("checkpoint agent-spec: {e}")))?;
    let dtype = manifest
        .entries
        .first()
        .map(|e| e.dtype.clone())
        .unwrap_or_else(|| "f32".to_string());
    Ok((spec, dtype, manifest.seed))
}

fn load_mazes_arg(path: &Path) -> CliResult<Vec<MazeSpec>> {
    if !path.exists() {
        return Err(CliError::Usage(format!("maze set {} does not exist", path.display())));
    }
    Ok(load_maze_set(path)?)
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub maze_set: PathBuf,
    pub cap: usize,
    /// Report JSON destination; `None` prints only.
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
}

/// Evaluates a checkpoint over a maze set and reports success rates and
/// mean episode lengths per size bucket.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<EvalReport> {
    if args.cap == 0 {
        return Err(CliError::Usage("--cap must be at least 1".to_string()));
    }
    let (spec, dtype, stored_seed) = checkpoint_header(&args.checkpoint)?;
    let mazes = load_mazes_arg(&args.maze_set)?;
    let seed = args.seed_override.unwrap_or(stored_seed) ^ EVAL_SEED_XOR;
    let report = match dtype.as_str() {
        "f64" => {
            let (store, agent) = restore::<f64>(&args.checkpoint, &spec, stored_seed)?;
            evaluate(&agent, &store, &mazes, args.cap, seed)?
        }
        _ => {
            let (store, agent) = restore::<f32>(&args.checkpoint, &spec, stored_seed)?;
            evaluate(&agent, &store, &mazes, args.cap, seed)?
        }
    };

    writeln!(out, "{:<8} {:>9} {:>13} {:>12}", "bucket", "episodes", "success-rate", "mean-length")?;
    let mut lines: Vec<(String, crate::trainer::BucketStats)> = vec![
        ("small".to_string(), report.small),
        ("large".to_string(), report.large),
        ("total".to_string(), report.total),
    ];
    for (size, stats) in &report.per_size {
        lines.push((format!("size-{size}"), *stats));
    }
    for (label, stats) in &lines {
        writeln!(
            out,
            "{label:<8} {:>9} {:>12.1}% {:>12.1}",
            stats.episodes,
            stats.success_rate() * 100.0,
            stats.mean_length()
        )?;
    }

    if let Some(path) = &args.out {
        let mut json = serde_json::Map::new();
        for (label, stats) in &lines {
            let mut entry = serde_json::Map::new();
            entry.insert("episodes".to_string(), stats.episodes.into());
            entry.insert("success-rate".to_string(), stats.success_rate().into());
            entry.insert("mean-length".to_string(), stats.mean_length().into());
            json.insert(label.clone(), entry.into());
        }
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(json))
            .map_err(|e| CliError::Runtime(format!("report serialize: {e}")))?;
        fs::write(path, text + "\n")?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(report)
}

pub struct HeatmapArgs {
    pub checkpoint: PathBuf,
    pub maze_set: PathBuf,
    /// A maze id in decimal or `0x` hex, or `@<line>` for a position in
    /// the set.
    pub maze_id: String,
    pub out: PathBuf,
    pub seed_override: Option<u64>,
}

fn find_maze(mazes: &[MazeSpec], key: &str) -> CliResult<MazeSpec> {
    if let Some(index_text) = key.strip_prefix('@') {
        let index: usize = index_text
            .parse()
            .map_err(|_| CliError::Usage(format!("maze index {key:?} is not @<number>")))?;
        return mazes.get(index).cloned().ok_or_else(|| {
            CliError::Usage(format!("maze index {index} out of range; the set has {}", mazes.len()))
        });
    }
    let id = match key.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => key.parse(),
    }
    .map_err(|_| CliError::Usage(format!("maze id {key:?} is neither a number nor @<index>")))?;
    mazes.iter().find(|m| m.id == id).cloned().ok_or_else(|| {
        CliError::Usage(format!("maze id {id} (0x{id:x}) is not in the set of {}", mazes.len()))
    })
}

/// Runs one greedy episode of a map-agent checkpoint on the chosen maze
/// and writes the per-step attention file.
pub fn cmd_heatmap(args: &HeatmapArgs, out: &mut dyn Write) -> CliResult<()> {
    let (spec, dtype, stored_seed) = checkpoint_header(&args.checkpoint)?;
    let mazes = load_mazes_arg(&args.maze_set)?;
    let maze = find_maze(&mazes, &args.maze_id)?;
    let seed = args.seed_override.unwrap_or(stored_seed) ^ EVAL_SEED_XOR;
    let cap = crate::env::EVAL_STEP_LIMIT;
    let trace = match dtype.as_str() {
        "f64" => {
            let (store, agent) = restore::<f64>(&args.checkpoint, &spec, stored_seed)?;
            run_heatmap_episode(&agent, &store, maze, cap, seed)?
        }
        _ => {
            let (store, agent) = restore::<f32>(&args.checkpoint, &spec, stored_seed)?;
            run_heatmap_episode(&agent, &store, maze, cap, seed)?
        }
    };
    write_heatmap(&args.out, &trace.rows)?;
    writeln!(
        out,
        "maze {:x}: {} steps, outcome {:?}, indicator {:?}; wrote {}",
        trace.maze_id,
        trace.rows.len(),
        trace.outcome,
        trace.color,
        args.out.display()
    )?;
    Ok(())
}

/// Runs the finite-difference suite over every differentiation rule and
/// the composed memory step, one line per check. Any failure exits
/// through [`CliError::CheckFailed`].
pub fn cmd_gradcheck(seed: u64, out: &mut dyn Write) -> CliResult<()> {
    let mut results = op_suite(seed);
    results.extend(composed_suite(seed));
    let failures = results.iter().filter(|r| !r.passed).count();
    for result in &results {
        writeln!(out, "{result}")?;
    }
    if failures > 0 {
        writeln!(out, "{failures} of {} checks failed", results.len())?;
        return Err(CliError::CheckFailed);
    }
    writeln!(out, "all {} checks passed", results.len())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::load_maze_set;

    fn sink() -> Vec<u8> {
        Vec::new()
    }

    #[test]
    fn gen_mazes_writes_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.jsonl");
        let args = GenMazesArgs { count: 12, sizes: vec![5, 7], seed: 3, out: path.clone() };
        let mut out = sink();
        cmd_gen_mazes(&args, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("wrote 12 mazes"), "{text}");
        let mazes = load_maze_set(&path).unwrap();
        assert_eq!(mazes.len(), 12);
        // the printed per-size counts add up
        let fives = mazes.iter().filter(|m| m.size == 5).count();
        if fives > 0 {
            assert!(text.contains(&format!("size 5: {fives}")), "{text}");
        }
    }

    #[test]
    fn gen_mazes_same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        for path in [&a, &b] {
            let args =
                GenMazesArgs { count: 8, sizes: vec![7], seed: 11, out: path.clone() };
            cmd_gen_mazes(&args, &mut sink()).unwrap();
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn gen_mazes_zero_count_is_a_valid_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let args = GenMazesArgs { count: 0, sizes: vec![7], seed: 0, out: path.clone() };
        cmd_gen_mazes(&args, &mut sink()).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
        assert!(load_maze_set(&path).unwrap().is_empty());
    }

    fn write_test_set(dir: &Path, count: usize) -> PathBuf {
        let path = dir.join("test_set.jsonl");
        let args = GenMazesArgs { count, sizes: vec![5, 7], seed: 99, out: path.clone() };
        cmd_gen_mazes(&args, &mut sink()).unwrap();
        path
    }

    fn smoke_train(dir: &Path, agent: &str, steps: u64) -> TrainSummary {
        let test_set = write_test_set(dir, 6);
        let config = RunConfig {
            train: crate::trainer::TrainConfig {
                n_envs: 2,
                rollout_len: 5,
                checkpoint_interval: 20,
                sizes: vec![5, 7],
                step_limit: 20,
                ..Default::default()
            },
            agent: AgentSpec {
                map: crate::map::NeuralMapConfig {
                    channels: 8,
                    height: 5,
                    width: 5,
                    ..crate::map::NeuralMapConfig::default()
                },
                ..AgentSpec::default()
            },
            eval_cap: 30,
            eval_train_mazes: 4,
            ..RunConfig::default()
        };
        let config_path = dir.join("run.json");
        fs::write(&config_path, serde_json::to_string(&config).unwrap()).unwrap();
        let args = TrainArgs {
            config: Some(config_path),
            agent: Some(agent.to_string()),
            steps: Some(steps),
            test_set,
            out_dir: dir.join("run"),
            seed_override: Some(5),
        };
        cmd_train(&args, &mut sink()).unwrap()
    }

    #[test]
    fn train_smoke_run_produces_the_full_run_directory() {
        let dir = tempfile::tempdir().unwrap();
        let summary = smoke_train(dir.path(), "neural-map", 40);
        assert_eq!(summary.env_steps, 40);
        assert!(!summary.checkpoints.is_empty());
        let run = dir.path().join("run");
        assert!(run.join("config.json").exists());
        assert!(run.join("metrics.csv").exists());
        assert!(summary.report_path.exists());
        // the config copy reloads to the exact effective config
        let copy = RunConfig::load(&run.join("config.json")).unwrap();
        assert_eq!(copy, summary.config);
        assert_eq!(copy.seed, 5, "NMAP_SEED override must reach the copy");
        let keys: Vec<&str> = summary.report.keys().map(|k| k.as_str()).collect();
        assert_eq!(
            keys,
            ["test_large", "test_small", "test_total", "train_large", "train_small", "train_total"]
        );
    }

    #[test]
    fn train_refuses_without_test_set() {
        let dir = tempfile::tempdir().unwrap();
        let args = TrainArgs {
            config: None,
            agent: None,
            steps: Some(10),
            test_set: dir.path().join("missing.jsonl"),
            out_dir: dir.path().join("run"),
            seed_override: None,
        };
        let err = cmd_train(&args, &mut sink()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(!dir.path().join("run").exists(), "refusal must not create the run dir");
    }

    #[test]
    fn train_random_agent_still_evaluates() {
        let dir = tempfile::tempdir().unwrap();
        let summary = smoke_train(dir.path(), "random", 20);
        assert_eq!(summary.report.len(), 6);
        assert!(summary.report.values().all(|r| (0.0..=1.0).contains(r)));
    }

    #[test]
    fn train_rejects_oracle_with_steps() {
        let dir = tempfile::tempdir().unwrap();
        let test_set = write_test_set(dir.path(), 4);
        let args = TrainArgs {
            config: None,
            agent: Some("oracle".to_string()),
            steps: Some(10),
            test_set,
            out_dir: dir.path().join("run"),
            seed_override: None,
        };
        assert_eq!(cmd_train(&args, &mut sink()).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn eval_of_oracle_checkpoint_is_perfect_and_cap_one_is_zero() {
        let dir = tempfile::tempdir().unwrap();
        let summary = smoke_train(dir.path(), "oracle", 0);
        let checkpoint = summary.checkpoints.last().unwrap().clone();
        let maze_set = dir.path().join("test_set.jsonl");

        let mut out = sink();
        let report = cmd_eval(
            &EvalArgs {
                checkpoint: checkpoint.clone(),
                maze_set: maze_set.clone(),
                cap: 500,
                out: Some(dir.path().join("report.json")),
                seed_override: None,
            },
            &mut out,
        )
        .unwrap();
        assert_eq!(report.total.successes, report.total.episodes);
        assert!((report.total.success_rate() - 1.0).abs() < 1e-12);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("100.0%"), "{text}");
        assert!(dir.path().join("report.json").exists());

        let capped = cmd_eval(
            &EvalArgs {
                checkpoint,
                maze_set,
                cap: 1,
                out: None,
                seed_override: None,
            },
            &mut sink(),
        )
        .unwrap();
        assert_eq!(capped.total.successes, 0);
    }

    #[test]
    fn eval_reports_shape_mismatches_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let summary = smoke_train(dir.path(), "neural-map", 20);
        let checkpoint = summary.checkpoints.last().unwrap().clone();
        // rewrite the checkpoint's spec to a wider map: the stored arrays
        // no longer fit the freshly registered shapes
        let manifest = read_manifest(&checkpoint).unwrap();
        let mut spec: AgentSpec =
            serde_json::from_value(manifest.meta["agent-spec"].clone()).unwrap();
        spec.map.channels = 16;
        let bytes = fs::read(&checkpoint).unwrap();
        let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut m: serde_json::Value = serde_json::from_slice(&bytes[12..12 + mlen]).unwrap();
        m["meta"]["agent-spec"] = serde_json::to_value(&spec).unwrap();
        let mjson = serde_json::to_vec(&m).unwrap();
        let mut tampered = Vec::new();
        tampered.extend_from_slice(&bytes[..8]);
        tampered.extend_from_slice(&(mjson.len() as u32).to_le_bytes());
        tampered.extend_from_slice(&mjson);
        tampered.extend_from_slice(&bytes[12 + mlen..]);
        let bad = dir.path().join("tampered.nmck");
        fs::write(&bad, tampered).unwrap();

        let err = cmd_eval(
            &EvalArgs {
                checkpoint: bad,
                maze_set: dir.path().join("test_set.jsonl"),
                cap: 10,
                out: None,
                seed_override: None,
            },
            &mut sink(),
        )
        .unwrap_err();
        let text = err.to_string();
        assert_eq!(err.exit_code(), 2);
        assert!(text.contains("map/"), "no parameter names in: {text}");
    }

    #[test]
    fn heatmap_runs_on_map_checkpoints_only() {
        let dir = tempfile::tempdir().unwrap();
        let summary = smoke_train(dir.path(), "neural-map", 20);
        let checkpoint = summary.checkpoints.last().unwrap().clone();
        let maze_set = dir.path().join("test_set.jsonl");
        let heat = dir.path().join("ep.csv");
        let mut out = sink();
        cmd_heatmap(
            &HeatmapArgs {
                checkpoint,
                maze_set: maze_set.clone(),
                maze_id: "@0".to_string(),
                out: heat.clone(),
                seed_override: None,
            },
            &mut out,
        )
        .unwrap();
        let rows = crate::map::heatmap::read_heatmap(&heat).unwrap();
        assert!(!rows.is_empty());
        for row in &rows {
            let sum: f64 = row.alpha.iter().sum();
            assert!((sum - 1.0).abs() < 1e-5);
        }

        let lstm = smoke_train(dir.path(), "lstm", 20);
        let err = cmd_heatmap(
            &HeatmapArgs {
                checkpoint: lstm.checkpoints.last().unwrap().clone(),
                maze_set,
                maze_id: "@0".to_string(),
                out: dir.path().join("nope.csv"),
                seed_override: None,
            },
            &mut sink(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("neural-map"), "{err}");
    }

    #[test]
    fn heatmap_maze_lookup_by_id_and_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_test_set(dir.path(), 5);
        let mazes = load_maze_set(&path).unwrap();
        assert_eq!(find_maze(&mazes, "@2").unwrap().id, mazes[2].id);
        let id = mazes[3].id;
        assert_eq!(find_maze(&mazes, &id.to_string()).unwrap().id, id);
        assert_eq!(find_maze(&mazes, &format!("0x{id:x}")).unwrap().id, id);
        assert_eq!(find_maze(&mazes, "@99").unwrap_err().exit_code(), 1);
        assert_eq!(find_maze(&mazes, "12345").unwrap_err().exit_code(), 1);
        assert_eq!(find_maze(&mazes, "bogus").unwrap_err().exit_code(), 1);
    }

    #[test]
    fn gradcheck_command_prints_every_check() {
        let mut out = sink();
        cmd_gradcheck(5, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("map_step/"), "{text}");
        assert!(text.contains("all "), "{text}");
        let mut again = sink();
        cmd_gradcheck(5, &mut again).unwrap();
        assert_eq!(text, String::from_utf8(again).unwrap());
    }
}
