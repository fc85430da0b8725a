//! Fixed-policy evaluation over maze sets, reported by size bucket.

use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{oracle_action, Agent, AgentVariant, StepContext};
use crate::autodiff::{AdResult, Graph, ParamStore, Real};
use crate::env::{
    sample_training_maze_from, size_bucket, GoalSearchEnv, MazeSpec, Outcome, SizeBucket,
    STEP_PENALTY,
};

/// Episode tallies for one reporting bucket.
#[derive(Debug, Clone, Copy, Default)]
pub struct BucketStats {
    pub episodes: usize,
    pub successes: usize,
    pub total_steps: usize,
}

impl BucketStats {
    fn push(&mut self, success: bool, steps: usize) {
        self.episodes += 1;
        self.successes += usize::from(success);
        self.total_steps += steps;
    }

    /// Fraction of episodes ending at the correct goal; 0 when empty.
    pub fn success_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.successes as f64 / self.episodes as f64
        }
    }

    pub fn mean_length(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.total_steps as f64 / self.episodes as f64
        }
    }
}

/// Bucketed evaluation results. Small covers maze sizes 7 to 11, large
/// 13 to 15; sizes outside both still count toward the total.
#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub small: BucketStats,
    pub large: BucketStats,
    pub total: BucketStats,
    pub per_size: BTreeMap<usize, BucketStats>,
}

/// Runs one episode per maze and tallies outcomes. Learned agents act
/// greedily; the random baseline samples (its greedy tie-break would
/// otherwise collapse to a single action) and the oracle walks shortest
/// paths without a network. Episode `i` draws its indicator color from
/// stream `i` of `seed`, so a report is reproducible for a given set.
pub fn evaluate<E: Real>(
    agent: &Agent,
    store: &ParamStore<E>,
    mazes: &[MazeSpec],
    cap: usize,
    seed: u64,
) -> AdResult<EvalReport> {
    let mut report = EvalReport::default();
    for (index, maze) in mazes.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let (mut env, mut obs) = GoalSearchEnv::reset(maze.clone(), cap, STEP_PENALTY, &mut rng);

        let outcome = if agent.spec.variant == AgentVariant::Oracle {
            let mut last = Outcome::None;
            while !env.done() {
                let action = oracle_action(
                    env.maze(),
                    env.pose(),
                    env.correct_goal(),
                    Some(env.wrong_goal()),
                )?;
                last = env.step(action)?.info.outcome;
            }
            last
        } else {
            let greedy = agent.spec.variant != AgentVariant::Random;
            let mut g: Graph<E> = Graph::inference();
            let binding = store.bind(&mut g);
            let mut carry = agent.initial_carry(&mut g);
            let mut last = Outcome::None;
            while !env.done() {
                let ctx = StepContext {
                    pose: env.pose(),
                    velocity: env.last_velocity(),
                    world: env.maze().size,
                };
                let (action, _, next) =
                    agent.act(&mut g, &binding, carry, &obs, &ctx, greedy, &mut rng)?;
                carry = next;
                let result = env.step(action)?;
                obs = result.observation;
                last = result.info.outcome;
            }
            last
        };

        let success = outcome == Outcome::CorrectGoal;
        let steps = env.step_count();
        report.total.push(success, steps);
        match size_bucket(maze.size) {
            Some(SizeBucket::Small) => report.small.push(success, steps),
            Some(SizeBucket::Large) => report.large.push(success, steps),
            None => {}
        }
        report.per_size.entry(maze.size).or_default().push(success, steps);
    }
    Ok(report)
}

/// Samples `count` mazes from the training distribution, skipping any
/// whose hash appears in the held-out set, for the training-side half of
/// a final report.
pub fn training_eval_set(
    count: usize,
    sizes: &[usize],
    test_hashes: &HashSet<u64>,
    seed: u64,
) -> AdResult<Vec<MazeSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mazes = Vec::with_capacity(count);
    let mut seen = test_hashes.clone();
    while mazes.len() < count {
        let maze = sample_training_maze_from(&mut rng, sizes, &seen)?;
        seen.insert(maze.id);
        mazes.push(maze);
    }
    Ok(mazes)
}
