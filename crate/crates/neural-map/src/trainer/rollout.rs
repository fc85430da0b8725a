//! Synchronous rollout collection: a fixed set of environments advanced
//! in lockstep, all forwards recorded on one shared graph so a single
//! backward pass later serves the whole update.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, AgentCarry, CarrySnapshot, StepContext};
use crate::autodiff::{AdError, AdResult, Binding, Graph, Real, Value};
use crate::env::{sample_training_maze_from, GoalSearchEnv, Observation, Outcome, STEP_PENALTY};

/// One transition's contribution to the update, all scalars.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Log-probability of the chosen action.
    pub log_prob: Value,
    /// State-value estimate.
    pub value: Value,
    /// Policy entropy.
    pub entropy: Value,
    pub reward: f64,
    /// The episode ended on this transition.
    pub done: bool,
}

/// All transitions of one rollout, grouped per environment in time order.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub steps: Vec<Vec<StepRecord>>,
    /// Value estimate of each environment's state after the last step;
    /// ignored by the return recursion wherever that step ended an episode.
    pub bootstrap: Vec<f64>,
}

/// A finished episode's summary.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeStat {
    /// Undiscounted reward total.
    pub ret: f64,
    pub steps: usize,
    /// The correct goal was reached.
    pub success: bool,
    /// Maze size the episode ran in.
    pub size: usize,
}

/// Discounted returns `G_t = r_t + gamma * G_{t+1}`, restarted at episode
/// ends and seeded with `bootstrap` past the rollout horizon.
pub fn compute_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len(), "reward/done length mismatch");
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// The training environments plus everything that persists between
/// rollouts: observations, detached carries, and one RNG stream per
/// environment so runs replay exactly for a given seed.
pub struct EnvPool<E> {
    envs: Vec<GoalSearchEnv>,
    observations: Vec<Observation>,
    carries: Vec<CarrySnapshot<E>>,
    rngs: Vec<ChaCha8Rng>,
    running_return: Vec<f64>,
    running_steps: Vec<usize>,
    sizes: Vec<usize>,
    test_hashes: HashSet<u64>,
    step_limit: usize,
}

impl<E: Real> EnvPool<E> {
    /// Starts `n_envs` episodes on fresh mazes. Stream 0 of the seed is
    /// reserved for parameter initialization; environment `i` draws from
    /// stream `i + 1`.
    pub fn new(
        agent: &Agent,
        n_envs: usize,
        sizes: &[usize],
        test_hashes: HashSet<u64>,
        step_limit: usize,
        seed: u64,
    ) -> AdResult<EnvPool<E>> {
        if n_envs == 0 {
            return Err(AdError::Argument {
                op: "env-pool",
                message: "at least one environment required".to_string(),
            });
        }
        let mut pool = EnvPool {
            envs: Vec::with_capacity(n_envs),
            observations: Vec::with_capacity(n_envs),
            carries: Vec::with_capacity(n_envs),
            rngs: Vec::with_capacity(n_envs),
            running_return: vec![0.0; n_envs],
            running_steps: vec![0; n_envs],
            sizes: sizes.to_vec(),
            test_hashes,
            step_limit,
        };
        for i in 0..n_envs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let maze = sample_training_maze_from(&mut rng, &pool.sizes, &pool.test_hashes)?;
            let (env, obs) = GoalSearchEnv::reset(maze, step_limit, STEP_PENALTY, &mut rng);
            pool.envs.push(env);
            pool.observations.push(obs);
            let mut g: Graph<E> = Graph::inference();
            let carry = agent.initial_carry(&mut g);
            pool.carries.push(carry.snapshot(&g));
            pool.rngs.push(rng);
        }
        Ok(pool)
    }

    pub fn n_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn carries(&self) -> &[CarrySnapshot<E>] {
        &self.carries
    }
}

/// Runs every environment forward `rollout_len` steps, sampling actions
/// from the live policy. Finished episodes reset in place: fresh maze,
/// fresh carry, so no recurrent state leaks across the boundary. Returns
/// the recorded transitions and the episodes completed along the way.
pub fn collect_rollout<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    agent: &Agent,
    pool: &mut EnvPool<E>,
    rollout_len: usize,
) -> AdResult<(RolloutBuffer, Vec<EpisodeStat>)> {
    let n = pool.envs.len();
    let mut carries: Vec<AgentCarry> = Vec::with_capacity(n);
    for snap in &pool.carries {
        carries.push(AgentCarry::restore(&agent.spec, g, snap)?);
    }
    let mut steps: Vec<Vec<StepRecord>> =
        (0..n).map(|_| Vec::with_capacity(rollout_len)).collect();
    let mut episodes = Vec::new();

    for _ in 0..rollout_len {
        for i in 0..n {
            let ctx = StepContext {
                pose: pool.envs[i].pose(),
                velocity: pool.envs[i].last_velocity(),
                world: pool.envs[i].maze().size,
            };
            let (action, out, next) = agent.act(
                g,
                binding,
                carries[i].clone(),
                &pool.observations[i],
                &ctx,
                false,
                &mut pool.rngs[i],
            )?;
            let log_prob = g.pick(out.log_probs, action.index())?;
            let result = pool.envs[i].step(action).map_err(|e| AdError::State {
                op: "rollout",
                message: format!("environment {i}: {e}"),
            })?;
            pool.running_return[i] += result.reward;
            pool.running_steps[i] += 1;
            steps[i].push(StepRecord {
                log_prob,
                value: out.value,
                entropy: out.entropy,
                reward: result.reward,
                done: result.done,
            });
            if result.done {
                episodes.push(EpisodeStat {
                    ret: pool.running_return[i],
                    steps: pool.running_steps[i],
                    success: result.info.outcome == Outcome::CorrectGoal,
                    size: pool.envs[i].maze().size,
                });
                pool.running_return[i] = 0.0;
                pool.running_steps[i] = 0;
                let maze =
                    sample_training_maze_from(&mut pool.rngs[i], &pool.sizes, &pool.test_hashes)?;
                let (env, obs) =
                    GoalSearchEnv::reset(maze, pool.step_limit, STEP_PENALTY, &mut pool.rngs[i]);
                pool.envs[i] = env;
                pool.observations[i] = obs;
                carries[i] = agent.initial_carry(g);
            } else {
                pool.observations[i] = result.observation;
                carries[i] = next;
            }
        }
    }

    // bootstrap values for the states the rollout stopped in; the extra
    // forward's carry is discarded, it must not advance memory
    let mut bootstrap = Vec::with_capacity(n);
    for i in 0..n {
        let ctx = StepContext {
            pose: pool.envs[i].pose(),
            velocity: pool.envs[i].last_velocity(),
            world: pool.envs[i].maze().size,
        };
        let (out, _) =
            agent.forward(g, binding, carries[i].clone(), &pool.observations[i], &ctx)?;
        bootstrap.push(g.data(out.value)[0].as_f64());
    }
    for (snap, carry) in pool.carries.iter_mut().zip(&carries) {
        *snap = carry.snapshot(g);
    }
    Ok((RolloutBuffer { steps, bootstrap }, episodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentSpec, AgentVariant};
    use crate::autodiff::ParamStore;
    use crate::map::NeuralMapConfig;
    use rand::Rng;

    #[test]
    fn returns_match_worked_example() {
        let returns = compute_returns(&[0.0, 0.0, 1.0], &[false, false, true], 5.0, 0.9);
        let expect = [0.81, 0.9, 1.0];
        for (got, want) in returns.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{returns:?}");
        }
    }

    #[test]
    fn bootstrap_flows_through_open_tail() {
        let returns = compute_returns(&[0.0, 0.0], &[false, false], 2.0, 0.5);
        assert_eq!(returns, vec![0.5, 1.0]);
    }

    /// Direct forward sum, fully independent of the recursion.
    fn brute_force_return(
        rewards: &[f64],
        dones: &[bool],
        bootstrap: f64,
        gamma: f64,
        t: usize,
    ) -> f64 {
        let mut total = 0.0;
        let mut disc = 1.0;
        for u in t..rewards.len() {
            total += disc * rewards[u];
            if dones[u] {
                return total;
            }
            disc *= gamma;
        }
        total + disc * bootstrap
    }

    #[test]
    fn returns_equal_brute_force_on_random_buffers() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let len = rng.random_range(1..40);
            let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dones: Vec<bool> = (0..len).map(|_| rng.random_bool(0.2)).collect();
            let bootstrap = rng.random_range(-2.0..2.0);
            let gamma = rng.random_range(0.5..1.0);
            let returns = compute_returns(&rewards, &dones, bootstrap, gamma);
            for t in 0..len {
                let want = brute_force_return(&rewards, &dones, bootstrap, gamma, t);
                assert!((returns[t] - want).abs() < 1e-9, "t={t}");
            }
        }
    }

    fn small_spec() -> AgentSpec {
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

    fn collect_once(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store: ParamStore<f64> = ParamStore::new();
        let agent = Agent::register(small_spec(), &mut store, &mut rng).unwrap();
        let mut pool: EnvPool<f64> =
            EnvPool::new(&agent, 3, &[5], HashSet::new(), 100, seed).unwrap();
        let mut g = Graph::new();
        let binding = store.bind(&mut g);
        let (buffer, _) = collect_rollout(&mut g, &binding, &agent, &mut pool, 6).unwrap();
        let rewards = buffer.steps.iter().map(|s| s.iter().map(|r| r.reward).collect()).collect();
        (rewards, buffer.bootstrap)
    }

    #[test]
    fn rollout_shape_and_determinism() {
        let (r1, b1) = collect_once(5);
        let (r2, b2) = collect_once(5);
        assert_eq!(r1.len(), 3);
        assert!(r1.iter().all(|env| env.len() == 6));
        assert_eq!(r1, r2);
        assert_eq!(b1, b2);
        let (r3, _) = collect_once(6);
        assert_ne!(r1, r3, "different seeds should explore differently");
    }

    #[test]
    fn finished_episodes_reset_and_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store: ParamStore<f64> = ParamStore::new();
        let agent = Agent::register(small_spec(), &mut store, &mut rng).unwrap();
        // a 2-step limit forces several episode ends inside one rollout
        let mut pool: EnvPool<f64> = EnvPool::new(&agent, 2, &[5], HashSet::new(), 2, 9).unwrap();
        let mut g = Graph::new();
        let binding = store.bind(&mut g);
        let (buffer, episodes) = collect_rollout(&mut g, &binding, &agent, &mut pool, 8).unwrap();
        assert!(!episodes.is_empty());
        assert!(episodes.iter().all(|e| e.steps <= 2 && e.size == 5));
        let dones: usize = buffer
            .steps
            .iter()
            .map(|env| env.iter().filter(|r| r.done).count())
            .sum();
        assert_eq!(dones, episodes.len());
        // after the rollout the pool still runs: envs were reset in place
        let (_, more) = collect_rollout(&mut g, &binding, &agent, &mut pool, 8).unwrap();
        assert!(!more.is_empty());
    }

    #[test]
    fn carries_persist_between_rollouts() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut store: ParamStore<f64> = ParamStore::new();
        let agent = Agent::register(small_spec(), &mut store, &mut rng).unwrap();
        let mut pool: EnvPool<f64> =
            EnvPool::new(&agent, 1, &[5], HashSet::new(), 100, 13).unwrap();
        let before = pool.carries()[0].clone();
        let mut g = Graph::new();
        let binding = store.bind(&mut g);
        collect_rollout(&mut g, &binding, &agent, &mut pool, 4).unwrap();
        let after = pool.carries()[0].clone();
        assert_ne!(before, after, "map carry should have accumulated writes");
    }
}
