//! One step of each agent: embed the observation, run the variant's
//! memory, and produce policy logits and a value estimate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{
    AdError, AdResult, Binding, Graph, ParamStore, Real, Shape, Value,
};
use crate::env::{bfs_path, bfs_path_avoiding, Action, MazeSpec, Observation};
use crate::map::{self, normalize_coords, AddressingVariant, Locus, Pose, Velocity};

use super::carry::AgentCarry;
use super::config::{AgentSpec, AgentVariant, ACTION_COUNT, MQN_SLOTS};
use super::net::{embed_observation, lstm_cell, mqn_lookup};
use super::params::{register_agent, AgentParams, TrunkCore, VariantParams};

/// Per-step facts the policy may address memory with.
#[derive(Debug, Clone, Copy)]
pub struct StepContext {
    pub pose: Pose,
    pub velocity: Velocity,
    /// World extent (maze size) for scaling positions onto the map.
    pub world: usize,
}

/// Everything the trainer needs from one forward pass.
#[derive(Debug, Clone)]
pub struct PolicyOutput<E> {
    /// `[3]` action preferences.
    pub logits: Value,
    /// `[1]` state-value estimate.
    pub value: Value,
    /// `[3]`, `log_softmax(logits)`.
    pub log_probs: Value,
    /// `[1]` policy entropy.
    pub entropy: Value,
    /// Detached spatial attention, map agent only (`H*W`, row-major).
    pub attention: Option<Vec<E>>,
}

pub struct Agent {
    pub spec: AgentSpec,
    pub params: AgentParams,
}

impl Agent {
    /// Registers all parameters for the chosen architecture.
    pub fn register<E: Real>(
        spec: AgentSpec,
        store: &mut ParamStore<E>,
        rng: &mut ChaCha8Rng,
    ) -> AdResult<Agent> {
        let params = register_agent(store, &spec, rng)?;
        Ok(Agent { spec, params })
    }

    pub fn initial_carry<E: Real>(&self, g: &mut Graph<E>) -> AgentCarry {
        AgentCarry::initial(&self.spec, g)
    }

    /// Maps the agent's world pose into map coordinates for absolute
    /// addressing, or the last displacement for egocentric addressing.
    fn locus(&self, ctx: &StepContext) -> AdResult<Locus> {
        let m = &self.spec.map;
        let extents = (m.width, m.height);
        let world = (ctx.world, ctx.world);
        match m.addressing {
            AddressingVariant::Absolute => {
                let (x, y) = normalize_coords(
                    (ctx.pose.x as f64, ctx.pose.y as f64),
                    world,
                    extents,
                )?;
                Ok(Locus::Absolute(Pose { x, y, heading: ctx.pose.heading }))
            }
            AddressingVariant::Egocentric => {
                // map-space displacement: where the previous pose landed
                // minus where the current one lands
                let prev = (ctx.pose.x - ctx.velocity.u, ctx.pose.y - ctx.velocity.v);
                let (px, py) = normalize_coords((prev.0 as f64, prev.1 as f64), world, extents)?;
                let (cx, cy) = normalize_coords(
                    (ctx.pose.x as f64, ctx.pose.y as f64),
                    world,
                    extents,
                )?;
                Ok(Locus::Egocentric(Velocity { u: cx - px, v: cy - py }))
            }
        }
    }

    /// One policy step. Consumes the carry and returns its successor in
    /// the same graph.
    pub fn forward<E: Real>(
        &self,
        g: &mut Graph<E>,
        binding: &Binding,
        carry: AgentCarry,
        obs: &Observation,
        ctx: &StepContext,
    ) -> AdResult<(PolicyOutput<E>, AgentCarry)> {
        let mismatch = || AdError::State {
            op: "agent-forward",
            message: "carry does not match the agent variant".into(),
        };

        if matches!(self.spec.variant, AgentVariant::Random | AgentVariant::Oracle) {
            if self.spec.variant == AgentVariant::Oracle {
                return Err(AdError::State {
                    op: "agent-forward",
                    message: "the oracle walker has no policy network; evaluation drives it \
                              directly from the maze"
                        .into(),
                });
            }
            if !matches!(carry, AgentCarry::Stateless) {
                return Err(mismatch());
            }
            let logits = g.leaf(vec![E::zero(); ACTION_COUNT], Shape::vector(ACTION_COUNT));
            let log_probs = g.log_softmax(logits)?;
            let value = g.leaf(vec![E::zero()], Shape::vector(1));
            let entropy = entropy_of(g, log_probs)?;
            let out = PolicyOutput { logits, value, log_probs, entropy, attention: None };
            return Ok((out, AgentCarry::Stateless));
        }

        let embed = self.params.embed.as_ref().expect("learned agents embed");
        let trunk = self.params.trunk.as_ref().expect("learned agents have a trunk");
        let obs_leaf = g.leaf(obs.to_elems(), Shape::vector(obs.bits.len()));
        let s = embed_observation(g, binding, embed, obs_leaf)?;

        // memory step per variant
        let mut attention = None;
        let (memory_out, mut next_carry) = match (&self.params.variant, carry) {
            (VariantParams::NeuralMap { map }, AgentCarry::NeuralMap { map: m, lstm }) => {
                let locus = self.locus(ctx)?;
                let step = map::map_step(g, binding, map, &self.spec.map, m, s, locus)?;
                attention = Some(step.attention);
                (step.o, AgentCarry::NeuralMap { map: step.new_map, lstm })
            }
            (VariantParams::Lstm(cell), AgentCarry::Lstm { h, c }) => {
                let (nh, nc) = lstm_cell(g, binding, cell, s, h, c)?;
                (nh, AgentCarry::Lstm { h: nh, c: nc })
            }
            (VariantParams::Mqn { key_w, value_w, query_w }, AgentCarry::Mqn { mut buffer }) => {
                buffer.push_back(s);
                if buffer.len() > MQN_SLOTS {
                    buffer.pop_front();
                }
                let slots: Vec<Value> = buffer.iter().copied().collect();
                let (out, _) = mqn_lookup(
                    g,
                    binding.value(*key_w),
                    binding.value(*value_w),
                    binding.value(*query_w),
                    &slots,
                    s,
                )?;
                (out, AgentCarry::Mqn { buffer })
            }
            _ => return Err(mismatch()),
        };

        // policy trunk: memory output, optionally joined by s_t
        let trunk_in = if self.spec.pure_ot || self.spec.variant == AgentVariant::Mqn {
            memory_out
        } else {
            g.concat(&[memory_out, s], 0)?
        };
        let hidden = match &trunk.core {
            TrunkCore::Linear { fc_w, fc_b } => {
                let pre = g.affine(trunk_in, binding.value(*fc_w), binding.value(*fc_b))?;
                g.tanh(pre)?
            }
            TrunkCore::Lstm(cell) => {
                let AgentCarry::NeuralMap { map, lstm: Some((h, c)) } = next_carry else {
                    return Err(mismatch());
                };
                let (nh, nc) = lstm_cell(g, binding, cell, trunk_in, h, c)?;
                next_carry = AgentCarry::NeuralMap { map, lstm: Some((nh, nc)) };
                nh
            }
        };
        let logits = g.affine(hidden, binding.value(trunk.policy_w), binding.value(trunk.policy_b))?;
        let value = g.affine(hidden, binding.value(trunk.value_w), binding.value(trunk.value_b))?;
        let log_probs = g.log_softmax(logits)?;
        let entropy = entropy_of(g, log_probs)?;
        Ok((PolicyOutput { logits, value, log_probs, entropy, attention }, next_carry))
    }

    /// Forward plus action selection: sampled from the policy when
    /// `greedy` is false, argmax otherwise.
    pub fn act<E: Real>(
        &self,
        g: &mut Graph<E>,
        binding: &Binding,
        carry: AgentCarry,
        obs: &Observation,
        ctx: &StepContext,
        greedy: bool,
        rng: &mut ChaCha8Rng,
    ) -> AdResult<(Action, PolicyOutput<E>, AgentCarry)> {
        let (out, next) = self.forward(g, binding, carry, obs, ctx)?;
        let lp = g.data(out.log_probs);
        let action = if greedy {
            let mut best = 0;
            for i in 1..lp.len() {
                if lp[i] > lp[best] {
                    best = i;
                }
            }
            Action::from_index(best)?
        } else {
            sample_from_log_probs(lp, rng)?
        };
        Ok((action, out, next))
    }
}

/// `H = -sum p log p` from log-probabilities.
pub fn entropy_of<E: Real>(g: &mut Graph<E>, log_probs: Value) -> AdResult<Value> {
    let p = g.exp(log_probs)?;
    let plogp = g.mul(p, log_probs)?;
    let total = g.sum(plogp)?;
    g.scale(total, -1.0)
}

fn sample_from_log_probs<E: Real>(lp: &[E], rng: &mut ChaCha8Rng) -> AdResult<Action> {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &l) in lp.iter().enumerate() {
        acc += l.as_f64().exp();
        if draw < acc {
            return Action::from_index(i);
        }
    }
    // rounding can leave a sliver above the accumulated mass
    Action::from_index(lp.len() - 1)
}

/// Next move along a shortest path to the target cell that detours
/// around `avoid` (the losing goal): turn toward the next path cell if
/// not facing it, otherwise step forward.
pub fn oracle_action(
    maze: &MazeSpec,
    pose: Pose,
    target: (i64, i64),
    avoid: Option<(i64, i64)>,
) -> AdResult<Action> {
    let from = (pose.x, pose.y);
    let path = bfs_path_avoiding(maze, from, target, avoid)
        .or_else(|| bfs_path(maze, from, target))
        .ok_or_else(|| AdError::State {
            op: "oracle",
            message: format!("no path from ({}, {}) to {target:?}", pose.x, pose.y),
        })?;
    if path.len() < 2 {
        return Err(AdError::State {
            op: "oracle",
            message: "already standing on the target".into(),
        });
    }
    let next = path[1];
    let step = (next.0 - pose.x, next.1 - pose.y);
    if step == pose.heading.delta() {
        return Ok(Action::Forward);
    }
    if step == pose.heading.turned_left().delta() {
        return Ok(Action::TurnLeft);
    }
    // either a right turn or a full reversal; turning right works for both
    Ok(Action::TurnRight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_maze, GoalSearchEnv, IndicatorColor, Outcome, EVAL_STEP_LIMIT};
    use rand::SeedableRng;

    fn run_agent_once(spec: AgentSpec, seed: u64) -> (Action, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store: ParamStore<f64> = ParamStore::new();
        let agent = Agent::register(spec, &mut store, &mut rng).unwrap();
        let maze = generate_maze(7, &mut rng).unwrap();
        let (env, obs) = GoalSearchEnv::reset_with_color(
            maze,
            IndicatorColor::Green,
            100,
            crate::env::STEP_PENALTY,
        );
        let mut g = Graph::<f64>::new();
        let binding = store.bind(&mut g);
        let carry = agent.initial_carry(&mut g);
        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        let (action, out, _) =
            agent.act(&mut g, &binding, carry, &obs, &ctx, false, &mut rng).unwrap();
        (action, g.data(out.log_probs).to_vec(), g.data(out.value).to_vec())
    }

    #[test]
    fn all_variants_run_one_step() {
        for variant in [
            AgentVariant::NeuralMap,
            AgentVariant::Lstm,
            AgentVariant::Mqn,
            AgentVariant::Random,
        ] {
            let spec = AgentSpec { variant, ..AgentSpec::default() };
            let (_, lp, value) = run_agent_once(spec, 17);
            let mass: f64 = lp.iter().map(|l| l.exp()).sum();
            assert!((mass - 1.0).abs() < 1e-6, "{variant:?} probs sum {mass}");
            assert!(value[0].is_finite());
        }
    }

    #[test]
    fn same_seed_same_action() {
        for variant in [AgentVariant::NeuralMap, AgentVariant::Lstm, AgentVariant::Mqn] {
            let spec = AgentSpec { variant, ..AgentSpec::default() };
            let a = run_agent_once(spec.clone(), 23);
            let b = run_agent_once(spec, 23);
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn random_agent_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store: ParamStore<f64> = ParamStore::new();
        let spec = AgentSpec { variant: AgentVariant::Random, ..AgentSpec::default() };
        let agent = Agent::register(spec, &mut store, &mut rng).unwrap();
        let maze = generate_maze(7, &mut rng).unwrap();
        let (env, obs) = GoalSearchEnv::reset_with_color(
            maze,
            IndicatorColor::Green,
            100,
            crate::env::STEP_PENALTY,
        );
        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let mut g = Graph::<f64>::inference();
            let binding = store.bind(&mut g);
            let carry = agent.initial_carry(&mut g);
            let (action, _, _) =
                agent.act(&mut g, &binding, carry, &obs, &ctx, false, &mut rng).unwrap();
            counts[action.index()] += 1;
        }
        for (i, &count) in counts.iter().enumerate() {
            let freq = count as f64 / 30_000.0;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "action {i} frequency {freq:.4}");
        }
    }

    #[test]
    fn hybrid_lstm_threads_its_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut store: ParamStore<f64> = ParamStore::new();
        let spec = AgentSpec { hybrid_lstm: true, ..AgentSpec::default() };
        let agent = Agent::register(spec, &mut store, &mut rng).unwrap();
        let maze = generate_maze(7, &mut rng).unwrap();
        let (env, obs) = GoalSearchEnv::reset_with_color(
            maze,
            IndicatorColor::Green,
            100,
            crate::env::STEP_PENALTY,
        );
        let mut g = Graph::<f64>::new();
        let binding = store.bind(&mut g);
        let mut carry = agent.initial_carry(&mut g);
        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        for _ in 0..3 {
            let (_, next) = agent.forward(&mut g, &binding, carry, &obs, &ctx).unwrap();
            carry = next;
        }
        let AgentCarry::NeuralMap { lstm: Some((h, _)), .. } = carry else {
            panic!("hybrid carry lost its LSTM state")
        };
        assert!(g.data(h).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn mqn_buffer_never_exceeds_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut store: ParamStore<f64> = ParamStore::new();
        let spec = AgentSpec { variant: AgentVariant::Mqn, ..AgentSpec::default() };
        let agent = Agent::register(spec, &mut store, &mut rng).unwrap();
        let maze = generate_maze(7, &mut rng).unwrap();
        let (env, obs) = GoalSearchEnv::reset_with_color(
            maze,
            IndicatorColor::Green,
            100,
            crate::env::STEP_PENALTY,
        );
        let mut g = Graph::<f64>::new();
        let binding = store.bind(&mut g);
        let mut carry = agent.initial_carry(&mut g);
        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        let mut first_slot_history = Vec::new();
        for _ in 0..40 {
            let (_, next) = agent.forward(&mut g, &binding, carry, &obs, &ctx).unwrap();
            carry = next;
            let AgentCarry::Mqn { buffer } = &carry else { panic!("wrong carry") };
            assert!(buffer.len() <= MQN_SLOTS);
            first_slot_history.push(*buffer.front().unwrap());
        }
        // once full, each step evicts the oldest: the front slot changes
        let tail = &first_slot_history[MQN_SLOTS..];
        assert!(tail.windows(2).all(|w| w[0] != w[1]), "front slot not rotating");
    }

    #[test]
    fn carry_variant_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut store: ParamStore<f64> = ParamStore::new();
        let spec = AgentSpec { variant: AgentVariant::Lstm, ..AgentSpec::default() };
        let agent = Agent::register(spec, &mut store, &mut rng).unwrap();
        let maze = generate_maze(7, &mut rng).unwrap();
        let (env, obs) = GoalSearchEnv::reset_with_color(
            maze,
            IndicatorColor::Green,
            100,
            crate::env::STEP_PENALTY,
        );
        let mut g = Graph::<f64>::new();
        let binding = store.bind(&mut g);
        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        let err = agent
            .forward(&mut g, &binding, AgentCarry::Stateless, &obs, &ctx)
            .unwrap_err();
        assert!(err.to_string().contains("invalid state"));
    }

    #[test]
    fn oracle_walks_straight_to_the_correct_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let maze = generate_maze(11, &mut rng).unwrap();
            for color in [IndicatorColor::Green, IndicatorColor::Blue] {
                let (mut env, _) = GoalSearchEnv::reset_with_color(
                    maze.clone(),
                    color,
                    EVAL_STEP_LIMIT,
                    crate::env::STEP_PENALTY,
                );
                let mut outcome = Outcome::None;
                while !env.done() {
                    let action = oracle_action(
                        env.maze(),
                        env.pose(),
                        env.correct_goal(),
                        Some(env.wrong_goal()),
                    )
                    .unwrap();
                    outcome = env.step(action).unwrap().info.outcome;
                }
                assert_eq!(outcome, Outcome::CorrectGoal, "maze {:x} {color:?}", maze.id);
            }
        }
    }
}
