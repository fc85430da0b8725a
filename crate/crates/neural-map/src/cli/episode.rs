//! One greedy map-agent episode with its attention trail, plus the
//! indicator-cell attention statistic computed from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, AgentVariant, StepContext};
use crate::autodiff::{AdError, AdResult, Graph, ParamStore, Real};
use crate::env::{
    GoalSearchEnv, IndicatorColor, MazeSpec, Outcome, OBS_COLS, OBS_ROWS, STEP_PENALTY,
};
use crate::map::heatmap::HeatmapRow;
use crate::map::{normalize_coords, AddressingVariant, NeuralMapConfig};

/// A full greedy episode: one attention row per executed step, and the
/// first step at which each goal became visible in the observation.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub maze_id: u64,
    pub color: IndicatorColor,
    pub rows: Vec<HeatmapRow>,
    pub outcome: Outcome,
    /// First step whose input observation shows the paying goal.
    pub correct_goal_seen: Option<usize>,
    /// First step whose input observation shows the losing goal.
    pub wrong_goal_seen: Option<usize>,
}

impl EpisodeTrace {
    /// True when the losing goal entered view strictly before the paying
    /// goal, and the paying goal was seen at all.
    pub fn wrong_goal_first(&self) -> bool {
        matches!(
            (self.wrong_goal_seen, self.correct_goal_seen),
            (Some(w), Some(c)) if w < c
        )
    }
}

/// Runs one greedy episode of a map agent and records the context
/// attention at every step. Row `t` holds the pose the agent observed
/// from and the attention of the forward pass that chose action `t`.
pub fn run_heatmap_episode<E: Real>(
    agent: &Agent,
    store: &ParamStore<E>,
    maze: MazeSpec,
    cap: usize,
    seed: u64,
) -> AdResult<EpisodeTrace> {
    if agent.spec.variant != AgentVariant::NeuralMap {
        return Err(AdError::Argument {
            op: "heatmap",
            message: format!(
                "attention heatmaps require the neural-map agent; this one is {:?}",
                agent.spec.variant
            ),
        });
    }
    let maze_id = maze.id;
    // channel 3 marks the red goal, 4 the teal goal
    let goal_channel = |cell: (i64, i64), m: &MazeSpec| if cell == m.goal_red { 3 } else { 4 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut env, mut obs) = GoalSearchEnv::reset(maze, cap, STEP_PENALTY, &mut rng);
    let correct_ch = goal_channel(env.correct_goal(), env.maze());
    let wrong_ch = goal_channel(env.wrong_goal(), env.maze());

    let mut g: Graph<E> = Graph::inference();
    let binding = store.bind(&mut g);
    let mut carry = agent.initial_carry(&mut g);

    let mut trace = EpisodeTrace {
        maze_id,
        color: env.indicator_color(),
        rows: Vec::new(),
        outcome: Outcome::None,
        correct_goal_seen: None,
        wrong_goal_seen: None,
    };

    while !env.done() {
        let step = trace.rows.len();
        let plane = OBS_ROWS * OBS_COLS;
        let visible =
            |channel: usize| obs.bits[channel * plane..(channel + 1) * plane].iter().any(|&b| b != 0);
        if trace.correct_goal_seen.is_none() && visible(correct_ch) {
            trace.correct_goal_seen = Some(step);
        }
        if trace.wrong_goal_seen.is_none() && visible(wrong_ch) {
            trace.wrong_goal_seen = Some(step);
        }

        let ctx = StepContext {
            pose: env.pose(),
            velocity: env.last_velocity(),
            world: env.maze().size,
        };
        let pose = env.pose();
        let (action, out, next) = agent.act(&mut g, &binding, carry, &obs, &ctx, true, &mut rng)?;
        carry = next;
        let alpha = out
            .attention
            .as_ref()
            .ok_or(AdError::State {
                op: "heatmap",
                message: "map agent produced no attention".to_string(),
            })?
            .iter()
            .map(|a| a.as_f64())
            .collect();
        trace.rows.push(HeatmapRow { step, pose: (pose.x, pose.y), alpha });

        let result = env.step(action)?;
        obs = result.observation;
        trace.outcome = result.info.outcome;
    }
    Ok(trace)
}

/// The indicator-cell attention statistic: mass at the indicator's map
/// cell when the paying goal first enters view, against that cell's
/// episode mean.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorAttention {
    /// Map coordinates the indicator normalizes to.
    pub cell: (i64, i64),
    pub reveal_step: usize,
    pub at_reveal: f64,
    pub episode_mean: f64,
}

impl IndicatorAttention {
    pub fn exceeds_mean(&self) -> bool {
        self.at_reveal > self.episode_mean
    }
}

/// Computes [`IndicatorAttention`] for a finished trace. Needs absolute
/// addressing (the indicator has no fixed cell in an egocentric map) and
/// a trace in which the paying goal became visible.
pub fn attention_analysis(
    trace: &EpisodeTrace,
    maze: &MazeSpec,
    config: &NeuralMapConfig,
) -> AdResult<IndicatorAttention> {
    if config.addressing != AddressingVariant::Absolute {
        return Err(AdError::Argument {
            op: "heatmap",
            message: "indicator-cell analysis needs absolute addressing".to_string(),
        });
    }
    let reveal_step = trace.correct_goal_seen.ok_or(AdError::State {
        op: "heatmap",
        message: "the paying goal never entered view".to_string(),
    })?;
    let (x, y) = normalize_coords(
        (maze.indicator.0 as f64, maze.indicator.1 as f64),
        (maze.size, maze.size),
        (config.width, config.height),
    )?;
    let index = y as usize * config.width + x as usize;
    let at = |row: &HeatmapRow| {
        row.alpha.get(index).copied().ok_or(AdError::IndexOutOfBounds {
            op: "heatmap",
            index,
            count: row.alpha.len(),
        })
    };
    let mut total = 0.0;
    for row in &trace.rows {
        total += at(row)?;
    }
    Ok(IndicatorAttention {
        cell: (x, y),
        reveal_step,
        at_reveal: at(&trace.rows[reveal_step])?,
        episode_mean: total / trace.rows.len() as f64,
    })
}
