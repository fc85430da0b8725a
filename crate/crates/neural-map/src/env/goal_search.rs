//! Goal-Search episode dynamics: an oriented agent walks a maze toward
//! one of two goals, told which is rewarded only by an indicator color
//! seen at the start.

use rand::Rng;

use crate::autodiff::{AdError, AdResult};
use crate::map::{Pose, Velocity};

use super::maze::MazeSpec;
use super::observe::{render_observation, Observation};

pub const TRAIN_STEP_LIMIT: usize = 100;
pub const EVAL_STEP_LIMIT: usize = 500;
pub const STEP_PENALTY: f64 = 0.01;

/// Which goal pays +1 this episode: green marks the red goal, blue marks
/// the teal goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorColor {
    Green,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::TurnLeft => 1,
            Action::TurnRight => 2,
        }
    }

    pub fn from_index(index: usize) -> AdResult<Action> {
        Action::ALL.get(index).copied().ok_or(AdError::IndexOutOfBounds {
            op: "action",
            index,
            count: Action::ALL.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    None,
    CorrectGoal,
    WrongGoal,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct StepInfo {
    pub pose: Pose,
    pub velocity: Velocity,
    pub outcome: Outcome,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct GoalSearchEnv {
    maze: MazeSpec,
    pose: Pose,
    indicator_color: IndicatorColor,
    step_count: usize,
    done: bool,
    last_velocity: Velocity,
    step_limit: usize,
    step_penalty: f64,
}

impl GoalSearchEnv {
    /// Starts an episode with the indicator color drawn uniformly.
    pub fn reset(
        maze: MazeSpec,
        step_limit: usize,
        step_penalty: f64,
        rng: &mut impl Rng,
    ) -> (Self, Observation) {
        let color = if rng.random_bool(0.5) { IndicatorColor::Green } else { IndicatorColor::Blue };
        Self::reset_with_color(maze, color, step_limit, step_penalty)
    }

    /// Starts an episode with a chosen indicator color (evaluation and
    /// diagnostics; training always samples).
    pub fn reset_with_color(
        maze: MazeSpec,
        indicator_color: IndicatorColor,
        step_limit: usize,
        step_penalty: f64,
    ) -> (Self, Observation) {
        let pose = maze.start_pose();
        let env = GoalSearchEnv {
            maze,
            pose,
            indicator_color,
            step_count: 0,
            done: false,
            last_velocity: Velocity { u: 0, v: 0 },
            step_limit,
            step_penalty,
        };
        let obs = render_observation(&env.maze, &env.pose, env.indicator_color);
        (env, obs)
    }

    pub fn maze(&self) -> &MazeSpec {
        &self.maze
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn indicator_color(&self) -> IndicatorColor {
        self.indicator_color
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn last_velocity(&self) -> Velocity {
        self.last_velocity
    }

    pub fn correct_goal(&self) -> (i64, i64) {
        match self.indicator_color {
            IndicatorColor::Green => self.maze.goal_red,
            IndicatorColor::Blue => self.maze.goal_teal,
        }
    }

    pub fn wrong_goal(&self) -> (i64, i64) {
        match self.indicator_color {
            IndicatorColor::Green => self.maze.goal_teal,
            IndicatorColor::Blue => self.maze.goal_red,
        }
    }

    /// Advances one step. Turns rotate in place; forward moves one cell
    /// unless blocked by a wall. Velocity is the realized displacement.
    pub fn step(&mut self, action: Action) -> AdResult<StepResult> {
        if self.done {
            return Err(AdError::State {
                op: "env-step",
                message: "episode already finished".into(),
            });
        }
        self.step_count += 1;
        let mut velocity = Velocity { u: 0, v: 0 };
        match action {
            Action::TurnLeft => self.pose.heading = self.pose.heading.turned_left(),
            Action::TurnRight => self.pose.heading = self.pose.heading.turned_right(),
            Action::Forward => {
                let (dx, dy) = self.pose.heading.delta();
                let (nx, ny) = (self.pose.x + dx, self.pose.y + dy);
                if !self.maze.is_wall(nx, ny) {
                    self.pose.x = nx;
                    self.pose.y = ny;
                    velocity = Velocity { u: dx, v: dy };
                }
            }
        }
        self.last_velocity = velocity;

        let cell = (self.pose.x, self.pose.y);
        let (reward, outcome) = if cell == self.correct_goal() {
            self.done = true;
            (1.0, Outcome::CorrectGoal)
        } else if cell == self.wrong_goal() {
            self.done = true;
            (-1.0, Outcome::WrongGoal)
        } else if self.step_count >= self.step_limit {
            // running out of steps adds nothing beyond the usual penalty
            self.done = true;
            (-self.step_penalty, Outcome::Timeout)
        } else {
            (-self.step_penalty, Outcome::None)
        };

        let observation = render_observation(&self.maze, &self.pose, self.indicator_color);
        Ok(StepResult {
            observation,
            reward,
            done: self.done,
            info: StepInfo { pose: self.pose, velocity, outcome },
        })
    }
}
