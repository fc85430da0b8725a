//! The Goal-Search benchmark: procedural mazes, occluded egocentric
//! observations, and indicator-conditioned goal rewards.

pub mod goal_search;
pub mod maze;
pub mod mazeset;
pub mod observe;
pub mod ray_oracle;

pub use goal_search::{
    Action, GoalSearchEnv, IndicatorColor, Outcome, StepInfo, StepResult, EVAL_STEP_LIMIT,
    STEP_PENALTY, TRAIN_STEP_LIMIT,
};
pub use maze::{bfs_path, bfs_path_avoiding, bfs_solvable, generate_maze, MazeSpec};
pub use mazeset::{
    build_test_set, build_test_set_from, hash_set, load_maze_set, sample_training_maze,
    sample_training_maze_from, save_maze_set, size_bucket, SizeBucket, TEST_SIZES, TRAIN_SIZES,
};
pub use observe::{
    line_of_sight, render_observation, supercover, window_cell, Observation, OBS_CHANNELS,
    OBS_COLS, OBS_LEN, OBS_ROWS,
};
pub use ray_oracle::{oracle_line_of_sight, oracle_render, segment_meets_cell};
