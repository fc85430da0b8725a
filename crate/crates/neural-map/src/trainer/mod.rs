//! Synchronous advantage actor-critic training for the maze benchmark:
//! rollout collection, the update rule, evaluation, metrics, and the
//! outer loop with checkpointing.

pub mod a2c;
pub mod bandit;
pub mod evaluate;
pub mod metrics;
pub mod rollout;
pub mod run;

pub use a2c::{a2c_update, A2cParams, LossStats};
pub use bandit::{run_bandit, REWARDED_ARM};
pub use evaluate::{evaluate, training_eval_set, BucketStats, EvalReport};
pub use metrics::{MetricsRow, CSV_HEADER};
pub use rollout::{collect_rollout, compute_returns, EnvPool, EpisodeStat, RolloutBuffer, StepRecord};
pub use run::{train_loop, TrainConfig, TrainResult};
