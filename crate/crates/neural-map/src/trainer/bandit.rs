//! A two-armed bandit pushed through the exact update path the maze
//! trainer uses. One arm pays 1, the other 0; if the loss signs,
//! advantage detachment, and optimizer wiring are right, the policy
//! concentrates on the paying arm.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::entropy_of;
use crate::autodiff::{AdResult, Graph, Init, ParamStore, RmsProp, RmsPropConfig, Shape};

use super::a2c::{a2c_update, A2cParams};
use super::rollout::{RolloutBuffer, StepRecord};

pub const REWARDED_ARM: usize = 1;

/// Runs `updates` rounds of `samples` one-step episodes each and returns
/// the final probability of the rewarded arm. The learning rate is higher
/// than the maze trainer's because the whole problem is two logits; the
/// machinery under test is identical.
pub fn run_bandit(seed: u64, updates: usize, samples: usize) -> AdResult<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<f64> = ParamStore::new();
    let logits_id = store.register("bandit/logits", Shape::vector(2), Init::Zeros, &mut rng)?;
    let value_id = store.register("bandit/value", Shape::vector(1), Init::Zeros, &mut rng)?;
    let mut opt = RmsProp::new(
        RmsPropConfig { learning_rate: 0.01, ..RmsPropConfig::default() },
        &store,
    );
    let hp = A2cParams::default();

    for _ in 0..updates {
        let mut g: Graph<f64> = Graph::new();
        let binding = store.bind(&mut g);
        let logits = binding.value(logits_id);
        let log_probs = g.log_softmax(logits)?;
        let entropy = entropy_of(&mut g, log_probs)?;
        let p1 = g.data(log_probs)[1].exp();
        let mut records = Vec::with_capacity(samples);
        for _ in 0..samples {
            let action = if rng.random::<f64>() < p1 { 1 } else { 0 };
            let reward = if action == REWARDED_ARM { 1.0 } else { 0.0 };
            records.push(StepRecord {
                log_prob: g.pick(log_probs, action)?,
                value: binding.value(value_id),
                entropy,
                reward,
                done: true,
            });
        }
        let buffer = RolloutBuffer { steps: vec![records], bootstrap: vec![0.0] };
        a2c_update(&mut g, &binding, &buffer, hp, &mut store, &mut opt)?;
    }

    let d = store.data(logits_id);
    let m = d[0].max(d[1]);
    let (e0, e1) = ((d[0] - m).exp(), (d[1] - m).exp());
    Ok(e1 / (e0 + e1))
}
