//! The advantage actor-critic update: discounted returns, detached
//! advantages, one combined loss, one backward pass, one optimizer step.

use crate::autodiff::{AdError, AdResult, Binding, Graph, ParamStore, Real, RmsProp, Value};

use super::rollout::{compute_returns, RolloutBuffer};

/// Loss weighting; `gamma` also drives the return recursion.
#[derive(Debug, Clone, Copy)]
pub struct A2cParams {
    pub gamma: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl Default for A2cParams {
    fn default() -> Self {
        A2cParams { gamma: 0.99, value_coef: 0.5, entropy_coef: 0.01 }
    }
}

/// Host-side copies of the update's components.
#[derive(Debug, Clone, Copy)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Pre-clip global gradient norm.
    pub grad_norm: f64,
}

/// Applies one update from a collected rollout. The advantage multiplies
/// the log-probability as a plain number, so the value head receives
/// gradient only through its own squared-error term.
pub fn a2c_update<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    buffer: &RolloutBuffer,
    hp: A2cParams,
    store: &mut ParamStore<E>,
    opt: &mut RmsProp<E>,
) -> AdResult<LossStats> {
    let mut policy_terms: Vec<Value> = Vec::new();
    let mut value_terms: Vec<Value> = Vec::new();
    let mut entropy_terms: Vec<Value> = Vec::new();

    for (env, records) in buffer.steps.iter().enumerate() {
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        let dones: Vec<bool> = records.iter().map(|r| r.done).collect();
        let returns = compute_returns(&rewards, &dones, buffer.bootstrap[env], hp.gamma);
        for (record, &ret) in records.iter().zip(&returns) {
            let value_est = g.data(record.value)[0].as_f64();
            let advantage = ret - value_est;
            policy_terms.push(g.scale(record.log_prob, -advantage)?);
            let target = g.scalar(E::lit(ret));
            let diff = g.sub(record.value, target)?;
            value_terms.push(g.mul(diff, diff)?);
            entropy_terms.push(record.entropy);
        }
    }
    if policy_terms.is_empty() {
        return Err(AdError::Argument {
            op: "a2c-update",
            message: "empty rollout buffer".to_string(),
        });
    }

    let mean_of = |g: &mut Graph<E>, terms: &[Value]| -> AdResult<Value> {
        let joined = g.concat(terms, 0)?;
        g.mean(joined)
    };
    let policy_mean = mean_of(g, &policy_terms)?;
    let value_mean = mean_of(g, &value_terms)?;
    let entropy_mean = mean_of(g, &entropy_terms)?;

    let value_scaled = g.scale(value_mean, hp.value_coef)?;
    let entropy_scaled = g.scale(entropy_mean, hp.entropy_coef)?;
    let partial = g.add(policy_mean, value_scaled)?;
    let loss = g.sub(partial, entropy_scaled)?;

    let total = g.data(loss)[0].as_f64();
    if !total.is_finite() {
        return Err(AdError::NonFinite { op: "a2c-loss", index: 0 });
    }
    g.backward(loss)?;
    let grad_norm = opt.step(store, g, binding)?;
    Ok(LossStats {
        total,
        policy: g.data(policy_mean)[0].as_f64(),
        value: g.data(value_mean)[0].as_f64(),
        entropy: g.data(entropy_mean)[0].as_f64(),
        grad_norm,
    })
}
