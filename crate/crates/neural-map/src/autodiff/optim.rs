//! RMSProp with global gradient-norm clipping.
//!
//! The update keeps one running second-moment accumulator per weight and
//! divides by `sqrt(acc + eps)` (epsilon inside the root). Gradients are
//! rescaled jointly so their global L2 norm never exceeds the clip
//! threshold; the returned statistic is the norm before clipping.

use super::error::{AdError, AdResult};
use super::graph::Graph;
use super::params::{Binding, ParamStore};
use super::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub max_grad_norm: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self { learning_rate: 7e-4, decay: 0.99, epsilon: 1e-5, max_grad_norm: 40.0 }
    }
}

#[derive(Debug)]
pub struct RmsProp<E> {
    pub config: RmsPropConfig,
    /// One accumulator per parameter, same layout as the store.
    square_avg: Vec<Vec<E>>,
}

impl<E: Real> RmsProp<E> {
    pub fn new(config: RmsPropConfig, store: &ParamStore<E>) -> Self {
        let square_avg = store.ids().map(|id| vec![E::zero(); store.data(id).len()]).collect();
        Self { config, square_avg }
    }

    /// Applies one update from the gradients accumulated in `graph` at the
    /// bound leaves. Returns the pre-clip global gradient norm. Any
    /// non-finite gradient aborts with the offending parameter's name.
    pub fn step(
        &mut self,
        store: &mut ParamStore<E>,
        graph: &Graph<E>,
        binding: &Binding,
    ) -> AdResult<f64> {
        let ids: Vec<_> = store.ids().collect();
        let mut sq_sum = 0.0f64;
        for &id in &ids {
            let g = graph.grad(binding.value(id));
            for (i, &v) in g.iter().enumerate() {
                if !v.is_finite() {
                    return Err(AdError::NonFiniteGradient(format!(
                        "{}[{}]",
                        store.name(id),
                        i
                    )));
                }
                let f = v.as_f64();
                sq_sum += f * f;
            }
        }
        let norm = sq_sum.sqrt();
        let clip = if norm > self.config.max_grad_norm {
            self.config.max_grad_norm / norm
        } else {
            1.0
        };

        let decay = E::lit(self.config.decay);
        let one_minus = E::lit(1.0 - self.config.decay);
        let eps = E::lit(self.config.epsilon);
        let lr = E::lit(self.config.learning_rate);
        let clip_e = E::lit(clip);
        for &id in &ids {
            let acc = &mut self.square_avg[id.0];
            let grads = graph.grad(binding.value(id));
            let data = store.data_mut(id);
            for i in 0..data.len() {
                let g = grads[i] * clip_e;
                acc[i] = decay * acc[i] + one_minus * g * g;
                data[i] = data[i] - lr * g / (acc[i] + eps).sqrt();
            }
        }
        Ok(norm)
    }

    /// (accumulator name, values) pairs for checkpointing, in store order.
    pub fn state(&self, store: &ParamStore<E>) -> Vec<(String, &[E])> {
        store
            .ids()
            .map(|id| (format!("opt/{}", store.name(id)), self.square_avg[id.0].as_slice()))
            .collect()
    }

    pub fn load_state(&mut self, store: &ParamStore<E>, name: &str, values: Vec<E>) -> AdResult<()> {
        let key = name.strip_prefix("opt/").ok_or_else(|| {
            AdError::Checkpoint(format!("unexpected optimizer entry {name}"))
        })?;
        let id = store
            .lookup(key)
            .ok_or_else(|| AdError::UnknownParameter(key.to_string()))?;
        if values.len() != self.square_avg[id.0].len() {
            return Err(AdError::Checkpoint(format!(
                "optimizer state {name} has {} values, expected {}",
                values.len(),
                self.square_avg[id.0].len()
            )));
        }
        self.square_avg[id.0] = values;
        Ok(())
    }
}

/// Global L2 norm across a set of gradient slices (reference helper used by
/// tests; the optimizer computes the same quantity inline).
pub fn global_norm<E: Real>(grads: &[&[E]]) -> f64 {
    grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| {
            let f = v.as_f64();
            f * f
        })
        .sum::<f64>()
        .sqrt()
}
