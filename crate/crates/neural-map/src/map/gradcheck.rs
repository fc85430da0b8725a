//! Finite-difference verification of the full memory step, every variant
//! combination, with parameters treated as inputs so their gradients are
//! checked too. Widths are shrunk: composition correctness does not
//! depend on layer size, and exhaustive differencing must stay fast.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::gradcheck::{check, CheckResult, TOL_COMPOSED};
use crate::autodiff::{Binding, Graph, ParamStore, Shape, Value};

use super::config::{
    AddressingVariant, ContextVariant, NeuralMapConfig, ReadVariant, WriteVariant,
};
use super::params::{register_with_widths, MapWidths};
use super::space::{Heading, Pose, Velocity};
use super::step::{map_step, Locus};

const CHANNELS: usize = 4;
const EXTENT: usize = 4;
// deliberately not equal to CHANNELS so the check exercises the general
// state width, as the full agent does
const STATE_DIM: usize = 5;
const WIDTHS: MapWidths = MapWidths { conv_channels: 3, hidden: 10 };

fn variant_name(config: &NeuralMapConfig) -> String {
    let mut name = format!(
        "map_step/{}-{}-{}",
        match config.write {
            WriteVariant::Hard => "hard",
            WriteVariant::Gru => "gru",
        },
        match config.context {
            ContextVariant::Plain => "plain",
            ContextVariant::KeyValue => "kv",
        },
        match config.addressing {
            AddressingVariant::Absolute => "abs",
            AddressingVariant::Egocentric => "ego",
        }
    );
    if let ReadVariant::Crop(k) = config.read {
        name.push_str(&format!("-crop{k}"));
    }
    name
}

fn check_one(config: &NeuralMapConfig, seed: u64) -> CheckResult {
    // the store provides names, shapes, and realistic initial values; its
    // tensors become check inputs in registration order, followed by the
    // map contents and the current embedding
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParamStore<f64> = ParamStore::new();
    let params = register_with_widths(&mut store, config, "m", STATE_DIM, WIDTHS, &mut rng).unwrap();

    let ids: Vec<_> = store.ids().collect();
    let mut inputs: Vec<(Vec<f64>, Shape)> = ids
        .iter()
        .map(|&id| (store.data(id).to_vec(), store.shape(id).clone()))
        .collect();
    let map_len = CHANNELS * EXTENT * EXTENT;
    inputs.push((
        (0..map_len).map(|_| rng.random_range(-1.0..1.0)).collect(),
        Shape::new([CHANNELS, EXTENT, EXTENT]),
    ));
    inputs.push((
        (0..STATE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect(),
        Shape::vector(STATE_DIM),
    ));

    let locus = match config.addressing {
        AddressingVariant::Absolute => {
            Locus::Absolute(Pose { x: 1, y: 2, heading: Heading::South })
        }
        AddressingVariant::Egocentric => Locus::Egocentric(Velocity { u: 1, v: -1 }),
    };
    let probe_rng = rng.clone();
    let n_params = ids.len();
    let config = *config;
    let mut build = move |g: &mut Graph<f64>, leaves: &[Value]| {
        let binding = Binding::from_values(leaves[..n_params].to_vec());
        let map = leaves[n_params];
        let s = leaves[n_params + 1];
        let out = map_step(g, &binding, &params, &config, map, s, locus)?;
        // probe both differentiable outputs with fixed random weights
        let flat_len = g.shape(out.new_map).count();
        let flat = g.reshape(out.new_map, Shape::vector(flat_len))?;
        let both = g.concat(&[out.o, flat], 0)?;
        let count = g.shape(both).count();
        let mut pr = probe_rng.clone();
        let w: Vec<f64> = (0..count).map(|_| pr.random_range(-1.0..1.0)).collect();
        let weights = g.leaf(w, Shape::vector(count));
        let prod = g.mul(both, weights)?;
        g.sum(prod)
    };
    check(&variant_name(&config), TOL_COMPOSED, &inputs, &mut build)
}

/// Runs the composed check over write x context x addressing, plus one
/// cropped-read case that routes the window extraction into the read path.
pub fn composed_suite(seed: u64) -> Vec<CheckResult> {
    let mut results = Vec::new();
    for write in [WriteVariant::Hard, WriteVariant::Gru] {
        for context in [ContextVariant::Plain, ContextVariant::KeyValue] {
            for addressing in [AddressingVariant::Absolute, AddressingVariant::Egocentric] {
                let config = NeuralMapConfig {
                    channels: CHANNELS,
                    height: EXTENT,
                    width: EXTENT,
                    context,
                    write,
                    addressing,
                    read: ReadVariant::Global,
                };
                results.push(check_one(&config, seed));
            }
        }
    }
    let cropped = NeuralMapConfig {
        channels: CHANNELS,
        height: EXTENT,
        width: EXTENT,
        context: ContextVariant::Plain,
        write: WriteVariant::Gru,
        addressing: AddressingVariant::Absolute,
        read: ReadVariant::Crop(3),
    };
    results.push(check_one(&cropped, seed));
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composed_all_variants_pass() {
        let results = composed_suite(101);
        assert_eq!(results.len(), 9);
        for r in &results {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn composed_is_deterministic() {
        let a = composed_suite(7);
        let b = composed_suite(7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.max_rel_err, y.max_rel_err, "{}", x.name);
        }
    }
}
