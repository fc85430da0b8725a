//! Registration of the map's trainable parameters under path-style names.

use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AdResult, Init, ParamId, ParamStore, Real, Shape};

use super::config::{NeuralMapConfig, WriteVariant};

/// Handles for the write network, one arm per variant.
#[derive(Debug, Clone)]
pub enum WriteParams {
    Hard {
        fc1_w: ParamId,
        fc1_b: ParamId,
        fc2_w: ParamId,
        fc2_b: ParamId,
    },
    Gru {
        /// Reset gate on `[s, r, c, m]`.
        wr_w: ParamId,
        wr_b: ParamId,
        /// Candidate path on `[s, r, c]`.
        wh_w: ParamId,
        wh_b: ParamId,
        /// Candidate recurrence on the gated old column.
        uh_w: ParamId,
        /// Update gate on `[s, r, c, m]`; bias starts at -1 so early
        /// training favors retention.
        wz_w: ParamId,
        wz_b: ParamId,
    },
}

/// Handles for every map parameter. The read path is three 3x3
/// convolutions at 8 channels, a 256-unit linear layer, and a final
/// `C`-unit linear layer; hidden width of the hard write network is 256.
#[derive(Debug, Clone)]
pub struct MapParams {
    pub conv: [(ParamId, ParamId); 3],
    pub fc1_w: ParamId,
    pub fc1_b: ParamId,
    pub fc2_w: ParamId,
    pub fc2_b: ParamId,
    /// Bias-free query map from `[s, r]` to the score space.
    pub query_w: ParamId,
    pub write: WriteParams,
}

pub const CONV_CHANNELS: usize = 8;
pub const HIDDEN: usize = 256;

/// Layer widths of the read and write networks. Production training uses
/// [`MapWidths::default`]; gradient checks shrink both so exhaustive
/// finite differencing stays fast.
#[derive(Debug, Clone, Copy)]
pub struct MapWidths {
    pub conv_channels: usize,
    pub hidden: usize,
}

impl Default for MapWidths {
    fn default() -> Self {
        MapWidths { conv_channels: CONV_CHANNELS, hidden: HIDDEN }
    }
}

/// Registers all map parameters under `<prefix>/...` and returns their
/// handles. `state_dim` is the length of the state vector `s` the caller
/// will feed to each step; the query and write networks size their input
/// layers from it. Layout depends only on the config and `state_dim`, so
/// two stores built from the same pair always agree on names and shapes.
pub fn register<E: Real>(
    store: &mut ParamStore<E>,
    config: &NeuralMapConfig,
    prefix: &str,
    state_dim: usize,
    rng: &mut ChaCha8Rng,
) -> AdResult<MapParams> {
    register_with_widths(store, config, prefix, state_dim, MapWidths::default(), rng)
}

pub fn register_with_widths<E: Real>(
    store: &mut ParamStore<E>,
    config: &NeuralMapConfig,
    prefix: &str,
    state_dim: usize,
    widths: MapWidths,
    rng: &mut ChaCha8Rng,
) -> AdResult<MapParams> {
    config.validate()?;
    if state_dim == 0 {
        return Err(crate::autodiff::AdError::Argument {
            op: "map-register",
            message: "state_dim must be positive".to_string(),
        });
    }
    let c = config.channels;
    let cdim = config.context_dim();
    let (rh, rw) = config.read_extent();
    let (cc, hidden) = (widths.conv_channels, widths.hidden);

    let mut conv = Vec::new();
    for (i, c_in) in [c, cc, cc].into_iter().enumerate() {
        let k = store.register(
            &format!("{prefix}/read/conv{}/k", i + 1),
            Shape::new([cc, c_in, 3, 3]),
            Init::Glorot,
            rng,
        )?;
        let b = store.register(
            &format!("{prefix}/read/conv{}/b", i + 1),
            Shape::vector(cc),
            Init::Zeros,
            rng,
        )?;
        conv.push((k, b));
    }

    let flat = cc * rh * rw;
    let fc1_w = store.register(&format!("{prefix}/read/fc1/w"), Shape::matrix(flat, hidden), Init::Glorot, rng)?;
    let fc1_b = store.register(&format!("{prefix}/read/fc1/b"), Shape::vector(hidden), Init::Zeros, rng)?;
    let fc2_w = store.register(&format!("{prefix}/read/fc2/w"), Shape::matrix(hidden, c), Init::Glorot, rng)?;
    let fc2_b = store.register(&format!("{prefix}/read/fc2/b"), Shape::vector(c), Init::Zeros, rng)?;

    let query_w = store.register(&format!("{prefix}/ctx/q/w"), Shape::matrix(state_dim + c, cdim), Init::Glorot, rng)?;

    let gate_in = state_dim + 2 * c + cdim; // [s, r, c, m]
    let write = match config.write {
        WriteVariant::Hard => WriteParams::Hard {
            fc1_w: store.register(&format!("{prefix}/write/fc1/w"), Shape::matrix(gate_in, hidden), Init::Glorot, rng)?,
            fc1_b: store.register(&format!("{prefix}/write/fc1/b"), Shape::vector(hidden), Init::Zeros, rng)?,
            fc2_w: store.register(&format!("{prefix}/write/fc2/w"), Shape::matrix(hidden, c), Init::Glorot, rng)?,
            fc2_b: store.register(&format!("{prefix}/write/fc2/b"), Shape::vector(c), Init::Zeros, rng)?,
        },
        WriteVariant::Gru => WriteParams::Gru {
            wr_w: store.register(&format!("{prefix}/write/gru/wr/w"), Shape::matrix(gate_in, c), Init::Glorot, rng)?,
            wr_b: store.register(&format!("{prefix}/write/gru/wr/b"), Shape::vector(c), Init::Zeros, rng)?,
            wh_w: store.register(&format!("{prefix}/write/gru/wh/w"), Shape::matrix(state_dim + c + cdim, c), Init::Glorot, rng)?,
            wh_b: store.register(&format!("{prefix}/write/gru/wh/b"), Shape::vector(c), Init::Zeros, rng)?,
            uh_w: store.register(&format!("{prefix}/write/gru/uh/w"), Shape::matrix(c, c), Init::Orthogonal, rng)?,
            wz_w: store.register(&format!("{prefix}/write/gru/wz/w"), Shape::matrix(gate_in, c), Init::Glorot, rng)?,
            wz_b: store.register(&format!("{prefix}/write/gru/wz/b"), Shape::vector(c), Init::Const(-1.0), rng)?,
        },
    };

    Ok(MapParams {
        conv: [conv[0], conv[1], conv[2]],
        fc1_w,
        fc1_b,
        fc2_w,
        fc2_b,
        query_w,
        write,
    })
}
