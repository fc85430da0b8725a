//! The differentiable memory step: global read, context read, write
//! vector, sparse update, and the egocentric counter-shift, composed in
//! one pass over the graph.

use crate::autodiff::{AdError, AdResult, Binding, Graph, Real, Shape, Value};

use super::config::{AddressingVariant, ContextVariant, NeuralMapConfig, ReadVariant};
use super::params::{MapParams, WriteParams};
use super::space::{Pose, Velocity};

/// Where this step's write lands.
#[derive(Debug, Clone, Copy)]
pub enum Locus {
    /// Write at the agent's map cell.
    Absolute(Pose),
    /// Counter-shift the map by the last displacement, write at center.
    Egocentric(Velocity),
}

/// All intermediates of one memory step.
#[derive(Debug, Clone)]
pub struct MapStepOutput<E> {
    /// Global read `r`, `[C]`.
    pub r: Value,
    /// Context read `c`, `[C]` plain or `[C/2]` key-value.
    pub c: Value,
    /// Write vector `w`, `[C]`.
    pub w: Value,
    /// `concat(r, c, w)`, the memory's contribution to the policy input.
    pub o: Value,
    /// Detached row-major copy of the attention distribution, `H*W` long.
    pub attention: Vec<E>,
    /// Memory after the write, `[C, H, W]`.
    pub new_map: Value,
}

/// Convolutional read over the whole map (or a crop centered on the
/// focus cell), flattened through two linear layers down to `[C]`.
pub fn global_read<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    params: &MapParams,
    config: &NeuralMapConfig,
    map: Value,
    focus: (i64, i64),
) -> AdResult<Value> {
    let field = match config.read {
        ReadVariant::Global => map,
        ReadVariant::Crop(k) => g.crop2d(map, focus, k)?,
    };
    let mut h = field;
    for (k, b) in params.conv {
        let conv = g.conv2d(h, binding.value(k), binding.value(b))?;
        h = g.tanh(conv)?;
    }
    let count = g.shape(h).count();
    let flat = g.reshape(h, Shape::vector(count))?;
    let pre = g.affine(flat, binding.value(params.fc1_w), binding.value(params.fc1_b))?;
    let hidden = g.tanh(pre)?;
    g.affine(hidden, binding.value(params.fc2_w), binding.value(params.fc2_b))
}

/// Soft attention over every map position: a query from `[s, r]` scores
/// each feature column, scores normalize to a distribution, and the read
/// is the distribution-weighted column sum. In key-value mode the query
/// scores against the key half and the read returns the value half.
pub fn context_read<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    params: &MapParams,
    config: &NeuralMapConfig,
    map: Value,
    s: Value,
    r: Value,
) -> AdResult<(Value, Value)> {
    let (c, h, w) = (config.channels, config.height, config.width);
    let sr = g.concat(&[s, r], 0)?;
    let qdim = config.context_dim();
    let sr_len = g.shape(sr).count();
    let sr_row = g.reshape(sr, Shape::matrix(1, sr_len))?;
    let q = g.matmul(sr_row, binding.value(params.query_w))?; // [1, qdim]

    let (key_block, value_block) = match config.context {
        ContextVariant::Plain => (map, map),
        ContextVariant::KeyValue => (
            g.slice(map, 0, 0, c / 2)?,
            g.slice(map, 0, c / 2, c / 2)?,
        ),
    };
    let keys = g.reshape(key_block, Shape::matrix(qdim, h * w))?;
    let scores_row = g.matmul(q, keys)?; // [1, h*w]
    let scores = g.reshape(scores_row, Shape::matrix(h, w))?;
    let attention = g.softmax_positions(scores)?;
    let read = g.weighted_sum(value_block, attention)?;
    Ok((read, attention))
}

/// Unconditional write vector: two-layer network on `[s, r, c, m]` with a
/// linear output layer, so zero weights pass the output bias through
/// unchanged.
pub fn hard_write<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    params: &MapParams,
    s: Value,
    r: Value,
    c: Value,
    m: Value,
) -> AdResult<Value> {
    let WriteParams::Hard { fc1_w, fc1_b, fc2_w, fc2_b } = &params.write else {
        return Err(AdError::Argument {
            op: "hard_write",
            message: "parameters were registered for the gated write".to_string(),
        });
    };
    let input = g.concat(&[s, r, c, m], 0)?;
    let pre = g.affine(input, binding.value(*fc1_w), binding.value(*fc1_b))?;
    let hidden = g.tanh(pre)?;
    g.affine(hidden, binding.value(*fc2_w), binding.value(*fc2_b))
}

/// Gated write vector: a reset gate tempers the old column inside the
/// candidate, and an update gate blends old column and candidate, so each
/// output coordinate lies between the two.
pub fn gru_write<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    params: &MapParams,
    s: Value,
    r: Value,
    c: Value,
    m: Value,
) -> AdResult<Value> {
    let WriteParams::Gru { wr_w, wr_b, wh_w, wh_b, uh_w, wz_w, wz_b } = &params.write else {
        return Err(AdError::Argument {
            op: "gru_write",
            message: "parameters were registered for the hard write".to_string(),
        });
    };
    let channels = g.shape(m).count();
    let srcm = g.concat(&[s, r, c, m], 0)?;
    let src = g.concat(&[s, r, c], 0)?;

    let reset_pre = g.affine(srcm, binding.value(*wr_w), binding.value(*wr_b))?;
    let reset = g.sigmoid(reset_pre)?;
    let gated_old = g.mul(reset, m)?;
    let gated_row = g.reshape(gated_old, Shape::matrix(1, channels))?;
    let rec_row = g.matmul(gated_row, binding.value(*uh_w))?;
    let rec = g.reshape(rec_row, Shape::vector(channels))?;
    let cand_pre = g.affine(src, binding.value(*wh_w), binding.value(*wh_b))?;
    let cand_sum = g.add(cand_pre, rec)?;
    let candidate = g.tanh(cand_sum)?;

    let update_pre = g.affine(srcm, binding.value(*wz_w), binding.value(*wz_b))?;
    let update = g.sigmoid(update_pre)?;
    let ones = g.leaf(vec![E::one(); channels], Shape::vector(channels));
    let retain = g.sub(ones, update)?;
    let keep = g.mul(retain, m)?;
    let take = g.mul(update, candidate)?;
    g.add(keep, take)
}

/// Replaces the column at `pos` with `w`; every other column is carried
/// through bit-identically.
pub fn update<E: Real>(g: &mut Graph<E>, map: Value, pos: (i64, i64), w: Value) -> AdResult<Value> {
    g.scatter_write(map, pos, w)
}

/// Shifts map content by `(-u, -v)` so that a cell written when the agent
/// was at its current position stays under the center as the agent moves
/// by `(u, v)`. Cells shifted in from outside are zero.
pub fn counter_transform<E: Real>(g: &mut Graph<E>, map: Value, vel: Velocity) -> AdResult<Value> {
    g.shift2d(map, (-vel.u, -vel.v))
}

/// Writes `w` at the fixed center cell of an (already counter-shifted)
/// map.
pub fn ego_update<E: Real>(
    g: &mut Graph<E>,
    map: Value,
    w: Value,
    center: (i64, i64),
) -> AdResult<Value> {
    g.scatter_write(map, center, w)
}

/// One full memory step. Absolute mode: read, context, write at the pose.
/// Egocentric mode: counter-shift first, then read, context, write at
/// center. Returns every intermediate plus the updated map.
pub fn map_step<E: Real>(
    g: &mut Graph<E>,
    binding: &Binding,
    params: &MapParams,
    config: &NeuralMapConfig,
    map: Value,
    s: Value,
    locus: Locus,
) -> AdResult<MapStepOutput<E>> {
    let (field, site) = match (config.addressing, locus) {
        (AddressingVariant::Absolute, Locus::Absolute(pose)) => (map, (pose.x, pose.y)),
        (AddressingVariant::Egocentric, Locus::Egocentric(vel)) => {
            (counter_transform(g, map, vel)?, config.center())
        }
        (mode, _) => {
            return Err(AdError::Argument {
                op: "map_step",
                message: format!("locus does not match addressing mode {mode:?}"),
            })
        }
    };
    let r = global_read(g, binding, params, config, field, site)?;
    let (c, attention) = context_read(g, binding, params, config, field, s, r)?;
    let m = g.column(field, site)?;
    let w = match config.write {
        super::config::WriteVariant::Hard => hard_write(g, binding, params, s, r, c, m)?,
        super::config::WriteVariant::Gru => gru_write(g, binding, params, s, r, c, m)?,
    };
    let new_map = g.scatter_write(field, site, w)?;
    let o = g.concat(&[r, c, w], 0)?;
    Ok(MapStepOutput { r, c, w, o, attention: g.detach(attention), new_map })
}
