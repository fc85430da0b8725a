//! Parameter registration for every agent variant. Names are stable so
//! checkpoints interoperate whenever architectures agree.

use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AdResult, Init, ParamId, ParamStore, Real, Shape};
use crate::env::OBS_LEN;
use crate::map::{self, MapParams};

use super::config::{
    AgentSpec, AgentVariant, ACTION_COUNT, EMBED_DIM, EMBED_HIDDEN, LSTM_HIDDEN, MQN_DIM,
    TRUNK_HIDDEN,
};

#[derive(Debug, Clone)]
pub struct EmbedParams {
    pub fc1_w: ParamId,
    pub fc1_b: ParamId,
    pub fc2_w: ParamId,
    pub fc2_b: ParamId,
}

/// One fused-gate LSTM cell: `w` maps `[x, h]` to the four stacked gate
/// preactivations, forget gate biased to one at init.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub w: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub enum TrunkCore {
    Linear { fc_w: ParamId, fc_b: ParamId },
    Lstm(LstmParams),
}

#[derive(Debug, Clone)]
pub struct TrunkParams {
    pub core: TrunkCore,
    pub policy_w: ParamId,
    pub policy_b: ParamId,
    pub value_w: ParamId,
    pub value_b: ParamId,
}

#[derive(Debug, Clone)]
pub enum VariantParams {
    NeuralMap { map: MapParams },
    Lstm(LstmParams),
    Mqn { key_w: ParamId, value_w: ParamId, query_w: ParamId },
    /// Random and oracle agents carry no parameters.
    None,
}

#[derive(Debug, Clone)]
pub struct AgentParams {
    pub embed: Option<EmbedParams>,
    pub variant: VariantParams,
    pub trunk: Option<TrunkParams>,
}

fn register_lstm<E: Real>(
    store: &mut ParamStore<E>,
    prefix: &str,
    input: usize,
    hidden: usize,
    rng: &mut ChaCha8Rng,
) -> AdResult<LstmParams> {
    let w = store.register(
        &format!("{prefix}/w"),
        Shape::matrix(input + hidden, 4 * hidden),
        Init::Glorot,
        rng,
    )?;
    let b = store.register(&format!("{prefix}/b"), Shape::vector(4 * hidden), Init::Zeros, rng)?;
    // forget-gate bias one keeps early memory from washing out
    for slot in &mut store.data_mut(b)[hidden..2 * hidden] {
        *slot = E::one();
    }
    Ok(LstmParams { w, b, hidden })
}

pub fn register_agent<E: Real>(
    store: &mut ParamStore<E>,
    spec: &AgentSpec,
    rng: &mut ChaCha8Rng,
) -> AdResult<AgentParams> {
    spec.validate()?;
    if matches!(spec.variant, AgentVariant::Random | AgentVariant::Oracle) {
        return Ok(AgentParams { embed: None, variant: VariantParams::None, trunk: None });
    }

    let embed = EmbedParams {
        fc1_w: store.register(
            "embed/fc1/w",
            Shape::matrix(OBS_LEN, EMBED_HIDDEN),
            Init::Glorot,
            rng,
        )?,
        fc1_b: store.register("embed/fc1/b", Shape::vector(EMBED_HIDDEN), Init::Zeros, rng)?,
        fc2_w: store.register(
            "embed/fc2/w",
            Shape::matrix(EMBED_HIDDEN, EMBED_DIM),
            Init::Glorot,
            rng,
        )?,
        fc2_b: store.register("embed/fc2/b", Shape::vector(EMBED_DIM), Init::Zeros, rng)?,
    };

    let variant = match spec.variant {
        AgentVariant::NeuralMap => {
            // the map consumes the observation embedding as its state input
            VariantParams::NeuralMap { map: map::register(store, &spec.map, "map", EMBED_DIM, rng)? }
        }
        AgentVariant::Lstm => {
            VariantParams::Lstm(register_lstm(store, "lstm", EMBED_DIM, LSTM_HIDDEN, rng)?)
        }
        AgentVariant::Mqn => VariantParams::Mqn {
            key_w: store.register(
                "mqn/key/w",
                Shape::matrix(EMBED_DIM, MQN_DIM),
                Init::Glorot,
                rng,
            )?,
            value_w: store.register(
                "mqn/value/w",
                Shape::matrix(EMBED_DIM, MQN_DIM),
                Init::Glorot,
                rng,
            )?,
            query_w: store.register(
                "mqn/query/w",
                Shape::matrix(EMBED_DIM, MQN_DIM),
                Init::Glorot,
                rng,
            )?,
        },
        AgentVariant::Random | AgentVariant::Oracle => unreachable!("handled above"),
    };

    let trunk_in = spec.trunk_input_dim();
    let core = if spec.variant == AgentVariant::NeuralMap && spec.hybrid_lstm {
        TrunkCore::Lstm(register_lstm(store, "trunk/lstm", trunk_in, LSTM_HIDDEN, rng)?)
    } else {
        TrunkCore::Linear {
            fc_w: store.register(
                "trunk/fc/w",
                Shape::matrix(trunk_in, TRUNK_HIDDEN),
                Init::Glorot,
                rng,
            )?,
            fc_b: store.register("trunk/fc/b", Shape::vector(TRUNK_HIDDEN), Init::Zeros, rng)?,
        }
    };
    let head_in = spec.head_input_dim();
    let trunk = TrunkParams {
        core,
        policy_w: store.register(
            "head/policy/w",
            Shape::matrix(head_in, ACTION_COUNT),
            Init::Glorot,
            rng,
        )?,
        policy_b: store.register("head/policy/b", Shape::vector(ACTION_COUNT), Init::Zeros, rng)?,
        value_w: store.register("head/value/w", Shape::matrix(head_in, 1), Init::Glorot, rng)?,
        value_b: store.register("head/value/b", Shape::vector(1), Init::Zeros, rng)?,
    };

    Ok(AgentParams { embed: Some(embed), variant, trunk: Some(trunk) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn map_agent_registers_expected_names() {
        let mut store: ParamStore<f32> = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = AgentSpec::default();
        register_agent(&mut store, &spec, &mut rng).unwrap();
        for name in
            ["embed/fc1/w", "map/read/conv1/k", "trunk/fc/w", "head/policy/w", "head/value/b"]
        {
            assert!(store.lookup(name).is_some(), "missing {name}");
        }
    }

    #[test]
    fn forget_gate_bias_starts_at_one() {
        let mut store: ParamStore<f32> = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = AgentSpec { variant: AgentVariant::Lstm, ..AgentSpec::default() };
        let params = register_agent(&mut store, &spec, &mut rng).unwrap();
        let VariantParams::Lstm(cell) = &params.variant else { panic!("wrong variant") };
        let b = store.data(cell.b);
        assert!(b[..LSTM_HIDDEN].iter().all(|&v| v == 0.0));
        assert!(b[LSTM_HIDDEN..2 * LSTM_HIDDEN].iter().all(|&v| v == 1.0));
        assert!(b[2 * LSTM_HIDDEN..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_agent_registers_nothing() {
        let mut store: ParamStore<f32> = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = AgentSpec { variant: AgentVariant::Random, ..AgentSpec::default() };
        register_agent(&mut store, &spec, &mut rng).unwrap();
        assert!(store.is_empty());
    }
}
