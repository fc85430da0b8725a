//! Agent architecture selection and its serialized form.

use serde::{Deserialize, Serialize};

use crate::autodiff::AdResult;
use crate::map::NeuralMapConfig;

/// Observation embedding width `s_t`; equals the map channel count in
/// the reference setting.
pub const EMBED_DIM: usize = 32;
pub const EMBED_HIDDEN: usize = 256;
pub const TRUNK_HIDDEN: usize = 256;
pub const LSTM_HIDDEN: usize = 128;
/// MQN remembers at most this many past embeddings.
pub const MQN_SLOTS: usize = 32;
/// MQN key/value projection width.
pub const MQN_DIM: usize = 32;
pub const ACTION_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentVariant {
    /// Spatially structured external memory.
    NeuralMap,
    /// Recurrent baseline, 128 hidden units.
    Lstm,
    /// Memory-network baseline: attention over the last 32 embeddings.
    Mqn,
    /// Uniform action distribution, no parameters.
    Random,
    /// Shortest-path walker to the correct goal; evaluation upper bound,
    /// not trainable.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, rename_all = "kebab-case")]
pub struct AgentSpec {
    pub variant: AgentVariant,
    /// Map geometry and variant switches; read only by `NeuralMap`.
    pub map: NeuralMapConfig,
    /// Feed the policy trunk only the memory output `o_t`, dropping the
    /// state embedding `s_t`.
    pub pure_ot: bool,
    /// Replace the trunk's linear layer with an LSTM pre-output layer
    /// (map agent only).
    pub hybrid_lstm: bool,
}

impl Default for AgentSpec {
    fn default() -> Self {
        AgentSpec {
            variant: AgentVariant::NeuralMap,
            map: NeuralMapConfig::default(),
            pure_ot: false,
            hybrid_lstm: false,
        }
    }
}

impl AgentSpec {
    pub fn validate(&self) -> AdResult<()> {
        if self.variant == AgentVariant::NeuralMap {
            self.map.validate()?;
        }
        Ok(())
    }

    /// Width of the memory output `o_t` fed to the policy trunk.
    pub fn memory_output_dim(&self) -> usize {
        match self.variant {
            AgentVariant::NeuralMap => self.map.output_dim(),
            AgentVariant::Lstm => LSTM_HIDDEN,
            // the lookup output already carries the current embedding
            AgentVariant::Mqn => MQN_DIM + EMBED_DIM,
            AgentVariant::Random | AgentVariant::Oracle => 0,
        }
    }

    /// Width of the policy trunk input.
    pub fn trunk_input_dim(&self) -> usize {
        let base = self.memory_output_dim();
        match self.variant {
            AgentVariant::NeuralMap | AgentVariant::Lstm if !self.pure_ot => base + EMBED_DIM,
            _ => base,
        }
    }

    /// Width of the layer the two heads read from.
    pub fn head_input_dim(&self) -> usize {
        if self.variant == AgentVariant::NeuralMap && self.hybrid_lstm {
            LSTM_HIDDEN
        } else {
            TRUNK_HIDDEN
        }
    }
}
