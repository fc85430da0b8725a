//! Policy/value agents behind one step interface: the map-memory agent,
//! an LSTM baseline, a memory-network baseline, and a uniform-random
//! floor, plus a shortest-path oracle for evaluation bounds.

pub mod agent;
pub mod carry;
pub mod config;
pub mod net;
pub mod params;

pub use agent::{entropy_of, oracle_action, Agent, PolicyOutput, StepContext};
pub use carry::{AgentCarry, CarrySnapshot};
pub use config::{
    AgentSpec, AgentVariant, ACTION_COUNT, EMBED_DIM, EMBED_HIDDEN, LSTM_HIDDEN, MQN_DIM,
    MQN_SLOTS, TRUNK_HIDDEN,
};
pub use net::{embed_observation, lstm_cell, mqn_lookup};
pub use params::{register_agent, AgentParams, EmbedParams, LstmParams, TrunkParams, VariantParams};
