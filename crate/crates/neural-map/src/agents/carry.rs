//! Recurrent state carried between steps. Inside one rollout the carry
//! holds live graph values; across rollout or episode boundaries it is
//! detached to plain numbers so no gradient crosses the boundary.

use std::collections::VecDeque;

use crate::autodiff::{AdError, AdResult, Graph, Real, Shape, Value};

use super::config::{AgentSpec, AgentVariant, EMBED_DIM, LSTM_HIDDEN, MQN_SLOTS};

#[derive(Debug, Clone)]
pub enum AgentCarry {
    NeuralMap {
        /// `[C, H, W]` memory block.
        map: Value,
        /// Hybrid pre-output LSTM state `(h, c)`.
        lstm: Option<(Value, Value)>,
    },
    Lstm {
        h: Value,
        c: Value,
    },
    Mqn {
        /// Oldest first, at most [`MQN_SLOTS`] entries.
        buffer: VecDeque<Value>,
    },
    Stateless,
}

/// Graph-independent copy of a carry.
#[derive(Debug, Clone, PartialEq)]
pub enum CarrySnapshot<E> {
    NeuralMap { map: Vec<E>, lstm: Option<(Vec<E>, Vec<E>)> },
    Lstm { h: Vec<E>, c: Vec<E> },
    Mqn { buffer: Vec<Vec<E>> },
    Stateless,
}

impl AgentCarry {
    /// Start-of-episode state: zero memory, zero recurrent vectors, empty
    /// attention buffer. Leaves carry no parents, so nothing upstream of
    /// an episode start receives gradient.
    pub fn initial<E: Real>(spec: &AgentSpec, g: &mut Graph<E>) -> AgentCarry {
        let zeros = |g: &mut Graph<E>, n: usize| g.leaf(vec![E::zero(); n], Shape::vector(n));
        match spec.variant {
            AgentVariant::NeuralMap => {
                let m = &spec.map;
                let map = g.leaf(
                    vec![E::zero(); m.channels * m.height * m.width],
                    Shape::new([m.channels, m.height, m.width]),
                );
                let lstm = spec
                    .hybrid_lstm
                    .then(|| (zeros(g, LSTM_HIDDEN), zeros(g, LSTM_HIDDEN)));
                AgentCarry::NeuralMap { map, lstm }
            }
            AgentVariant::Lstm => {
                AgentCarry::Lstm { h: zeros(g, LSTM_HIDDEN), c: zeros(g, LSTM_HIDDEN) }
            }
            AgentVariant::Mqn => AgentCarry::Mqn { buffer: VecDeque::new() },
            AgentVariant::Random | AgentVariant::Oracle => AgentCarry::Stateless,
        }
    }

    /// Detaches every held value into plain data.
    pub fn snapshot<E: Real>(&self, g: &Graph<E>) -> CarrySnapshot<E> {
        match self {
            AgentCarry::NeuralMap { map, lstm } => CarrySnapshot::NeuralMap {
                map: g.detach(*map),
                lstm: lstm.map(|(h, c)| (g.detach(h), g.detach(c))),
            },
            AgentCarry::Lstm { h, c } => {
                CarrySnapshot::Lstm { h: g.detach(*h), c: g.detach(*c) }
            }
            AgentCarry::Mqn { buffer } => {
                CarrySnapshot::Mqn { buffer: buffer.iter().map(|&v| g.detach(v)).collect() }
            }
            AgentCarry::Stateless => CarrySnapshot::Stateless,
        }
    }

    /// Re-leafs a snapshot into a (usually fresh) graph.
    pub fn restore<E: Real>(
        spec: &AgentSpec,
        g: &mut Graph<E>,
        snap: &CarrySnapshot<E>,
    ) -> AdResult<AgentCarry> {
        let mismatch = || AdError::State {
            op: "carry-restore",
            message: "snapshot variant does not match the agent".into(),
        };
        let vector = |g: &mut Graph<E>, data: &Vec<E>| {
            let n = data.len();
            g.leaf(data.clone(), Shape::vector(n))
        };
        match (spec.variant, snap) {
            (AgentVariant::NeuralMap, CarrySnapshot::NeuralMap { map, lstm }) => {
                let m = &spec.map;
                if map.len() != m.channels * m.height * m.width {
                    return Err(mismatch());
                }
                let map = g.leaf(map.clone(), Shape::new([m.channels, m.height, m.width]));
                let lstm = match (spec.hybrid_lstm, lstm) {
                    (true, Some((h, c))) => Some((vector(g, h), vector(g, c))),
                    (false, None) => None,
                    _ => return Err(mismatch()),
                };
                Ok(AgentCarry::NeuralMap { map, lstm })
            }
            (AgentVariant::Lstm, CarrySnapshot::Lstm { h, c }) => {
                Ok(AgentCarry::Lstm { h: vector(g, h), c: vector(g, c) })
            }
            (AgentVariant::Mqn, CarrySnapshot::Mqn { buffer }) => {
                if buffer.len() > MQN_SLOTS || buffer.iter().any(|e| e.len() != EMBED_DIM) {
                    return Err(mismatch());
                }
                Ok(AgentCarry::Mqn {
                    buffer: buffer.iter().map(|e| vector(g, e)).collect(),
                })
            }
            (AgentVariant::Random | AgentVariant::Oracle, CarrySnapshot::Stateless) => {
                Ok(AgentCarry::Stateless)
            }
            _ => Err(mismatch()),
        }
    }
}
