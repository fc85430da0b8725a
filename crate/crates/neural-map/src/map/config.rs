//! Structural configuration of the map memory.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdError, AdResult};

/// How the context read addresses the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextVariant {
    /// Query scores against full feature columns; read returns `C` dims.
    Plain,
    /// Columns split channel-wise into key and value halves; queries score
    /// against keys, the read returns the `C/2`-dim value half.
    KeyValue,
}

/// How the write vector is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WriteVariant {
    /// Unconditional two-layer network output replaces the column.
    Hard,
    /// Gated convex blend between the old column and a candidate.
    Gru,
}

/// How agent motion maps onto the memory lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AddressingVariant {
    /// World positions index the map directly; writes land at the pose.
    Absolute,
    /// The map is counter-shifted by the agent's velocity each step and
    /// writes always land at the center cell.
    Egocentric,
}

/// What the global read path sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "k")]
pub enum ReadVariant {
    /// Convolve the whole map.
    Global,
    /// Convolve an odd `k`-sized window centered on the agent.
    Crop(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralMapConfig {
    /// Feature channels `C`.
    pub channels: usize,
    /// Spatial extent, rows.
    pub height: usize,
    /// Spatial extent, columns.
    pub width: usize,
    pub context: ContextVariant,
    pub write: WriteVariant,
    pub addressing: AddressingVariant,
    pub read: ReadVariant,
}

impl Default for NeuralMapConfig {
    /// Full-scale maze setting: 32 channels over a 15x15 lattice, plain
    /// context addressing, hard writes, absolute positions, global read.
    fn default() -> Self {
        NeuralMapConfig {
            channels: 32,
            height: 15,
            width: 15,
            context: ContextVariant::Plain,
            write: WriteVariant::Hard,
            addressing: AddressingVariant::Absolute,
            read: ReadVariant::Global,
        }
    }
}

impl NeuralMapConfig {
    pub fn validate(&self) -> AdResult<()> {
        let fail = |message: String| Err(AdError::Argument { op: "map-config", message });
        if self.channels == 0 || self.height == 0 || self.width == 0 {
            return fail(format!(
                "degenerate extents {}x{}x{}",
                self.channels, self.height, self.width
            ));
        }
        if self.context == ContextVariant::KeyValue && self.channels % 2 != 0 {
            return fail(format!("key-value split needs even channel count, got {}", self.channels));
        }
        if let ReadVariant::Crop(k) = self.read {
            if k % 2 == 0 || k > self.height.min(self.width) {
                return fail(format!(
                    "crop window {k} must be odd and at most {}",
                    self.height.min(self.width)
                ));
            }
        }
        Ok(())
    }

    /// Length of the context read vector `c`.
    pub fn context_dim(&self) -> usize {
        match self.context {
            ContextVariant::Plain => self.channels,
            ContextVariant::KeyValue => self.channels / 2,
        }
    }

    /// Length of the step output `o = [r, c, w]`.
    pub fn output_dim(&self) -> usize {
        2 * self.channels + self.context_dim()
    }

    /// Spatial extent seen by the convolutional read path.
    pub fn read_extent(&self) -> (usize, usize) {
        match self.read {
            ReadVariant::Global => (self.height, self.width),
            ReadVariant::Crop(k) => (k, k),
        }
    }

    /// Fixed write cell in egocentric mode.
    pub fn center(&self) -> (i64, i64) {
        ((self.width / 2) as i64, (self.height / 2) as i64)
    }
}
