//! The spatially structured memory: a `C x H x W` feature block the agent
//! reads globally, addresses by content, and writes sparsely at (or
//! relative to) its own position, all differentiably.

pub mod config;
pub mod gradcheck;
pub mod heatmap;
pub mod params;
pub mod space;
pub mod step;

pub use config::{AddressingVariant, ContextVariant, NeuralMapConfig, ReadVariant, WriteVariant};
pub use gradcheck::composed_suite;
pub use params::{register, register_with_widths, MapParams, MapWidths, WriteParams};
pub use space::{normalize_coords, Heading, Pose, Velocity};
pub use step::{
    context_read, counter_transform, ego_update, global_read, gru_write, hard_write, map_step,
    update, Locus, MapStepOutput,
};
