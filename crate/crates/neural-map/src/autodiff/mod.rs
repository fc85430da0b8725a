//! Reverse-mode automatic differentiation on a per-pass tape.
//!
//! The graph is rebuilt from scratch every forward pass; node handles are
//! indices into a flat arena, so creation order is already a topological
//! order and the backward sweep is a single reverse scan.

pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod ops;
pub mod optim;
pub mod params;
pub mod scalar;
pub mod shape;

pub use error::{AdError, AdResult};
pub use graph::{BackCtx, BackwardFn, Graph, Value};
pub use optim::{RmsProp, RmsPropConfig};
pub use params::{Binding, Init, ParamId, ParamStore};
pub use scalar::Real;
pub use shape::Shape;
