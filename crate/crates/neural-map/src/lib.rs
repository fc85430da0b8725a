//! A spatially structured external memory for reinforcement-learning
//! agents, with the partially observable goal-search maze benchmark it is
//! evaluated on, baseline agents, and a synchronous actor-critic trainer.
//!
//! Everything runs on a hand-rolled reverse-mode autodiff engine
//! ([`autodiff`]); no tensor framework is involved. See the guide under
//! `book/` (rendered by mdbook) or the [`guide`] module for a narrative
//! tour with runnable examples.

pub mod agents;
pub mod autodiff;
pub mod cli;
pub mod env;
pub mod map;
pub mod trainer;
