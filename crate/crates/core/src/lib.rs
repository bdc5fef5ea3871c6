//! Player-conditioned move prediction and style divergence on chess data.

pub mod accuracy;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod labels;
pub mod mcts;
pub mod policy;
pub mod style;
pub mod synthetic;

pub use error::{Error, Result};
