//! Relational gating network for "what if" reasoning over procedural text.

pub mod bench;
pub mod cli;
pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gating;
pub mod interaction;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
