//! Desk-scale laboratory for graph-foundation-model pretraining, black-box
//! model-extraction attacks against it, and an empirical verifier for the
//! similarity-margin bound linking attacker/victim embedding closeness to
//! zero-shot prediction agreement.

pub mod error;
pub mod rng;
pub mod tensor;
pub mod text;
pub mod tag;
pub mod encoder;
pub mod victim;
pub mod train;
pub mod eval;
pub mod attacks;
pub mod defaults;
pub mod cli;

pub use error::{Error, Result};
