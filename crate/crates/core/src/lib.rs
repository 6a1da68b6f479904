//! Vehicular network slicing with an attention-augmented DDPG agent whose
//! attention weights are supervised by Monte-Carlo Shapley values.

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod eval;
pub mod explain;
pub mod nn;
pub mod seeds;

pub use config::NetworkConfig;
pub use error::{Error, Result};
