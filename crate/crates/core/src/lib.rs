//! Advisor-guided multi-agent Q-learning for general-sum stochastic games.

pub mod advisor;
pub mod env;
pub mod error;
pub mod game;
pub mod harness;
pub mod neural;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod tabular;

pub use error::{Error, Result};
