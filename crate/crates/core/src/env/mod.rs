//! Stochastic-game environments.

mod demo;
mod grid_maze;
mod matrix;

pub use demo::SingleStateDemoEnv;
pub use grid_maze::{
    Cell, GridMazeEnv, GridMazeLayout, MazeAction, MazeRewards, ObservationMode, StartMode,
};
pub use matrix::MatrixGameEnv;

use rand::RngCore;

use crate::error::Result;
use crate::game::{EnvStep, JointAction, StateId};

/// An N-player stochastic game that can be played one episode at a time.
pub trait Environment {
    fn name(&self) -> &str;

    fn n_agents(&self) -> usize;

    fn action_sizes(&self) -> &[usize];

    /// Number of joint states.
    fn state_count(&self) -> usize;

    /// Number of distinct values [`Environment::observe`] can return.
    fn observation_count(&self) -> usize;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId;

    /// Applies a joint action. Fails if the episode is over.
    fn step(&mut self, joint: &JointAction) -> Result<EnvStep>;

    fn state(&self) -> StateId;

    /// What `agent` sees of the current state.
    fn observe(&self, agent: usize) -> Result<StateId>;

    /// True once the episode terminated or was truncated.
    fn is_done(&self) -> bool;

    fn step_cap(&self) -> usize;

    /// Largest undiscounted return a single episode can collect.
    fn max_episode_return(&self) -> f64;

    /// Exact transition model, when states and joint actions are enumerable.
    fn model(&self) -> Option<&dyn GameModel> {
        None
    }
}

/// Outcome of applying a joint action in a known state.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next_state: StateId,
    pub rewards: Vec<f64>,
    pub terminal: bool,
}

/// Deterministic, enumerable transition model.
pub trait GameModel: Sync {
    fn n_agents(&self) -> usize;

    fn action_sizes(&self) -> &[usize];

    fn state_count(&self) -> usize;

    /// States in which the game has already ended.
    fn is_absorbing(&self, state: StateId) -> bool;

    fn transition(&self, state: StateId, joint: &[usize]) -> Result<Outcome>;

    /// Horizon used when rolling out policies from any state.
    fn horizon(&self) -> usize;
}
