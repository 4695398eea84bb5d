use rand::RngCore;

use super::{Environment, GameModel, Outcome};
use crate::error::{Error, Result};
use crate::game::{joint_index, EnvStep, JointAction, StageGame, StateId};

/// A single-state game with fixed per-agent payoffs over joint actions.
///
/// With horizon 1 every episode is one move long and ends in an absorbing
/// state, so the optimal Q-values are exactly the payoff tables. Longer
/// horizons repeat the same stage game and truncate after `horizon` moves.
#[derive(Debug, Clone)]
pub struct MatrixGameEnv {
    game: StageGame,
    horizon: usize,
    steps: usize,
    done: bool,
}

impl MatrixGameEnv {
    pub fn new(game: StageGame, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("matrix game horizon must be positive".into()));
        }
        for k in 0..game.action_sizes().len() {
            if game.payoff(k).iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("matrix game payoffs must be finite".into()));
            }
        }
        Ok(MatrixGameEnv {
            game,
            horizon,
            steps: 0,
            done: false,
        })
    }

    /// Identical-interest game: every agent receives `payoff`.
    pub fn identical_interest(action_sizes: &[usize], payoff: Vec<f64>) -> Result<Self> {
        let game = StageGame::new(action_sizes, vec![payoff; action_sizes.len()])?;
        Self::new(game, 1)
    }

    pub fn game(&self) -> &StageGame {
        &self.game
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn rewards(&self, joint: &[usize]) -> Result<Vec<f64>> {
        let idx = joint_index(joint, self.game.action_sizes())?;
        Ok((0..self.game.action_sizes().len())
            .map(|k| self.game.payoff(k)[idx])
            .collect())
    }
}

impl Environment for MatrixGameEnv {
    fn name(&self) -> &str {
        "matrix_game"
    }

    fn n_agents(&self) -> usize {
        self.game.action_sizes().len()
    }

    fn action_sizes(&self) -> &[usize] {
        self.game.action_sizes()
    }

    fn state_count(&self) -> usize {
        1
    }

    fn observation_count(&self) -> usize {
        1
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> StateId {
        self.steps = 0;
        self.done = false;
        StateId(0)
    }

    fn step(&mut self, joint: &JointAction) -> Result<EnvStep> {
        if self.done {
            return Err(Error::Usage("step called on a finished matrix game".into()));
        }
        let rewards = self.rewards(joint)?;
        self.steps += 1;
        let last = self.steps >= self.horizon;
        self.done = last;
        Ok(EnvStep {
            next_state: StateId(0),
            rewards,
            terminal: last && self.horizon == 1,
            truncated: last && self.horizon > 1,
        })
    }

    fn state(&self) -> StateId {
        StateId(0)
    }

    fn observe(&self, agent: usize) -> Result<StateId> {
        if agent >= Environment::n_agents(self) {
            return Err(Error::Index {
                what: "agent",
                index: agent,
                limit: Environment::n_agents(self),
            });
        }
        Ok(StateId(0))
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn step_cap(&self) -> usize {
        self.horizon
    }

    fn max_episode_return(&self) -> f64 {
        let best = self
            .game
            .payoff(0)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        best * self.horizon as f64
    }

    fn model(&self) -> Option<&dyn GameModel> {
        Some(self)
    }
}

impl GameModel for MatrixGameEnv {
    fn n_agents(&self) -> usize {
        self.game.action_sizes().len()
    }

    fn action_sizes(&self) -> &[usize] {
        self.game.action_sizes()
    }

    fn state_count(&self) -> usize {
        1
    }

    fn is_absorbing(&self, _state: StateId) -> bool {
        false
    }

    /// Horizon 1 ends after the move; longer horizons are modelled as the
    /// infinitely repeated stage game.
    fn transition(&self, state: StateId, joint: &[usize]) -> Result<Outcome> {
        if state.0 != 0 {
            return Err(Error::Index {
                what: "state",
                index: state.0,
                limit: 1,
            });
        }
        Ok(Outcome {
            next_state: StateId(0),
            rewards: self.rewards(joint)?,
            terminal: self.horizon == 1,
        })
    }

    fn horizon(&self) -> usize {
        self.horizon
    }
}
