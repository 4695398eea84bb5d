use rand::RngCore;

use super::{Environment, GameModel, Outcome};
use crate::error::{Error, Result};
use crate::game::{joint_index, EnvStep, JointAction, StateId};

/// The one-state, two-agent, two-action demo game:
/// (Up, Left) pays 2 to each agent, every other joint action pays the
/// configured fallback. The state never changes; episodes end at the cap.
#[derive(Debug, Clone)]
pub struct SingleStateDemoEnv {
    payoffs: [[f64; 2]; 4],
    step_cap: usize,
    steps: usize,
    done: bool,
}

const SIZES: [usize; 2] = [2, 2];

impl SingleStateDemoEnv {
    /// Agent 0 chooses Up or Down; agent 1 chooses Left or Right.
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;

    pub fn new(step_cap: usize) -> Self {
        Self::with_other_reward(step_cap, 0.0)
    }

    pub fn with_other_reward(step_cap: usize, other: f64) -> Self {
        let mut payoffs = [[other; 2]; 4];
        payoffs[0] = [2.0, 2.0];
        SingleStateDemoEnv {
            payoffs,
            step_cap: step_cap.max(1),
            steps: 0,
            done: false,
        }
    }

    fn rewards(&self, joint: &[usize]) -> Result<Vec<f64>> {
        Ok(self.payoffs[joint_index(joint, &SIZES)?].to_vec())
    }
}

impl Environment for SingleStateDemoEnv {
    fn name(&self) -> &str {
        "single_state_demo"
    }

    fn n_agents(&self) -> usize {
        2
    }

    fn action_sizes(&self) -> &[usize] {
        &SIZES
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
            return Err(Error::Usage("step called on a finished demo episode".into()));
        }
        let rewards = self.rewards(joint)?;
        self.steps += 1;
        self.done = self.steps >= self.step_cap;
        Ok(EnvStep {
            next_state: StateId(0),
            rewards,
            terminal: false,
            truncated: self.done,
        })
    }

    fn state(&self) -> StateId {
        StateId(0)
    }

    fn observe(&self, agent: usize) -> Result<StateId> {
        if agent >= 2 {
            return Err(Error::Index {
                what: "agent",
                index: agent,
                limit: 2,
            });
        }
        Ok(StateId(0))
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn step_cap(&self) -> usize {
        self.step_cap
    }

    fn max_episode_return(&self) -> f64 {
        let best = self.payoffs.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        best * self.step_cap as f64
    }

    fn model(&self) -> Option<&dyn GameModel> {
        Some(self)
    }
}

impl GameModel for SingleStateDemoEnv {
    fn n_agents(&self) -> usize {
        2
    }

    fn action_sizes(&self) -> &[usize] {
        &SIZES
    }

    fn state_count(&self) -> usize {
        1
    }

    fn is_absorbing(&self, _state: StateId) -> bool {
        false
    }

    fn transition(&self, _state: StateId, joint: &[usize]) -> Result<Outcome> {
        Ok(Outcome {
            next_state: StateId(0),
            rewards: self.rewards(joint)?,
            terminal: false,
        })
    }

    fn horizon(&self) -> usize {
        self.step_cap
    }
}
