//! Neural decision making: a DQN-style eval/target pair per agent trained
//! from replay on the decision-making target `r + β Q_target(s′, 𝒂′)`.
//!
//! Unlike the tabular learner there are no copies of other agents' tables:
//! greedy actions condition on the other agents' observed current actions.

use serde::{Deserialize, Serialize};

use crate::advisor::AdvisorPanel;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::game::{joint_index, JointAction, StateId};
use crate::rng::RunRngs;
use crate::tabular::{select_action, EpisodeSummary, Schedule};

use super::{greedy_from_net, others_of, train_round, NetConfig, NeuralOutcome, QAgent, ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralDmConfig {
    pub beta: f64,
    pub epsilon: Schedule,
    pub epsilon_prime: Schedule,
    #[serde(default)]
    pub net: NetConfig,
}

impl NeuralDmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        self.epsilon.validate()?;
        self.epsilon_prime.validate()?;
        if self.epsilon.start + self.epsilon_prime.start > 1.0 + 1e-12
            || self.epsilon.end + self.epsilon_prime.end > 1.0 + 1e-12
        {
            return Err(Error::Config("epsilon and epsilon_prime sum above 1".into()));
        }
        self.net.validate()
    }
}

pub struct NeuralDmTrainer<'a> {
    env: &'a mut dyn Environment,
    advisors: AdvisorPanel,
    config: NeuralDmConfig,
    agents: Vec<QAgent>,
    buffer: ReplayBuffer,
    sizes: Vec<usize>,
    episode: usize,
    iterations: usize,
}

impl<'a> NeuralDmTrainer<'a> {
    pub fn new(
        env: &'a mut dyn Environment,
        advisors: AdvisorPanel,
        config: NeuralDmConfig,
        rngs: &mut RunRngs,
    ) -> Result<Self> {
        config.validate()?;
        let n = env.n_agents();
        if advisors.is_empty() && (config.epsilon_prime.start > 0.0 || config.epsilon_prime.end > 0.0) {
            return Err(Error::Config("epsilon_prime > 0 needs an advisor".into()));
        }
        if !advisors.is_empty() && advisors.n_agents() != n {
            return Err(Error::Config("advisor panel does not match the agent count".into()));
        }
        let sizes = env.action_sizes().to_vec();
        let layers = config
            .net
            .layer_sizes(env.observation_count(), sizes.iter().product());
        let agents = (0..n)
            .map(|_| QAgent::new(&layers, &mut rngs.init))
            .collect::<Result<Vec<_>>>()?;
        Ok(NeuralDmTrainer {
            buffer: ReplayBuffer::new(config.net.buffer_capacity)?,
            env,
            advisors,
            config,
            agents,
            sizes,
            episode: 0,
            iterations: 0,
        })
    }

    pub fn agents(&self) -> &[QAgent] {
        &self.agents
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Gradient steps taken so far (per agent).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn choose(&self, obs: &[StateId], current: &[usize], state: StateId, rngs: &mut RunRngs) -> Result<Vec<usize>> {
        let mixture = crate::tabular::Mixture {
            advisor: self.config.epsilon_prime.value(self.episode),
            random: self.config.epsilon.value(self.episode),
        };
        let mut next = vec![0; obs.len()];
        for (j, slot) in next.iter_mut().enumerate() {
            let others = others_of(current, j);
            let agent = &self.agents[j];
            let sizes = &self.sizes;
            let advisors = &self.advisors;
            let advisor_rng = &mut rngs.advisor;
            *slot = select_action(
                mixture,
                sizes[j],
                &mut rngs.explore,
                |_| advisors.recommend(state, j, advisor_rng),
                |rng| greedy_from_net(agent, j, obs[j], sizes, &others, rng),
            )?
            .0;
        }
        Ok(next)
    }

    /// Plays one episode, then trains every agent from replay.
    pub fn run_episode(&mut self, rngs: &mut RunRngs) -> Result<EpisodeSummary> {
        let n = self.env.n_agents();
        self.env.reset(&mut rngs.env);
        let mut obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
        let mut actions = self.choose(&obs, &vec![0; n], self.env.state(), rngs)?;
        let mut rewards = vec![0.0; n];
        let mut steps = 0;
        loop {
            let joint = JointAction(actions.clone());
            let step = self.env.step(&joint)?;
            self.advisors.observe_transition(&step);
            steps += 1;
            for (acc, r) in rewards.iter_mut().zip(&step.rewards) {
                *acc += r;
            }
            let next_obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
            let next_actions = if step.terminal {
                actions.clone()
            } else {
                self.choose(&next_obs, &actions, step.next_state, rngs)?
            };
            self.buffer.push(Transition {
                obs: obs.clone(),
                actions: actions.clone(),
                rewards: step.rewards.clone(),
                next_obs: next_obs.clone(),
                next_actions: next_actions.clone(),
                next_solutions: None,
                terminal: step.terminal,
            });
            if step.done() {
                break;
            }
            obs = next_obs;
            actions = next_actions;
        }
        self.advisors.end_episode();

        let updates = self.config.net.updates_per_episode.unwrap_or(steps);
        let sizes = self.sizes.clone();
        let worst = train_round(
            &mut self.agents,
            &self.buffer,
            &self.config.net,
            &sizes,
            self.config.beta,
            updates,
            &mut self.iterations,
            &mut rngs.buffer,
            |_, t, q_next| Ok(q_next[joint_index(&t.next_actions, &sizes)?]),
        )?;
        let summary = EpisodeSummary {
            episode: self.episode,
            rewards,
            epsilon: self.config.epsilon.value(self.episode),
            epsilon_prime: self.config.epsilon_prime.value(self.episode),
            steps,
            max_change: worst,
        };
        self.episode += 1;
        Ok(summary)
    }

    pub fn run<F>(&mut self, episodes: usize, rngs: &mut RunRngs, mut observer: F) -> Result<NeuralOutcome>
    where
        F: FnMut(&EpisodeSummary) -> Result<()>,
    {
        let mut outcome = NeuralOutcome::default();
        for _ in 0..episodes {
            let s = self.run_episode(rngs)?;
            observer(&s)?;
            outcome.episodes.push(s);
        }
        outcome.nets = self.agents.iter().map(|a| a.eval.clone()).collect();
        Ok(outcome)
    }
}

pub fn train_dm_nn(
    env: &mut dyn Environment,
    advisors: AdvisorPanel,
    config: &NeuralDmConfig,
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<NeuralOutcome> {
    NeuralDmTrainer::new(env, advisors, config.clone(), rngs)?.run(episodes, rngs, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{MatrixGameEnv, SingleStateDemoEnv};

    fn config() -> NeuralDmConfig {
        NeuralDmConfig {
            beta: 0.9,
            epsilon: Schedule::constant(1.0),
            epsilon_prime: Schedule::constant(0.0),
            net: NetConfig {
                hidden: vec![8],
                batch_size: 4,
                buffer_capacity: 100,
                ..NetConfig::default()
            },
        }
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let mut env = SingleStateDemoEnv::new(5);
        let mut c = config();
        c.net.learning_rate = 0.0;
        let mut rngs = RunRngs::from_seed(1);
        let mut t = NeuralDmTrainer::new(&mut env, AdvisorPanel::none(2), c, &mut rngs).unwrap();
        let before = t.agents()[0].eval.clone();
        t.run(5, &mut rngs, |_| Ok(())).unwrap();
        assert!(t.iterations() > 0);
        assert_eq!(t.agents()[0].eval, before);
    }

    #[test]
    fn no_training_before_buffer_holds_a_batch() {
        let mut env = SingleStateDemoEnv::new(1);
        let mut c = config();
        c.net.batch_size = 10;
        let mut rngs = RunRngs::from_seed(2);
        let mut t = NeuralDmTrainer::new(&mut env, AdvisorPanel::none(2), c, &mut rngs).unwrap();
        let before = t.agents()[0].eval.clone();
        for _ in 0..9 {
            t.run_episode(&mut rngs).unwrap();
        }
        assert_eq!(t.iterations(), 0);
        assert_eq!(t.agents()[0].eval, before);
        t.run_episode(&mut rngs).unwrap();
        assert_eq!(t.iterations(), 1);
    }

    #[test]
    fn learns_single_step_payoffs() {
        let payoff = vec![1.0, 0.0, 0.0, 0.5];
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], payoff.clone()).unwrap();
        let mut c = config();
        c.net.learning_rate = 0.05;
        let mut rngs = RunRngs::from_seed(3);
        let out = train_dm_nn(&mut env, AdvisorPanel::none(2), &c, 1500, &mut rngs).unwrap();
        let q = out.nets[0].forward(&[1.0]).unwrap();
        for (a, b) in q.iter().zip(&payoff) {
            assert!((a - b).abs() < 0.05, "{q:?}");
        }
    }

    #[test]
    fn same_seed_same_run() {
        let run = || {
            let mut env = SingleStateDemoEnv::new(4);
            let mut rngs = RunRngs::from_seed(9);
            train_dm_nn(&mut env, AdvisorPanel::none(2), &config(), 20, &mut rngs).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_reported() {
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], vec![1e7; 4]).unwrap();
        let mut rngs = RunRngs::from_seed(4);
        let err = train_dm_nn(&mut env, AdvisorPanel::none(2), &config(), 200, &mut rngs).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)), "{err}");
    }
}
