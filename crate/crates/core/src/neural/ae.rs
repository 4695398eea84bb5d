//! Neural advisor evaluation: replay-trained networks bootstrapping from the
//! advisor's value of the target network at the next state.

use serde::{Deserialize, Serialize};

use crate::advisor::AdvisorPanel;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::game::{advisor_q, JointAction, StateId};
use crate::rng::RunRngs;
use crate::tabular::{select_action, EpisodeSummary, Mixture};

use super::{greedy_from_net, others_of, train_round, NetConfig, NeuralOutcome, QAgent, ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuralAeConfig {
    pub beta: f64,
    pub eta: f64,
    pub eta_prime: f64,
    #[serde(default)]
    pub net: NetConfig,
}

impl NeuralAeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        self.mixture().validate()?;
        self.net.validate()
    }

    pub fn mixture(&self) -> Mixture {
        Mixture {
            advisor: self.eta_prime,
            random: self.eta,
        }
    }
}

pub struct NeuralAeTrainer<'a> {
    env: &'a mut dyn Environment,
    advisors: AdvisorPanel,
    config: NeuralAeConfig,
    agents: Vec<QAgent>,
    buffer: ReplayBuffer,
    sizes: Vec<usize>,
    episode: usize,
    iterations: usize,
}

impl<'a> NeuralAeTrainer<'a> {
    pub fn new(
        env: &'a mut dyn Environment,
        advisors: AdvisorPanel,
        config: NeuralAeConfig,
        rngs: &mut RunRngs,
    ) -> Result<Self> {
        config.validate()?;
        let n = env.n_agents();
        if advisors.is_empty() || advisors.n_agents() != n {
            return Err(Error::Config("advisor evaluation needs an advisor for every agent".into()));
        }
        let sizes = env.action_sizes().to_vec();
        let layers = config
            .net
            .layer_sizes(env.observation_count(), sizes.iter().product());
        let agents = (0..n)
            .map(|_| QAgent::new(&layers, &mut rngs.init))
            .collect::<Result<Vec<_>>>()?;
        Ok(NeuralAeTrainer {
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

    pub fn run_episode(&mut self, rngs: &mut RunRngs) -> Result<EpisodeSummary> {
        let n = self.env.n_agents();
        self.env.reset(&mut rngs.env);
        let mut obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
        let mut previous = vec![0; n];
        let mut rewards = vec![0.0; n];
        let mut steps = 0;
        let mixture = self.config.mixture();
        loop {
            let state = self.env.state();
            let mut actions = vec![0; n];
            for (j, slot) in actions.iter_mut().enumerate() {
                let others = others_of(&previous, j);
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
            let step = self.env.step(&JointAction(actions.clone()))?;
            self.advisors.observe_transition(&step);
            steps += 1;
            for (acc, r) in rewards.iter_mut().zip(&step.rewards) {
                *acc += r;
            }
            let next_obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
            let (next_actions, next_solutions) = if step.terminal {
                (actions.clone(), None)
            } else {
                let mut recs = Vec::with_capacity(n);
                let mut sols = Vec::with_capacity(n);
                for j in 0..n {
                    recs.push(self.advisors.recommend(step.next_state, j, &mut rngs.advisor)?);
                    sols.push(self.advisors.solve(step.next_state, j)?);
                }
                (recs, Some(sols))
            };
            self.buffer.push(Transition {
                obs: obs.clone(),
                actions: actions.clone(),
                rewards: step.rewards.clone(),
                next_obs: next_obs.clone(),
                next_actions,
                next_solutions,
                terminal: step.terminal,
            });
            if step.done() {
                break;
            }
            obs = next_obs;
            previous = actions;
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
            |j, t, q_next| {
                let sols = t
                    .next_solutions
                    .as_ref()
                    .ok_or_else(|| Error::Usage("non-terminal transition without advisor solution".into()))?;
                advisor_q(&sols[j], q_next)
            },
        )?;
        let summary = EpisodeSummary {
            episode: self.episode,
            rewards,
            epsilon: self.config.eta,
            epsilon_prime: self.config.eta_prime,
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

pub fn train_ae_nn(
    env: &mut dyn Environment,
    advisors: AdvisorPanel,
    config: &NeuralAeConfig,
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<NeuralOutcome> {
    NeuralAeTrainer::new(env, advisors, config.clone(), rngs)?.run(episodes, rngs, |_| Ok(()))
}
