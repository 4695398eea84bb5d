//! Tabular advisor evaluation.
//!
//! Agents act with fixed probabilities (advisor, random, greedy) and
//! bootstrap from the value of the advisor's own solution at the next state,
//! so the tables converge to the advisor's value rather than to an optimum.

use serde::{Deserialize, Serialize};

use crate::advisor::AdvisorPanel;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::game::{greedy_own_action, JointAction, JointQTable, StateId};
use crate::rng::RunRngs;

use super::select::{select_action, ActionSource, Mixture};
use super::update::{ae_update, td_update, StepSizes};
use super::{EpisodeSummary, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Random-action probability.
    pub eta: f64,
    /// Advisor-following probability.
    pub eta_prime: f64,
    #[serde(default)]
    pub q_init: f64,
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        StepSizes::new(self.alpha, self.beta)?;
        self.mixture().validate()?;
        if !self.q_init.is_finite() {
            return Err(Error::Config("q_init must be finite".into()));
        }
        Ok(())
    }

    pub fn mixture(&self) -> Mixture {
        Mixture {
            advisor: self.eta_prime,
            random: self.eta,
        }
    }

    pub fn step_sizes(&self) -> StepSizes {
        StepSizes {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// One draw of the evaluation mixture for `agent`. Greedy actions condition
/// on the other agents' previous actions.
#[allow(clippy::too_many_arguments)]
pub fn select_action_ae(
    table: &JointQTable,
    agent: usize,
    obs: StateId,
    previous: &[usize],
    mixture: Mixture,
    advisors: &AdvisorPanel,
    advisor_state: StateId,
    rngs: &mut RunRngs,
) -> Result<(usize, ActionSource)> {
    let n_actions = table.action_sizes()[agent];
    let others: Vec<usize> = previous
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != agent)
        .map(|(_, &a)| a)
        .collect();
    let advisor_rng = &mut rngs.advisor;
    select_action(
        mixture,
        n_actions,
        &mut rngs.explore,
        |_| advisors.recommend(advisor_state, agent, advisor_rng),
        |rng| greedy_own_action(table, obs, agent, &others, rng),
    )
}

/// Drives one advisor-evaluation run.
pub struct AeTrainer<'a> {
    env: &'a mut dyn Environment,
    advisors: AdvisorPanel,
    config: AeConfig,
    tables: Vec<JointQTable>,
    episode: usize,
    obs: Vec<StateId>,
    previous: Vec<usize>,
    episode_rewards: Vec<f64>,
    max_change: f64,
    steps: usize,
}

impl<'a> AeTrainer<'a> {
    pub fn new(env: &'a mut dyn Environment, advisors: AdvisorPanel, config: AeConfig) -> Result<Self> {
        config.validate()?;
        if advisors.is_empty() {
            return Err(Error::Config("advisor evaluation needs an advisor".into()));
        }
        let n = env.n_agents();
        if advisors.n_agents() != n {
            return Err(Error::Config(format!(
                "advisor panel built for {} agents, environment has {n}",
                advisors.n_agents()
            )));
        }
        let sizes = env.action_sizes().to_vec();
        let states = env.observation_count();
        let tables = (0..n)
            .map(|j| JointQTable::filled(j, states, &sizes, config.q_init))
            .collect();
        Ok(AeTrainer {
            env,
            advisors,
            config,
            tables,
            episode: 0,
            obs: Vec::new(),
            previous: Vec::new(),
            episode_rewards: vec![0.0; n],
            max_change: 0.0,
            steps: 0,
        })
    }

    pub fn tables(&self) -> &[JointQTable] {
        &self.tables
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    fn observations(&self) -> Result<Vec<StateId>> {
        (0..self.env.n_agents()).map(|j| self.env.observe(j)).collect()
    }

    /// Resets the environment; previous actions start at action 0.
    pub fn begin_episode(&mut self, rngs: &mut RunRngs) -> Result<()> {
        let n = self.env.n_agents();
        self.env.reset(&mut rngs.env);
        self.obs = self.observations()?;
        self.previous = vec![0; n];
        self.episode_rewards = vec![0.0; n];
        self.max_change = 0.0;
        self.steps = 0;
        Ok(())
    }

    /// Chooses, executes and learns from one joint action. Returns true when
    /// the episode is over.
    pub fn step(&mut self, rngs: &mut RunRngs) -> Result<bool> {
        let n = self.env.n_agents();
        let mixture = self.config.mixture();
        let state = self.env.state();
        let mut actions = vec![0; n];
        for (j, slot) in actions.iter_mut().enumerate() {
            *slot = select_action_ae(
                &self.tables[j],
                j,
                self.obs[j],
                &self.previous,
                mixture,
                &self.advisors,
                state,
                rngs,
            )?
            .0;
        }
        let joint = JointAction(actions);
        let step = self.env.step(&joint)?;
        self.advisors.observe_transition(&step);
        self.steps += 1;
        for (acc, r) in self.episode_rewards.iter_mut().zip(&step.rewards) {
            *acc += r;
        }
        let sizes = self.config.step_sizes();
        let next_obs = if step.terminal {
            Vec::new()
        } else {
            self.observations()?
        };
        for j in 0..n {
            let table = &mut self.tables[j];
            let before = table.get(self.obs[j], &joint)?;
            let after = if step.terminal {
                td_update(table, self.obs[j], &joint, step.rewards[j], sizes.alpha)?
            } else {
                let solution = self.advisors.solve(step.next_state, j)?;
                ae_update(
                    table,
                    self.obs[j],
                    &joint,
                    step.rewards[j],
                    &solution,
                    next_obs[j],
                    sizes,
                )?
            };
            self.max_change = self.max_change.max((after - before).abs());
        }
        self.previous = joint.0;
        self.obs = next_obs;
        Ok(step.done())
    }

    pub fn end_episode(&mut self) -> EpisodeSummary {
        self.advisors.end_episode();
        let summary = EpisodeSummary {
            episode: self.episode,
            rewards: self.episode_rewards.clone(),
            epsilon: self.config.eta,
            epsilon_prime: self.config.eta_prime,
            steps: self.steps,
            max_change: self.max_change,
        };
        self.episode += 1;
        summary
    }

    pub fn run_episode(&mut self, rngs: &mut RunRngs) -> Result<EpisodeSummary> {
        self.begin_episode(rngs)?;
        while !self.step(rngs)? {}
        Ok(self.end_episode())
    }

    pub fn run<F>(&mut self, episodes: usize, rngs: &mut RunRngs, mut observer: F) -> Result<TrainOutcome>
    where
        F: FnMut(&EpisodeSummary, &[JointQTable]) -> Result<()>,
    {
        let mut outcome = TrainOutcome::default();
        for _ in 0..episodes {
            let summary = self.run_episode(rngs)?;
            observer(&summary, &self.tables)?;
            outcome.push(summary);
        }
        outcome.tables = self.tables.clone();
        Ok(outcome)
    }
}

/// Evaluates the advisor(s) in `advisors` for `episodes` episodes.
pub fn train_ae(
    env: &mut dyn Environment,
    advisors: AdvisorPanel,
    config: &AeConfig,
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<TrainOutcome> {
    AeTrainer::new(env, advisors, config.clone())?.run(episodes, rngs, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::{Advisor, ScriptedSequenceAdvisor};
    use crate::env::SingleStateDemoEnv;
    use crate::game::AdvisorSolution;

    fn demo_script() -> Box<dyn Advisor> {
        let ul = AdvisorSolution::deterministic(&[0, 0], &[2, 2]).unwrap();
        Box::new(
            ScriptedSequenceAdvisor::new(vec![ul.clone(), ul, AdvisorSolution::uniform(&[2, 2])])
                .unwrap(),
        )
    }

    fn imitate() -> AeConfig {
        AeConfig {
            alpha: 0.9,
            beta: 0.9,
            eta: 0.0,
            eta_prime: 1.0,
            q_init: 0.0,
        }
    }

    #[test]
    fn two_step_trace() {
        let mut env = SingleStateDemoEnv::new(2);
        let mut rngs = RunRngs::from_seed(0);
        let mut t = AeTrainer::new(&mut env, AdvisorPanel::shared(demo_script(), 2), imitate()).unwrap();
        t.begin_episode(&mut rngs).unwrap();
        let mut trace = Vec::new();
        loop {
            let done = t.step(&mut rngs).unwrap();
            trace.push(t.tables()[0].get(StateId(0), &[0, 0]).unwrap());
            if done {
                break;
            }
        }
        assert_eq!(trace.len(), 2);
        assert!((trace[0] - 1.8).abs() < 1e-12);
        assert!((trace[1] - 2.3445).abs() < 1e-12, "{}", trace[1]);
        // Both agents see the same reward and solution.
        assert_eq!(t.tables()[0].values(), t.tables()[1].values());
    }

    #[test]
    fn needs_an_advisor() {
        let mut env = SingleStateDemoEnv::new(2);
        assert!(AeTrainer::new(&mut env, AdvisorPanel::none(2), imitate()).is_err());
    }

    #[test]
    fn rejects_bad_mixture() {
        let mut env = SingleStateDemoEnv::new(2);
        let c = AeConfig {
            eta: 0.6,
            eta_prime: 0.6,
            ..imitate()
        };
        assert!(matches!(
            AeTrainer::new(&mut env, AdvisorPanel::shared(demo_script(), 2), c),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn deterministic_advisor_value_is_geometric() {
        // Permanent (Up, Left) with reward 2: value 2 / (1 - 0.9) = 20.
        let mut env = SingleStateDemoEnv::new(200);
        let ul = AdvisorSolution::deterministic(&[0, 0], &[2, 2]).unwrap();
        let adv: Box<dyn Advisor> = Box::new(ScriptedSequenceAdvisor::new(vec![ul]).unwrap());
        let c = AeConfig {
            alpha: 0.5,
            ..imitate()
        };
        let mut rngs = RunRngs::from_seed(0);
        let out = train_ae(&mut env, AdvisorPanel::shared(adv, 2), &c, 5, &mut rngs).unwrap();
        let q = out.tables[0].get(StateId(0), &[0, 0]).unwrap();
        assert!((q - 20.0).abs() < 1e-6, "{q}");
    }
}
