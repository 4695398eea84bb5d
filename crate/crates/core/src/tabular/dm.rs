//! Tabular decision making under advisor influence.
//!
//! Every agent keeps its own joint-action table plus a copy of every other
//! agent's table. Copies receive exactly the owner's updates, so they stay
//! bitwise equal to the owners; they exist because each agent predicts the
//! others' next greedy actions from what it holds locally.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::AdvisorPanel;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::game::{greedy_own_action, JointAction, JointQTable, StateId};
use crate::rng::RunRngs;

use super::schedule::{max_sum, Schedule};
use super::select::{select_action, ActionSource, Mixture};
use super::update::{dm_update, td_update, StepSizes};
use super::{EpisodeSummary, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Random-action probability.
    pub epsilon: Schedule,
    /// Advisor-following probability.
    pub epsilon_prime: Schedule,
    #[serde(default)]
    pub q_init: f64,
    /// Stop once an entire episode changes no entry by more than this.
    #[serde(default)]
    pub early_stop: Option<f64>,
    /// Draw every agent's first action of an episode uniformly at random.
    /// Combined with random start states this keeps every joint action
    /// reachable after exploration has decayed.
    #[serde(default)]
    pub exploring_starts: bool,
}

impl DmConfig {
    pub fn validate(&self) -> Result<()> {
        StepSizes::new(self.alpha, self.beta)?;
        self.epsilon.validate()?;
        self.epsilon_prime.validate()?;
        let peak = max_sum(&self.epsilon, &self.epsilon_prime);
        if peak > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "epsilon and epsilon_prime sum to {peak} at some episode"
            )));
        }
        if !self.q_init.is_finite() {
            return Err(Error::Config("q_init must be finite".into()));
        }
        if let Some(tol) = self.early_stop {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config("early_stop must be a positive tolerance".into()));
            }
        }
        Ok(())
    }

    pub fn step_sizes(&self) -> StepSizes {
        StepSizes {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn mixture(&self, episode: usize) -> Mixture {
        Mixture {
            advisor: self.epsilon_prime.value(episode),
            random: self.epsilon.value(episode),
        }
    }
}

/// One agent's tables.
#[derive(Debug, Clone, PartialEq)]
pub struct DmLearnerState {
    pub agent: usize,
    pub own: JointQTable,
    /// Copies of the other agents' tables; `None` at this agent's own index.
    pub copies: Vec<Option<JointQTable>>,
}

impl DmLearnerState {
    pub fn new(agent: usize, n_agents: usize, state_count: usize, sizes: &[usize], init: f64) -> Self {
        DmLearnerState {
            agent,
            own: JointQTable::filled(agent, state_count, sizes, init),
            copies: (0..n_agents)
                .map(|k| (k != agent).then(|| JointQTable::filled(k, state_count, sizes, init)))
                .collect(),
        }
    }

    /// This agent's view of agent `k`'s table.
    pub fn table_of(&self, k: usize) -> &JointQTable {
        if k == self.agent {
            &self.own
        } else {
            self.copies[k].as_ref().expect("copies exist for every other agent")
        }
    }

    fn table_of_mut(&mut self, k: usize) -> &mut JointQTable {
        if k == self.agent {
            &mut self.own
        } else {
            self.copies[k].as_mut().expect("copies exist for every other agent")
        }
    }
}

/// True when every agent's copy of every other agent's table is bitwise
/// equal to that agent's own table.
pub fn copies_coherent(learners: &[DmLearnerState]) -> bool {
    learners.iter().all(|l| {
        l.copies.iter().enumerate().all(|(k, c)| match c {
            None => k == l.agent,
            Some(copy) => {
                copy.values()
                    .iter()
                    .zip(learners[k].own.values())
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            }
        })
    })
}

/// Predicted greedy action of every agent other than `observer`, each one a
/// best response to the other agents' current actions, computed from
/// `observer`'s copies at the agents' next observations.
pub fn predict_others<R: rand::Rng + ?Sized>(
    learner: &DmLearnerState,
    next_obs: &[StateId],
    current: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut predicted = current.to_vec();
    for (k, &obs) in next_obs.iter().enumerate() {
        if k == learner.agent {
            continue;
        }
        let others: Vec<usize> = current
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &a)| a)
            .collect();
        predicted[k] = greedy_own_action(learner.table_of(k), obs, k, &others, rng)?;
    }
    Ok(predicted)
}

/// One draw of the three-way mixture for `learner`'s own next action.
/// `predicted` holds the other agents' predicted actions (the entry at the
/// learner's own index is ignored).
#[allow(clippy::too_many_arguments)]
pub fn select_action_dm(
    learner: &DmLearnerState,
    obs: StateId,
    predicted: &[usize],
    mixture: Mixture,
    advisors: &AdvisorPanel,
    advisor_state: StateId,
    rngs: &mut RunRngs,
) -> Result<(usize, ActionSource)> {
    let j = learner.agent;
    let n_actions = learner.own.action_sizes()[j];
    let others: Vec<usize> = predicted
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &a)| a)
        .collect();
    let advisor_rng = &mut rngs.advisor;
    select_action(
        mixture,
        n_actions,
        &mut rngs.explore,
        |_| advisors.recommend(advisor_state, j, advisor_rng),
        |rng| greedy_own_action(&learner.own, obs, j, &others, rng),
    )
}

/// Drives one decision-making run, one step or one episode at a time.
pub struct DmTrainer<'a> {
    env: &'a mut dyn Environment,
    advisors: AdvisorPanel,
    config: DmConfig,
    learners: Vec<DmLearnerState>,
    episode: usize,
    // Per-episode scratch.
    obs: Vec<StateId>,
    actions: Vec<usize>,
    episode_rewards: Vec<f64>,
    max_change: f64,
    steps: usize,
}

impl<'a> DmTrainer<'a> {
    pub fn new(env: &'a mut dyn Environment, advisors: AdvisorPanel, config: DmConfig) -> Result<Self> {
        config.validate()?;
        let n = env.n_agents();
        if advisors.n_agents() != n {
            return Err(Error::Config(format!(
                "advisor panel built for {} agents, environment has {n}",
                advisors.n_agents()
            )));
        }
        if advisors.is_empty() && (config.epsilon_prime.start > 0.0 || config.epsilon_prime.end > 0.0) {
            return Err(Error::Config(
                "epsilon_prime is positive but no advisor is configured".into(),
            ));
        }
        let sizes = env.action_sizes().to_vec();
        let states = env.observation_count();
        let learners = (0..n)
            .map(|j| DmLearnerState::new(j, n, states, &sizes, config.q_init))
            .collect();
        Ok(DmTrainer {
            env,
            advisors,
            config,
            learners,
            episode: 0,
            obs: Vec::new(),
            actions: Vec::new(),
            episode_rewards: vec![0.0; n],
            max_change: 0.0,
            steps: 0,
        })
    }

    pub fn learners(&self) -> &[DmLearnerState] {
        &self.learners
    }

    pub fn tables(&self) -> Vec<JointQTable> {
        self.learners.iter().map(|l| l.own.clone()).collect()
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn config(&self) -> &DmConfig {
        &self.config
    }

    fn observations(&self) -> Result<Vec<StateId>> {
        (0..self.env.n_agents()).map(|j| self.env.observe(j)).collect()
    }

    /// Resets the environment and picks every agent's first action. The
    /// other agents' "current" actions default to action 0 here. The mixture
    /// is always drawn so the random streams do not depend on
    /// `exploring_starts`.
    pub fn begin_episode(&mut self, rngs: &mut RunRngs) -> Result<()> {
        let n = self.env.n_agents();
        self.env.reset(&mut rngs.env);
        self.obs = self.observations()?;
        self.episode_rewards = vec![0.0; n];
        self.max_change = 0.0;
        self.steps = 0;
        let mixture = self.config.mixture(self.episode);
        let state = self.env.state();
        let current = vec![0; n];
        let mut first = vec![0; n];
        for j in 0..n {
            let predicted = predict_others(&self.learners[j], &self.obs, &current, &mut rngs.explore)?;
            let (a, _) = select_action_dm(
                &self.learners[j],
                self.obs[j],
                &predicted,
                mixture,
                &self.advisors,
                state,
                rngs,
            )?;
            first[j] = if self.config.exploring_starts {
                rngs.explore.gen_range(0..self.learners[j].own.action_sizes()[j])
            } else {
                a
            };
        }
        self.actions = first;
        Ok(())
    }

    /// Executes the current joint action, picks the next one and applies the
    /// update to every table and copy. Returns true when the episode is over.
    pub fn step(&mut self, rngs: &mut RunRngs) -> Result<bool> {
        let n = self.env.n_agents();
        let joint = JointAction(self.actions.clone());
        let step = self.env.step(&joint)?;
        self.advisors.observe_transition(&step);
        self.steps += 1;
        for (acc, r) in self.episode_rewards.iter_mut().zip(&step.rewards) {
            *acc += r;
        }
        let sizes = self.config.step_sizes();

        if step.terminal {
            for j in 0..n {
                for learner in self.learners.iter_mut() {
                    let table = learner.table_of_mut(j);
                    let before = table.get(self.obs[j], &joint)?;
                    let after = td_update(table, self.obs[j], &joint, step.rewards[j], sizes.alpha)?;
                    self.max_change = self.max_change.max((after - before).abs());
                }
            }
            return Ok(true);
        }

        let next_obs = self.observations()?;
        let mixture = self.config.mixture(self.episode);
        let next_state = step.next_state;
        let mut targets = Vec::with_capacity(n);
        let mut next_actions = vec![0; n];
        for j in 0..n {
            let mut predicted =
                predict_others(&self.learners[j], &next_obs, &self.actions, &mut rngs.explore)?;
            let (a, _) = select_action_dm(
                &self.learners[j],
                next_obs[j],
                &predicted,
                mixture,
                &self.advisors,
                next_state,
                rngs,
            )?;
            predicted[j] = a;
            next_actions[j] = a;
            targets.push(predicted);
        }
        // Agent j's target joint action is applied to its own table and to
        // everyone's copy of it, in the same order, so copies stay exact.
        for j in 0..n {
            for learner in self.learners.iter_mut() {
                let table = learner.table_of_mut(j);
                let before = table.get(self.obs[j], &joint)?;
                let after = dm_update(
                    table,
                    self.obs[j],
                    &joint,
                    step.rewards[j],
                    next_obs[j],
                    &targets[j],
                    sizes,
                )?;
                self.max_change = self.max_change.max((after - before).abs());
            }
        }
        self.obs = next_obs;
        self.actions = next_actions;
        Ok(step.truncated)
    }

    /// Closes the episode and advances the schedules.
    pub fn end_episode(&mut self) -> EpisodeSummary {
        self.advisors.end_episode();
        let summary = EpisodeSummary {
            episode: self.episode,
            rewards: self.episode_rewards.clone(),
            epsilon: self.config.epsilon.value(self.episode),
            epsilon_prime: self.config.epsilon_prime.value(self.episode),
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

    /// Runs up to `episodes` episodes, calling `observer` after each one.
    pub fn run<F>(&mut self, episodes: usize, rngs: &mut RunRngs, mut observer: F) -> Result<TrainOutcome>
    where
        F: FnMut(&EpisodeSummary, &[DmLearnerState]) -> Result<()>,
    {
        let mut outcome = TrainOutcome::default();
        for _ in 0..episodes {
            let summary = self.run_episode(rngs)?;
            observer(&summary, &self.learners)?;
            let stop = self.config.early_stop.is_some_and(|tol| summary.max_change < tol);
            outcome.push(summary);
            if stop {
                break;
            }
        }
        outcome.tables = self.tables();
        Ok(outcome)
    }
}

/// Trains every agent with decision making for `episodes` episodes.
pub fn train_dm(
    env: &mut dyn Environment,
    advisors: AdvisorPanel,
    config: &DmConfig,
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<TrainOutcome> {
    DmTrainer::new(env, advisors, config.clone())?.run(episodes, rngs, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::{Advisor, MazeAdvisor, PolicyAdvisor};
    use crate::env::{GridMazeEnv, GridMazeLayout, MatrixGameEnv, ObservationMode};
    use std::sync::Arc;

    fn greedy_config() -> DmConfig {
        DmConfig {
            alpha: 0.5,
            beta: 0.9,
            epsilon: Schedule::constant(0.0),
            epsilon_prime: Schedule::constant(0.0),
            q_init: 0.0,
            early_stop: None,
            exploring_starts: false,
        }
    }

    #[test]
    fn rejects_oversubscribed_schedules() {
        let mut c = greedy_config();
        c.epsilon = Schedule::new(0.6, 0.0, 10).unwrap();
        c.epsilon_prime = Schedule::new(0.6, 0.0, 10).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn advisor_probability_without_advisor_is_rejected() {
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut c = greedy_config();
        c.epsilon_prime = Schedule::constant(0.3);
        assert!(DmTrainer::new(&mut env, AdvisorPanel::none(2), c).is_err());
    }

    #[test]
    fn copies_stay_coherent_every_step() {
        let layout = Arc::new(GridMazeLayout::default());
        let mut env = GridMazeEnv::from_shared(Arc::clone(&layout), ObservationMode::Joint);
        let advisor: Box<dyn Advisor> = Box::new(MazeAdvisor::new(layout, crate::advisor::Grade::new(2).unwrap()));
        let config = DmConfig {
            epsilon: Schedule::new(0.2, 0.05, 20).unwrap(),
            epsilon_prime: Schedule::new(0.5, 0.0, 20).unwrap(),
            ..greedy_config()
        };
        let mut rngs = RunRngs::from_seed(11);
        let mut t = DmTrainer::new(&mut env, AdvisorPanel::shared(advisor, 2), config).unwrap();
        for _ in 0..30 {
            t.begin_episode(&mut rngs).unwrap();
            loop {
                let done = t.step(&mut rngs).unwrap();
                assert!(copies_coherent(t.learners()));
                if done {
                    break;
                }
            }
            t.end_episode();
        }
        assert!(t.learners()[0].own.max_abs() > 0.0);
    }

    #[test]
    fn coherence_check_detects_drift() {
        let mut ls: Vec<_> = (0..2).map(|j| DmLearnerState::new(j, 2, 3, &[2, 2], 0.0)).collect();
        assert!(copies_coherent(&ls));
        ls[1].own.set(StateId(0), &[0, 0], 1e-300).unwrap();
        assert!(!copies_coherent(&ls));
    }

    #[test]
    fn single_step_game_learns_payoffs() {
        let payoff = vec![3.0, 0.0, 1.0, 2.0];
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], payoff.clone()).unwrap();
        let config = DmConfig {
            alpha: 0.1,
            epsilon: Schedule::constant(1.0),
            ..greedy_config()
        };
        let mut rngs = RunRngs::from_seed(3);
        let out = train_dm(&mut env, AdvisorPanel::none(2), &config, 4000, &mut rngs).unwrap();
        for t in &out.tables {
            for (q, p) in t.slice(StateId(0)).unwrap().iter().zip(&payoff) {
                assert!((q - p).abs() < 1e-2, "{q} vs {p}");
            }
        }
    }

    #[test]
    fn exploring_starts_cover_every_joint_action() {
        let payoff = vec![3.0, 0.0, 1.0, 2.0];
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], payoff.clone()).unwrap();
        let config = DmConfig {
            exploring_starts: true,
            ..greedy_config()
        };
        let mut rngs = RunRngs::from_seed(8);
        let out = train_dm(&mut env, AdvisorPanel::none(2), &config, 400, &mut rngs).unwrap();
        let q = out.tables[0].slice(StateId(0)).unwrap();
        for (q, p) in q.iter().zip(&payoff) {
            assert!((q - p).abs() < 1e-9, "{q} vs {p}");
        }
    }

    #[test]
    fn frozen_advisor_play_reproduces_advisor_actions() {
        // With epsilon_prime = 1 every action comes from the advisor.
        let mut env = MatrixGameEnv::new(
            crate::game::StageGame::new(&[2, 2], vec![vec![0.0, 1.0, 0.0, 0.0]; 2]).unwrap(),
            5,
        )
        .unwrap();
        let adv: Box<dyn Advisor> =
            Box::new(PolicyAdvisor::constant(&[2, 2], JointAction(vec![0, 1]), 1).unwrap());
        let config = DmConfig {
            epsilon_prime: Schedule::constant(1.0),
            ..greedy_config()
        };
        let mut rngs = RunRngs::from_seed(1);
        let out = train_dm(&mut env, AdvisorPanel::shared(adv, 2), &config, 10, &mut rngs).unwrap();
        for ep in &out.episodes {
            assert_eq!(ep.rewards, vec![5.0, 5.0]);
        }
    }

    #[test]
    fn same_seed_same_tables() {
        let layout = Arc::new(GridMazeLayout::default());
        let run = |seed| {
            let mut env = GridMazeEnv::from_shared(Arc::clone(&layout), ObservationMode::Joint);
            let config = DmConfig {
                epsilon: Schedule::new(0.5, 0.05, 50).unwrap(),
                ..greedy_config()
            };
            let mut rngs = RunRngs::from_seed(seed);
            train_dm(&mut env, AdvisorPanel::none(2), &config, 50, &mut rngs).unwrap()
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.episodes, b.episodes);
    }

    #[test]
    fn early_stop_ends_a_converged_run() {
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], vec![0.0; 4]).unwrap();
        let config = DmConfig {
            early_stop: Some(1e-6),
            ..greedy_config()
        };
        let mut rngs = RunRngs::from_seed(2);
        let out = train_dm(&mut env, AdvisorPanel::none(2), &config, 100, &mut rngs).unwrap();
        assert_eq!(out.episodes.len(), 1);
    }
}
