//! Actor-critic decision making with centralised critics and decentralised
//! actors.
//!
//! Agent j's critic sees its observation plus the other agents' actions and
//! outputs one value per own action. Its actor sees only the observation.
//! Both are updated online after every step; there is no replay.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::AdvisorPanel;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::game::{one_hot, sample_categorical, JointAction, StateId};
use crate::rng::RunRngs;
use crate::tabular::{EpisodeSummary, Schedule};

use super::{others_of, Mlp};

/// Smallest probability fed to the logarithm in the actor loss.
pub const PROB_FLOOR: f64 = 1e-8;

/// How the actor turns the critic's signal into a gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorLoss {
    /// Minimise `log π(a|s) · L`, with `L` the critic's squared TD loss.
    #[default]
    Literal,
    /// Variant: ascend `A · log π(a|s)` with
    /// `A = V(s, a⁻ʲ)[a] − Σ_b π(b|s) V(s, a⁻ʲ)[b]` from the critic.
    Advantage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcConfig {
    pub beta: f64,
    pub epsilon_prime: Schedule,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "default_critic_lr")]
    pub critic_lr: f64,
    #[serde(default = "default_actor_lr")]
    pub actor_lr: f64,
    #[serde(default)]
    pub actor_loss: ActorLoss,
    #[serde(default = "default_limit")]
    pub divergence_limit: f64,
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

fn default_critic_lr() -> f64 {
    1e-3
}

fn default_actor_lr() -> f64 {
    1e-5
}

fn default_limit() -> f64 {
    1e6
}

impl AcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        self.epsilon_prime.validate()?;
        for (name, lr) in [("critic_lr", self.critic_lr), ("actor_lr", self.actor_lr)] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and non-negative")));
            }
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layers must have nonzero width".into()));
        }
        Ok(())
    }
}

/// Critic and actor of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AcAgent {
    pub critic: Mlp,
    pub actor: Mlp,
}

impl AcAgent {
    /// Action probabilities at `obs`.
    pub fn policy(&self, obs: StateId) -> Result<Vec<f64>> {
        Ok(softmax(&self.actor.forward(&one_hot(obs.0, self.actor.input_size()))?))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Critic input: observation one-hot followed by one one-hot block per other
/// agent's action.
fn critic_input(obs: StateId, obs_count: usize, others: &[usize], other_sizes: &[usize]) -> Vec<f64> {
    let mut x = one_hot(obs.0, obs_count);
    for (&a, &n) in others.iter().zip(other_sizes) {
        x.extend(one_hot(a, n));
    }
    x
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcOutcome {
    pub episodes: Vec<EpisodeSummary>,
    pub agents: Vec<AcAgent>,
}

impl AcOutcome {
    pub fn rewards_of(&self, agent: usize) -> Vec<f64> {
        self.episodes.iter().map(|e| e.rewards[agent]).collect()
    }
}

pub struct AcTrainer<'a> {
    env: &'a mut dyn Environment,
    advisors: AdvisorPanel,
    config: AcConfig,
    agents: Vec<AcAgent>,
    sizes: Vec<usize>,
    obs_count: usize,
    episode: usize,
}

impl<'a> AcTrainer<'a> {
    pub fn new(env: &'a mut dyn Environment, advisors: AdvisorPanel, config: AcConfig, rngs: &mut RunRngs) -> Result<Self> {
        config.validate()?;
        let n = env.n_agents();
        if advisors.is_empty() && (config.epsilon_prime.start > 0.0 || config.epsilon_prime.end > 0.0) {
            return Err(Error::Config("epsilon_prime > 0 needs an advisor".into()));
        }
        let sizes = env.action_sizes().to_vec();
        let obs_count = env.observation_count();
        let mut agents = Vec::with_capacity(n);
        for j in 0..n {
            let other_total: usize = others_of(&sizes, j).iter().sum();
            let mut critic_sizes = vec![obs_count + other_total];
            critic_sizes.extend_from_slice(&config.hidden);
            critic_sizes.push(sizes[j]);
            let mut actor_sizes = vec![obs_count];
            actor_sizes.extend_from_slice(&config.hidden);
            actor_sizes.push(sizes[j]);
            let critic = Mlp::random(&critic_sizes, &mut rngs.init)?;
            // Zero output layer: the actor starts uniform.
            let actor = Mlp::random(&actor_sizes, &mut rngs.init)?;
            let mut weights = actor.weights().to_vec();
            let mut biases = actor.biases().to_vec();
            weights.last_mut().expect("output layer").fill(0.0);
            biases.last_mut().expect("output layer").fill(0.0);
            let actor = Mlp::from_parts(&actor_sizes, weights, biases)?;
            agents.push(AcAgent { critic, actor });
        }
        Ok(AcTrainer {
            env,
            advisors,
            config,
            agents,
            sizes,
            obs_count,
            episode: 0,
        })
    }

    pub fn agents(&self) -> &[AcAgent] {
        &self.agents
    }

    fn critic_values(&self, j: usize, obs: StateId, joint: &[usize]) -> Result<(Vec<f64>, super::Trace)> {
        let x = critic_input(obs, self.obs_count, &others_of(joint, j), &others_of(&self.sizes, j));
        let trace = self.agents[j].critic.trace(&x)?;
        Ok((trace.output().to_vec(), trace))
    }

    fn sample_actor<R: Rng + ?Sized>(&self, j: usize, obs: StateId, rng: &mut R) -> Result<usize> {
        Ok(sample_categorical(&self.agents[j].policy(obs)?, rng))
    }

    /// Applies one critic and one actor update for agent `j`.
    fn learn(&mut self, j: usize, obs: StateId, joint: &[usize], y: f64) -> Result<f64> {
        let limit = self.config.divergence_limit;
        let (values, trace) = self.critic_values(j, obs, joint)?;
        let v = values[joint[j]];
        if !v.is_finite() || v.abs() > limit || !y.is_finite() || y.abs() > limit {
            return Err(Error::Divergence(format!("critic value {v}, target {y}")));
        }
        let delta = y - v;
        let loss = delta * delta;

        let critic = &mut self.agents[j].critic;
        let mut g = critic.zero_gradients();
        let mut dy = vec![0.0; values.len()];
        dy[joint[j]] = -2.0 * delta;
        critic.backward(&trace, &dy, &mut g)?;
        critic.apply(&g, self.config.critic_lr)?;

        let actor = &mut self.agents[j].actor;
        let x = one_hot(obs.0, self.obs_count);
        let atrace = actor.trace(&x)?;
        let probs = softmax(atrace.output());
        let a = joint[j];
        // d log π(a|s) / d logits = onehot(a) − π; zero once the floor binds.
        let grad_log: Vec<f64> = if probs[a] < PROB_FLOOR {
            vec![0.0; probs.len()]
        } else {
            probs
                .iter()
                .enumerate()
                .map(|(b, &p)| if b == a { 1.0 - p } else { -p })
                .collect()
        };
        let scale = match self.config.actor_loss {
            ActorLoss::Literal => loss,
            ActorLoss::Advantage => {
                let baseline: f64 = probs.iter().zip(&values).map(|(p, v)| p * v).sum();
                -(values[a] - baseline)
            }
        };
        let dl: Vec<f64> = grad_log.iter().map(|g| scale * g).collect();
        let mut ga = actor.zero_gradients();
        actor.backward(&atrace, &dl, &mut ga)?;
        actor.apply(&ga, self.config.actor_lr)?;
        Ok(delta.abs())
    }

    pub fn run_episode(&mut self, rngs: &mut RunRngs) -> Result<EpisodeSummary> {
        let n = self.env.n_agents();
        self.env.reset(&mut rngs.env);
        let mut obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
        let mut actions = (0..n)
            .map(|j| self.sample_actor(j, obs[j], &mut rngs.explore))
            .collect::<Result<Vec<_>>>()?;
        let eps_prime = self.config.epsilon_prime.value(self.episode);
        let mut rewards = vec![0.0; n];
        let mut steps = 0;
        let mut worst: f64 = 0.0;
        loop {
            let step = self.env.step(&JointAction(actions.clone()))?;
            self.advisors.observe_transition(&step);
            steps += 1;
            for (acc, r) in rewards.iter_mut().zip(&step.rewards) {
                *acc += r;
            }
            let next_obs: Vec<StateId> = (0..n).map(|j| self.env.observe(j)).collect::<Result<_>>()?;
            let mut next = actions.clone();
            if !step.terminal {
                for (j, slot) in next.iter_mut().enumerate() {
                    let u: f64 = rngs.explore.gen();
                    *slot = if u < eps_prime {
                        self.advisors.recommend(step.next_state, j, &mut rngs.advisor)?
                    } else {
                        self.sample_actor(j, next_obs[j], &mut rngs.explore)?
                    };
                }
            }
            for j in 0..n {
                let y = if step.terminal {
                    step.rewards[j]
                } else {
                    let (v_next, _) = self.critic_values(j, next_obs[j], &next)?;
                    step.rewards[j] + self.config.beta * v_next[next[j]]
                };
                worst = worst.max(self.learn(j, obs[j], &actions, y)?);
            }
            if step.done() {
                break;
            }
            obs = next_obs;
            actions = next;
        }
        self.advisors.end_episode();
        let summary = EpisodeSummary {
            episode: self.episode,
            rewards,
            epsilon: 0.0,
            epsilon_prime: eps_prime,
            steps,
            max_change: worst,
        };
        self.episode += 1;
        Ok(summary)
    }

    pub fn run<F>(&mut self, episodes: usize, rngs: &mut RunRngs, mut observer: F) -> Result<AcOutcome>
    where
        F: FnMut(&EpisodeSummary) -> Result<()>,
    {
        let mut outcome = AcOutcome::default();
        for _ in 0..episodes {
            let s = self.run_episode(rngs)?;
            observer(&s)?;
            outcome.episodes.push(s);
        }
        outcome.agents = self.agents.clone();
        Ok(outcome)
    }
}

pub fn train_dm_ac(
    env: &mut dyn Environment,
    advisors: AdvisorPanel,
    config: &AcConfig,
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<AcOutcome> {
    AcTrainer::new(env, advisors, config.clone(), rngs)?.run(episodes, rngs, |_| Ok(()))
}

/// Decentralised execution: every agent samples from its own actor given
/// only its observation. Returns each episode's per-agent return.
pub fn evaluate_actors(
    env: &mut dyn Environment,
    agents: &[AcAgent],
    episodes: usize,
    rngs: &mut RunRngs,
) -> Result<Vec<Vec<f64>>> {
    let n = env.n_agents();
    if agents.len() != n {
        return Err(Error::Dimension {
            what: "actors",
            expected: n,
            actual: agents.len(),
        });
    }
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset(&mut rngs.env);
        let mut total = vec![0.0; n];
        loop {
            let actions = (0..n)
                .map(|j| Ok(sample_categorical(&agents[j].policy(env.observe(j)?)?, &mut rngs.explore)))
                .collect::<Result<Vec<_>>>()?;
            let step = env.step(&JointAction(actions))?;
            for (t, r) in total.iter_mut().zip(&step.rewards) {
                *t += r;
            }
            if step.done() {
                break;
            }
        }
        out.push(total);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{GridMazeEnv, GridMazeLayout, MatrixGameEnv, ObservationMode, StartMode};
    use crate::advisor::{Advisor, Grade, MazeAdvisor};
    use std::sync::Arc;

    fn config() -> AcConfig {
        AcConfig {
            beta: 0.9,
            epsilon_prime: Schedule::constant(0.0),
            hidden: vec![8],
            critic_lr: 1e-2,
            actor_lr: 1e-2,
            actor_loss: ActorLoss::Literal,
            divergence_limit: 1e6,
        }
    }

    #[test]
    fn actor_starts_uniform() {
        let mut env = MatrixGameEnv::identical_interest(&[3, 3], vec![0.0; 9]).unwrap();
        let mut rngs = RunRngs::from_seed(0);
        let t = AcTrainer::new(&mut env, AdvisorPanel::none(2), config(), &mut rngs).unwrap();
        let p = t.agents()[0].policy(StateId(0)).unwrap();
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn zero_critic_loss_leaves_actor_alone() {
        // All payoffs zero and a zero-output critic: every TD error is 0.
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], vec![0.0; 4]).unwrap();
        let mut rngs = RunRngs::from_seed(1);
        let mut t = AcTrainer::new(&mut env, AdvisorPanel::none(2), config(), &mut rngs).unwrap();
        for a in &mut t.agents {
            let s = a.critic.sizes().to_vec();
            a.critic = Mlp::zeros(&s).unwrap();
        }
        let before = t.agents()[0].actor.clone();
        t.run(20, &mut rngs, |_| Ok(())).unwrap();
        assert_eq!(t.agents()[0].actor, before);
    }

    #[test]
    fn policy_is_a_distribution() {
        let p = softmax(&[1000.0, -1000.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn advantage_variant_prefers_the_better_action() {
        // Single agent-pair game where (0, 0) pays 1 and everything else 0.
        let mut env = MatrixGameEnv::identical_interest(&[2, 2], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let c = AcConfig {
            actor_loss: ActorLoss::Advantage,
            actor_lr: 0.05,
            ..config()
        };
        let mut rngs = RunRngs::from_seed(2);
        let out = train_dm_ac(&mut env, AdvisorPanel::none(2), &c, 3000, &mut rngs).unwrap();
        let p = out.agents[0].policy(StateId(0)).unwrap();
        assert!(p[0] > 0.8, "{p:?}");
    }

    #[test]
    fn maze_actors_beat_random_play() {
        let mut layout = GridMazeLayout::default();
        layout.step_cap = 30;
        layout.start_mode = StartMode::Fixed;
        let layout = Arc::new(layout);
        let c = AcConfig {
            epsilon_prime: Schedule::new(0.9, 0.0, 300).unwrap(),
            hidden: vec![32],
            actor_loss: ActorLoss::Advantage,
            actor_lr: 0.05,
            critic_lr: 0.05,
            ..config()
        };
        let mut wins = 0;
        for seed in 0..3 {
            let mut env = GridMazeEnv::from_shared(Arc::clone(&layout), ObservationMode::Local);
            let mut rngs = RunRngs::from_seed(seed);
            let adv: Box<dyn Advisor> = Box::new(MazeAdvisor::new(Arc::clone(&layout), Grade::new(1).unwrap()));
            let out = train_dm_ac(&mut env, AdvisorPanel::shared(adv, 2), &c, 400, &mut rngs).unwrap();
            let trained: f64 = evaluate_actors(&mut env, &out.agents, 100, &mut rngs).unwrap().iter().map(|r| r[0]).sum();
            let mut rngs0 = RunRngs::from_seed(seed + 100);
            let uniform = AcTrainer::new(&mut env, AdvisorPanel::none(2), config(), &mut rngs0).unwrap().agents().to_vec();
            let random: f64 = evaluate_actors(&mut env, &uniform, 100, &mut rngs).unwrap().iter().map(|r| r[0]).sum();
            if trained > random {
                wins += 1;
            }
        }
        assert_eq!(wins, 3);
    }
}
