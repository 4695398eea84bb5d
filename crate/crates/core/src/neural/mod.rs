//! Function-approximation learners: a small dense network, experience
//! replay, and the neural decision-making, evaluation and actor-critic
//! trainers.

mod ac;
mod ae;
mod buffer;
mod dm;
mod mlp;
mod persist;

pub use ac::{evaluate_actors, train_dm_ac, AcAgent, AcConfig, AcOutcome, AcTrainer, ActorLoss};
pub use ae::{train_ae_nn, NeuralAeConfig, NeuralAeTrainer};
pub use buffer::{ReplayBuffer, Transition};
pub use dm::{train_dm_nn, NeuralDmConfig, NeuralDmTrainer};
pub use mlp::{Gradients, Mlp, Trace};
pub use persist::{load_mlp, mlp_from_text, mlp_to_text, save_mlp, MLP_FORMAT_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{greedy_in_slice, joint_index, one_hot, StateId};
use crate::tabular::EpisodeSummary;

/// Network, optimiser and replay settings shared by the Q-network learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync: usize,
    /// Gradient steps per agent after each episode; `None` means one per
    /// environment step taken in that episode.
    pub updates_per_episode: Option<usize>,
    /// Abort when any predicted or target value exceeds this magnitude.
    pub divergence_limit: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: vec![64, 64],
            learning_rate: 0.01,
            batch_size: 32,
            buffer_capacity: 200_000,
            target_sync: 10,
            updates_per_episode: None,
            divergence_limit: 1e6,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.target_sync == 0 {
            return Err(Error::Config("batch_size and target_sync must be positive".into()));
        }
        if self.buffer_capacity < self.batch_size {
            return Err(Error::Config(format!(
                "buffer_capacity {} is smaller than batch_size {}",
                self.buffer_capacity, self.batch_size
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layers must have nonzero width".into()));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::Config("divergence_limit must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(output);
        sizes
    }
}

/// Evaluation and target network of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct QAgent {
    pub eval: Mlp,
    pub target: Mlp,
}

impl QAgent {
    fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let eval = Mlp::random(sizes, rng)?;
        Ok(QAgent {
            target: eval.clone(),
            eval,
        })
    }

    /// Joint-action values of the eval network at `obs`.
    pub fn values(&self, obs: StateId) -> Result<Vec<f64>> {
        self.eval.forward(&one_hot(obs.0, self.eval.input_size()))
    }
}

/// Per-episode log and final eval networks of a neural run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeuralOutcome {
    pub episodes: Vec<EpisodeSummary>,
    pub nets: Vec<Mlp>,
}

impl NeuralOutcome {
    pub fn rewards_of(&self, agent: usize) -> Vec<f64> {
        self.episodes.iter().map(|e| e.rewards[agent]).collect()
    }

    pub fn cumulative_reward(&self, agent: usize) -> f64 {
        self.episodes.iter().map(|e| e.rewards[agent]).sum()
    }
}

/// Greedy own action from the eval network's joint-action head.
pub(crate) fn greedy_from_net<R: Rng + ?Sized>(
    agent: &QAgent,
    j: usize,
    obs: StateId,
    sizes: &[usize],
    others: &[usize],
    rng: &mut R,
) -> Result<usize> {
    let q = agent.values(obs)?;
    greedy_in_slice(&q, sizes, j, others, rng)
}

pub(crate) fn others_of(actions: &[usize], j: usize) -> Vec<usize> {
    actions
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &a)| a)
        .collect()
}

fn check_magnitude(value: f64, limit: f64, what: &str) -> Result<()> {
    if !value.is_finite() || value.abs() > limit {
        return Err(Error::Divergence(format!("{what} reached {value}")));
    }
    Ok(())
}

/// One gradient step of agent `j`'s eval network on the squared TD loss
/// `(1/K) Σ (y − Q(s, a))²`, where `y = r + β · bootstrap(t, Q_target(s′))`
/// and terminal transitions use `y = r`. Returns the largest |TD error|.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_batch<F>(
    agent: &mut QAgent,
    j: usize,
    batch: &[&Transition],
    sizes: &[usize],
    beta: f64,
    lr: f64,
    limit: f64,
    bootstrap: F,
) -> Result<f64>
where
    F: Fn(&Transition, &[f64]) -> Result<f64>,
{
    let inputs = agent.eval.input_size();
    let outputs = agent.eval.output_size();
    let k = batch.len() as f64;
    let mut grads = agent.eval.zero_gradients();
    let mut worst: f64 = 0.0;
    for t in batch {
        let mut y = t.rewards[j];
        if !t.terminal {
            let next = agent.target.forward(&one_hot(t.next_obs[j].0, inputs))?;
            let b = bootstrap(t, &next)?;
            check_magnitude(b, limit, "target value")?;
            y += beta * b;
        }
        let trace = agent.eval.trace(&one_hot(t.obs[j].0, inputs))?;
        let idx = joint_index(&t.actions, sizes)?;
        let q = trace.output()[idx];
        check_magnitude(q, limit, "predicted value")?;
        let mut dy = vec![0.0; outputs];
        dy[idx] = 2.0 * (q - y) / k;
        worst = worst.max((q - y).abs());
        agent.eval.backward(&trace, &dy, &mut grads)?;
    }
    agent.eval.apply(&grads, lr)?;
    Ok(worst)
}

/// Post-episode training shared by the Q-network learners: `updates`
/// rounds, each one batch per agent, with target syncs every
/// `target_sync` rounds counted across the whole run.
#[allow(clippy::too_many_arguments)]
pub(crate) fn train_round<R, F>(
    agents: &mut [QAgent],
    buffer: &ReplayBuffer,
    net: &NetConfig,
    sizes: &[usize],
    beta: f64,
    updates: usize,
    iterations: &mut usize,
    rng: &mut R,
    bootstrap: F,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F: Fn(usize, &Transition, &[f64]) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for _ in 0..updates {
        if buffer.len() < net.batch_size {
            break;
        }
        for (j, agent) in agents.iter_mut().enumerate() {
            let batch = buffer.sample(net.batch_size, rng);
            let e = fit_batch(
                agent,
                j,
                &batch,
                sizes,
                beta,
                net.learning_rate,
                net.divergence_limit,
                |t, q| bootstrap(j, t, q),
            )?;
            worst = worst.max(e);
        }
        *iterations += 1;
        if *iterations % net.target_sync == 0 {
            for a in agents.iter_mut() {
                a.target.copy_from(&a.eval);
            }
        }
    }
    Ok(worst)
}
