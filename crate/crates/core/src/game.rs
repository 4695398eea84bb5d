//! Core abstractions shared by every environment and learner: state and
//! joint-action identifiers, per-agent joint-action Q storage, advisor
//! solutions and the stage-game payoff contraction used by the evaluation
//! update.

use std::fmt;
use std::ops::Deref;

use rand::Rng;

use crate::error::{Error, Result};

/// Opaque state identifier. Environments own the mapping to semantic content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StateId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// One action index per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct JointAction(pub Vec<usize>);

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        JointAction(actions)
    }

    pub fn zeros(n_agents: usize) -> Self {
        JointAction(vec![0; n_agents])
    }

    /// Checks length and per-agent ranges against `sizes`.
    pub fn validate(&self, sizes: &[usize]) -> Result<()> {
        if self.0.len() != sizes.len() {
            return Err(Error::Dimension {
                what: "joint action length",
                expected: sizes.len(),
                actual: self.0.len(),
            });
        }
        for (&a, &size) in self.0.iter().zip(sizes) {
            if a >= size {
                return Err(Error::Index {
                    what: "action",
                    index: a,
                    limit: size,
                });
            }
        }
        Ok(())
    }

    /// Actions of every agent except `agent`, in agent order.
    pub fn others(&self, agent: usize) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != agent)
            .map(|(_, &a)| a)
            .collect()
    }
}

impl Deref for JointAction {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for JointAction {
    fn from(v: Vec<usize>) -> Self {
        JointAction(v)
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub next_state: StateId,
    pub rewards: Vec<f64>,
    /// The episode ended in an absorbing state; no bootstrapping past it.
    pub terminal: bool,
    /// The episode hit its step cap without reaching an absorbing state.
    pub truncated: bool,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Number of joint actions, the product of the per-agent action counts.
pub fn joint_action_count(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

/// Row-major flat index of a joint action, agent 0 varying slowest.
pub fn joint_index(actions: &[usize], sizes: &[usize]) -> Result<usize> {
    if actions.len() != sizes.len() {
        return Err(Error::Dimension {
            what: "joint action length",
            expected: sizes.len(),
            actual: actions.len(),
        });
    }
    let mut idx = 0;
    for (&a, &size) in actions.iter().zip(sizes) {
        if a >= size {
            return Err(Error::Index {
                what: "action",
                index: a,
                limit: size,
            });
        }
        idx = idx * size + a;
    }
    Ok(idx)
}

/// Inverse of [`joint_index`].
pub fn joint_unindex(index: usize, sizes: &[usize]) -> Result<JointAction> {
    let total = joint_action_count(sizes);
    if index >= total {
        return Err(Error::Index {
            what: "joint index",
            index,
            limit: total,
        });
    }
    let mut actions = vec![0; sizes.len()];
    let mut rest = index;
    for (slot, &size) in actions.iter_mut().zip(sizes).rev() {
        *slot = rest % size;
        rest /= size;
    }
    Ok(JointAction(actions))
}

/// Q-values of one agent over every state and joint action.
///
/// Storage is a dense row-major array: one block of `∏|A^k|` values per
/// state, laid out by [`joint_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointQTable {
    agent: usize,
    action_sizes: Vec<usize>,
    joint_count: usize,
    state_count: usize,
    values: Vec<f64>,
}

impl JointQTable {
    pub fn zeros(agent: usize, state_count: usize, action_sizes: &[usize]) -> Self {
        Self::filled(agent, state_count, action_sizes, 0.0)
    }

    pub fn filled(agent: usize, state_count: usize, action_sizes: &[usize], init: f64) -> Self {
        let joint_count = joint_action_count(action_sizes);
        JointQTable {
            agent,
            action_sizes: action_sizes.to_vec(),
            joint_count,
            state_count,
            values: vec![init; state_count * joint_count],
        }
    }

    /// Builds a table from raw values; checks the length and finiteness.
    pub fn from_values(
        agent: usize,
        state_count: usize,
        action_sizes: &[usize],
        values: Vec<f64>,
    ) -> Result<Self> {
        let joint_count = joint_action_count(action_sizes);
        if values.len() != state_count * joint_count {
            return Err(Error::Dimension {
                what: "q-table values",
                expected: state_count * joint_count,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("q-table values"));
        }
        Ok(JointQTable {
            agent,
            action_sizes: action_sizes.to_vec(),
            joint_count,
            state_count,
            values,
        })
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn n_agents(&self) -> usize {
        self.action_sizes.len()
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_shape(&self, other: &JointQTable) -> bool {
        self.state_count == other.state_count && self.action_sizes == other.action_sizes
    }

    fn check_state(&self, state: StateId) -> Result<()> {
        if state.0 >= self.state_count {
            return Err(Error::Index {
                what: "state",
                index: state.0,
                limit: self.state_count,
            });
        }
        Ok(())
    }

    /// All joint-action values at `state`.
    pub fn slice(&self, state: StateId) -> Result<&[f64]> {
        self.check_state(state)?;
        let start = state.0 * self.joint_count;
        Ok(&self.values[start..start + self.joint_count])
    }

    pub fn slice_mut(&mut self, state: StateId) -> Result<&mut [f64]> {
        self.check_state(state)?;
        let start = state.0 * self.joint_count;
        Ok(&mut self.values[start..start + self.joint_count])
    }

    pub fn get(&self, state: StateId, joint: &[usize]) -> Result<f64> {
        let j = joint_index(joint, &self.action_sizes)?;
        Ok(self.slice(state)?[j])
    }

    pub fn set(&mut self, state: StateId, joint: &[usize], value: f64) -> Result<()> {
        let j = joint_index(joint, &self.action_sizes)?;
        self.slice_mut(state)?[j] = value;
        Ok(())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// One probability vector per agent over that agent's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorSolution {
    strategies: Vec<Vec<f64>>,
}

const PROBABILITY_TOLERANCE: f64 = 1e-9;

impl AdvisorSolution {
    /// Validates that each vector is nonnegative and sums to one.
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (k, s) in strategies.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::Config(format!("agent {k} has an empty strategy")));
            }
            if s.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Config(format!(
                    "agent {k} strategy has a negative or non-finite entry"
                )));
            }
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::Config(format!(
                    "agent {k} strategy sums to {total}, not 1"
                )));
            }
        }
        Ok(AdvisorSolution { strategies })
    }

    /// Every agent plays its own uniform strategy.
    pub fn uniform(action_sizes: &[usize]) -> Self {
        AdvisorSolution {
            strategies: action_sizes
                .iter()
                .map(|&n| vec![1.0 / n as f64; n])
                .collect(),
        }
    }

    /// Deterministic solution placing all mass on `joint`.
    pub fn deterministic(joint: &[usize], action_sizes: &[usize]) -> Result<Self> {
        joint_index(joint, action_sizes)?;
        Ok(AdvisorSolution {
            strategies: joint
                .iter()
                .zip(action_sizes)
                .map(|(&a, &n)| one_hot(a, n))
                .collect(),
        })
    }

    pub fn n_agents(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategy(&self, agent: usize) -> &[f64] {
        &self.strategies[agent]
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    /// Checks that the solution matches the given action-space sizes.
    pub fn check_sizes(&self, action_sizes: &[usize]) -> Result<()> {
        if self.strategies.len() != action_sizes.len() {
            return Err(Error::Dimension {
                what: "advisor solution agent count",
                expected: action_sizes.len(),
                actual: self.strategies.len(),
            });
        }
        for (s, &n) in self.strategies.iter().zip(action_sizes) {
            if s.len() != n {
                return Err(Error::Dimension {
                    what: "advisor strategy length",
                    expected: n,
                    actual: s.len(),
                });
            }
        }
        Ok(())
    }

    /// Draws an action for `agent` from its marginal.
    pub fn sample<R: Rng + ?Sized>(&self, agent: usize, rng: &mut R) -> usize {
        sample_categorical(&self.strategies[agent], rng)
    }

    /// The joint action with the highest probability in each marginal
    /// (lowest index on ties).
    pub fn mode(&self) -> JointAction {
        JointAction(
            self.strategies
                .iter()
                .map(|s| {
                    let mut best = 0;
                    for (i, &p) in s.iter().enumerate() {
                        if p > s[best] {
                            best = i;
                        }
                    }
                    best
                })
                .collect(),
        )
    }

    pub fn is_deterministic(&self) -> bool {
        self.strategies
            .iter()
            .all(|s| s.iter().filter(|&&p| p > 0.0).count() == 1)
    }
}

pub fn one_hot(index: usize, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[index] = 1.0;
    v
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave the total a hair under one.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Per-agent payoffs over joint actions at one fixed state.
#[derive(Debug, Clone, PartialEq)]
pub struct StageGame {
    action_sizes: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

impl StageGame {
    pub fn new(action_sizes: &[usize], payoffs: Vec<Vec<f64>>) -> Result<Self> {
        let joint = joint_action_count(action_sizes);
        if payoffs.len() != action_sizes.len() {
            return Err(Error::Dimension {
                what: "stage game payoff tables",
                expected: action_sizes.len(),
                actual: payoffs.len(),
            });
        }
        for p in &payoffs {
            if p.len() != joint {
                return Err(Error::Dimension {
                    what: "stage game payoff length",
                    expected: joint,
                    actual: p.len(),
                });
            }
        }
        Ok(StageGame {
            action_sizes: action_sizes.to_vec(),
            payoffs,
        })
    }

    /// The stage game formed by each agent's current Q slice at `state`.
    pub fn from_tables(tables: &[JointQTable], state: StateId) -> Result<Self> {
        let sizes = tables
            .first()
            .map(|t| t.action_sizes().to_vec())
            .unwrap_or_default();
        let payoffs = tables
            .iter()
            .map(|t| t.slice(state).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        StageGame::new(&sizes, payoffs)
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn payoff(&self, agent: usize) -> &[f64] {
        &self.payoffs[agent]
    }

    /// Expected payoff of `agent` when everyone plays `solution`.
    pub fn value(&self, agent: usize, solution: &AdvisorSolution) -> Result<f64> {
        advisor_q(solution, &self.payoffs[agent])
    }
}

/// Expected value of a joint-action Q slice when every agent independently
/// plays its strategy from `solution`:
/// `Σ_a (∏_k σ^k(a^k)) · q(a)`.
pub fn advisor_q(solution: &AdvisorSolution, q_slice: &[f64]) -> Result<f64> {
    let sizes: Vec<usize> = solution.strategies.iter().map(Vec::len).collect();
    let joint = joint_action_count(&sizes);
    if q_slice.len() != joint {
        return Err(Error::Config(format!(
            "q slice has {} entries but the advisor solution spans {} joint actions",
            q_slice.len(),
            joint
        )));
    }
    // Contract one agent at a time, last agent first: each pass folds the
    // fastest-varying axis into a vector `size` times shorter.
    let mut current = q_slice.to_vec();
    for strategy in solution.strategies.iter().rev() {
        let size = strategy.len();
        current = current
            .chunks_exact(size)
            .map(|chunk| chunk.iter().zip(strategy).map(|(q, p)| q * p).sum())
            .collect();
    }
    let value = current[0];
    crate::error::ensure_finite(value, "advisor q value")
}

/// Own action maximising `Q^j(s, a^{-j}, ·)` with the other agents' actions
/// held fixed. `others` lists the actions of every agent except `agent`, in
/// agent order. Ties are broken uniformly at random.
pub fn greedy_own_action<R: Rng + ?Sized>(
    q: &JointQTable,
    state: StateId,
    agent: usize,
    others: &[usize],
    rng: &mut R,
) -> Result<usize> {
    let slice = q.slice(state)?;
    greedy_in_slice(slice, q.action_sizes(), agent, others, rng)
}

/// [`greedy_own_action`] over a bare joint-action slice.
pub fn greedy_in_slice<R: Rng + ?Sized>(
    slice: &[f64],
    sizes: &[usize],
    agent: usize,
    others: &[usize],
    rng: &mut R,
) -> Result<usize> {
    if agent >= sizes.len() {
        return Err(Error::Index {
            what: "agent",
            index: agent,
            limit: sizes.len(),
        });
    }
    if others.len() + 1 != sizes.len() {
        return Err(Error::Dimension {
            what: "other agents' actions",
            expected: sizes.len() - 1,
            actual: others.len(),
        });
    }
    let mut joint = Vec::with_capacity(sizes.len());
    joint.extend_from_slice(&others[..agent]);
    joint.push(0);
    joint.extend_from_slice(&others[agent..]);

    let mut best = f64::NEG_INFINITY;
    let mut chosen = 0;
    let mut ties = 0u32;
    for a in 0..sizes[agent] {
        joint[agent] = a;
        let v = slice[joint_index(&joint, sizes)?];
        if v > best {
            best = v;
            chosen = a;
            ties = 1;
        } else if v == best {
            // Reservoir sampling keeps each tied action with equal probability.
            ties += 1;
            if rng.gen_range(0..ties) == 0 {
                chosen = a;
            }
        }
    }
    Ok(chosen)
}
