//! Brute-force reference values for enumerable games: the value of playing
//! an advisor's solution forever, the joint optimum of identical-interest
//! games, and distances between Q-tables.

use serde::{Deserialize, Serialize};

use crate::advisor::{Advisor, PolicyAdvisor};
use crate::env::GameModel;
use crate::error::{Error, Result};
use crate::game::{
    joint_action_count, joint_unindex, sample_categorical, AdvisorSolution, JointAction,
    JointQTable, StateId,
};
use crate::par;
use crate::rng::stream;

/// How [`advisor_value_q`] computes expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ValueMethod {
    /// Exact when the tree of play under the advisor is small enough,
    /// rollouts otherwise.
    #[default]
    Auto,
    Exact,
    Rollout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub beta: f64,
    /// Rollouts per (state, joint action) cell.
    pub rollouts: usize,
    /// Steps per evaluation; defaults to the environment's step cap.
    pub horizon: Option<usize>,
    /// Sup-norm stopping tolerance for value iteration.
    pub tolerance: f64,
    /// Largest per-cell tree (in nodes) still evaluated exactly.
    pub enumeration_limit: u64,
    pub method: ValueMethod,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            beta: 0.9,
            rollouts: 512,
            horizon: None,
            tolerance: 1e-10,
            enumeration_limit: 100_000,
            method: ValueMethod::Auto,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("oracle discount must lie in [0, 1), got {}", self.beta)));
        }
        if self.rollouts == 0 {
            return Err(Error::Config("oracle needs at least one rollout".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("oracle tolerance must be positive".into()));
        }
        if self.horizon == Some(0) {
            return Err(Error::Config("oracle horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Every transition of an enumerable game, flattened.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    pub n_agents: usize,
    pub action_sizes: Vec<usize>,
    pub state_count: usize,
    pub joint_count: usize,
    pub horizon: usize,
    absorbing: Vec<bool>,
    next: Vec<usize>,
    terminal: Vec<bool>,
    /// `rewards[(s * J + a) * n + j]`.
    rewards: Vec<f64>,
}

impl TransitionTable {
    pub fn build(model: &dyn GameModel) -> Result<Self> {
        let n = model.n_agents();
        let sizes = model.action_sizes().to_vec();
        let states = model.state_count();
        let joint = joint_action_count(&sizes);
        let mut t = TransitionTable {
            n_agents: n,
            action_sizes: sizes.clone(),
            state_count: states,
            joint_count: joint,
            horizon: model.horizon(),
            absorbing: vec![false; states],
            next: vec![0; states * joint],
            terminal: vec![true; states * joint],
            rewards: vec![0.0; states * joint * n],
        };
        for s in 0..states {
            if model.is_absorbing(StateId(s)) {
                t.absorbing[s] = true;
                continue;
            }
            for a in 0..joint {
                let ja = joint_unindex(a, &sizes)?;
                let out = model.transition(StateId(s), &ja)?;
                if out.rewards.len() != n {
                    return Err(Error::Dimension {
                        what: "transition rewards",
                        expected: n,
                        actual: out.rewards.len(),
                    });
                }
                let cell = s * joint + a;
                t.next[cell] = out.next_state.0;
                t.terminal[cell] = out.terminal;
                t.rewards[cell * n..(cell + 1) * n].copy_from_slice(&out.rewards);
            }
        }
        Ok(t)
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    pub fn next(&self, s: usize, a: usize) -> usize {
        self.next[s * self.joint_count + a]
    }

    pub fn terminal(&self, s: usize, a: usize) -> bool {
        self.terminal[s * self.joint_count + a]
    }

    pub fn reward(&self, s: usize, a: usize, agent: usize) -> f64 {
        self.rewards[(s * self.joint_count + a) * self.n_agents + agent]
    }

    fn rewards_at(&self, s: usize, a: usize) -> &[f64] {
        let cell = s * self.joint_count + a;
        &self.rewards[cell * self.n_agents..(cell + 1) * self.n_agents]
    }

    /// True when every agent receives the same reward on every transition.
    pub fn is_identical_interest(&self) -> bool {
        (0..self.state_count)
            .filter(|&s| !self.absorbing[s])
            .all(|s| {
                (0..self.joint_count).all(|a| {
                    let r = self.rewards_at(s, a);
                    r.iter().all(|&x| x == r[0])
                })
            })
    }

    fn tables_from(&self, values: &[Vec<f64>]) -> Result<Vec<JointQTable>> {
        values
            .iter()
            .enumerate()
            .map(|(j, v)| JointQTable::from_values(j, self.state_count, &self.action_sizes, v.clone()))
            .collect()
    }
}

/// Joint probability of every joint action under `solution`.
fn joint_probabilities(solution: &AdvisorSolution, sizes: &[usize]) -> Result<Vec<f64>> {
    let joint = joint_action_count(sizes);
    (0..joint)
        .map(|a| {
            let ja = joint_unindex(a, sizes)?;
            Ok(ja
                .iter()
                .enumerate()
                .map(|(k, &ak)| solution.strategy(k)[ak])
                .product())
        })
        .collect()
}

/// Which evaluation path produced an advisor value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    Exact,
    Rollout { count: usize },
}

#[derive(Debug, Clone)]
pub struct AdvisorValue {
    pub tables: Vec<JointQTable>,
    pub source: ValueSource,
    pub horizon: usize,
    /// Upper bound on the error from cutting play off at the horizon:
    /// `beta^H * r_max / (1 - beta)`.
    pub truncation_bound: f64,
}

/// Per-state solutions of a (stationary) advisor.
fn snapshot(advisor: &dyn Advisor, t: &TransitionTable) -> Result<Vec<AdvisorSolution>> {
    (0..t.state_count)
        .map(|s| {
            let sol = advisor.solve(StateId(s));
            sol.check_sizes(&t.action_sizes)?;
            Ok(sol)
        })
        .collect()
}

/// Largest number of nodes in the tree of play from any single cell when
/// every agent follows `solutions`, saturating just above `limit`.
fn max_tree_size(t: &TransitionTable, probs: &[Vec<f64>], horizon: usize, limit: u64) -> u64 {
    let cap = limit.saturating_add(1);
    // below[s] = nodes in the subtree hanging off state s with h steps left.
    let mut below = vec![0u64; t.state_count];
    let mut cell_max = 0u64;
    for h in 1..=horizon {
        let mut next_below = vec![0u64; t.state_count];
        for s in 0..t.state_count {
            if t.absorbing[s] {
                continue;
            }
            let mut total = 0u64;
            for a in 0..t.joint_count {
                let sub = if t.terminal(s, a) { 0 } else { below[t.next(s, a)] };
                let node = 1u64.saturating_add(sub).min(cap);
                if h == horizon {
                    cell_max = cell_max.max(node);
                }
                if probs[s][a] > 0.0 {
                    total = total.saturating_add(node).min(cap);
                }
            }
            next_below[s] = total;
        }
        below = next_below;
        if below.iter().any(|&b| b >= cap) && h < horizon {
            return cap;
        }
    }
    cell_max
}

/// Finite-horizon expected discounted return of every (state, joint action)
/// cell: take the joint action, then let every agent draw from the advisor
/// solution until the game ends or the horizon is reached. Absorbing states
/// are worth zero.
pub fn advisor_value_q(model: &dyn GameModel, advisor: &dyn Advisor, config: &OracleConfig) -> Result<AdvisorValue> {
    config.validate()?;
    let t = TransitionTable::build(model)?;
    let horizon = config.horizon.unwrap_or(t.horizon).max(1);
    let solutions = snapshot(advisor, &t)?;
    let probs = solutions
        .iter()
        .map(|s| joint_probabilities(s, &t.action_sizes))
        .collect::<Result<Vec<_>>>()?;
    let exact = match config.method {
        ValueMethod::Exact => true,
        ValueMethod::Rollout => false,
        ValueMethod::Auto => max_tree_size(&t, &probs, horizon, config.enumeration_limit) <= config.enumeration_limit,
    };
    let values = if exact {
        exact_values(&t, &probs, horizon, config.beta)
    } else {
        rollout_values(&t, &solutions, horizon, config)
    };
    let r_max = t.rewards.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(AdvisorValue {
        tables: t.tables_from(&values)?,
        source: if exact {
            ValueSource::Exact
        } else {
            ValueSource::Rollout {
                count: config.rollouts,
            }
        },
        horizon,
        truncation_bound: config.beta.powi(horizon as i32) * r_max / (1.0 - config.beta),
    })
}

/// Backward induction over remaining steps; equal to enumerating every
/// branch of the play tree, with shared subtrees computed once.
fn exact_values(t: &TransitionTable, probs: &[Vec<f64>], horizon: usize, beta: f64) -> Vec<Vec<f64>> {
    let n = t.n_agents;
    // v[s * n + j]: value of state s with h steps left.
    let mut v = vec![0.0; t.state_count * n];
    let mut q = vec![vec![0.0; t.state_count * t.joint_count]; n];
    for _ in 0..horizon {
        for s in 0..t.state_count {
            if t.absorbing[s] {
                continue;
            }
            for a in 0..t.joint_count {
                let next = t.next(s, a);
                let cont = if t.terminal(s, a) { 0.0 } else { beta };
                for (j, qj) in q.iter_mut().enumerate() {
                    qj[s * t.joint_count + a] = t.reward(s, a, j) + cont * v[next * n + j];
                }
            }
        }
        for s in 0..t.state_count {
            for (j, qj) in q.iter().enumerate() {
                v[s * n + j] = probs[s]
                    .iter()
                    .zip(&qj[s * t.joint_count..(s + 1) * t.joint_count])
                    .map(|(p, x)| p * x)
                    .sum();
            }
        }
    }
    q
}

/// Mean and standard error of the discounted return, per agent, from one
/// cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutEstimate {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

const ORACLE_STREAM_BASE: u64 = 1 << 32;

fn rollout_cell(
    t: &TransitionTable,
    solutions: &[AdvisorSolution],
    s: usize,
    a: usize,
    horizon: usize,
    beta: f64,
    count: usize,
    seed: u64,
) -> RolloutEstimate {
    let n = t.n_agents;
    let mut rng = stream(seed, ORACLE_STREAM_BASE + (s * t.joint_count + a) as u64);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut joint = vec![0usize; n];
    for _ in 0..count {
        let mut ret = t.rewards_at(s, a).to_vec();
        let mut state = s;
        let mut action = a;
        let mut discount = 1.0;
        for _ in 1..horizon {
            if t.terminal(state, action) {
                break;
            }
            state = t.next(state, action);
            if t.absorbing[state] {
                break;
            }
            discount *= beta;
            for (k, slot) in joint.iter_mut().enumerate() {
                *slot = sample_categorical(solutions[state].strategy(k), &mut rng);
            }
            action = crate::game::joint_index(&joint, &t.action_sizes).expect("sampled in range");
            for (r, x) in ret.iter_mut().zip(t.rewards_at(state, action)) {
                *r += discount * x;
            }
        }
        for j in 0..n {
            sum[j] += ret[j];
            sum_sq[j] += ret[j] * ret[j];
        }
    }
    let c = count as f64;
    let mean: Vec<f64> = sum.iter().map(|x| x / c).collect();
    let std_error = (0..n)
        .map(|j| {
            if count < 2 {
                return 0.0;
            }
            let var = ((sum_sq[j] - c * mean[j] * mean[j]) / (c - 1.0)).max(0.0);
            (var / c).sqrt()
        })
        .collect();
    RolloutEstimate { mean, std_error }
}

fn rollout_values(t: &TransitionTable, solutions: &[AdvisorSolution], horizon: usize, config: &OracleConfig) -> Vec<Vec<f64>> {
    let cells: Vec<usize> = (0..t.state_count * t.joint_count).collect();
    let estimates = par::map(cells, |cell| {
        let (s, a) = (cell / t.joint_count, cell % t.joint_count);
        if t.absorbing[s] {
            return vec![0.0; t.n_agents];
        }
        rollout_cell(t, solutions, s, a, horizon, config.beta, config.rollouts, config.seed).mean
    });
    (0..t.n_agents)
        .map(|j| estimates.iter().map(|e| e[j]).collect())
        .collect()
}

/// Monte Carlo estimate for a single cell with `count` rollouts.
pub fn rollout_estimate(
    model: &dyn GameModel,
    advisor: &dyn Advisor,
    state: StateId,
    joint: &[usize],
    count: usize,
    config: &OracleConfig,
) -> Result<RolloutEstimate> {
    config.validate()?;
    let t = TransitionTable::build(model)?;
    if state.0 >= t.state_count {
        return Err(Error::Index {
            what: "state",
            index: state.0,
            limit: t.state_count,
        });
    }
    let a = crate::game::joint_index(joint, &t.action_sizes)?;
    let solutions = snapshot(advisor, &t)?;
    let horizon = config.horizon.unwrap_or(t.horizon).max(1);
    Ok(rollout_cell(&t, &solutions, state.0, a, horizon, config.beta, count.max(1), config.seed))
}

/// Optimal joint Q-values of an identical-interest game by value iteration:
/// `Q(s,a) = r(s,a) + beta * max_a' Q(s',a')`, zero at absorbing states.
/// The joint optimum is a Nash equilibrium of such games, so this is the
/// Nash Q-value. Returns one (identical) table per agent.
pub fn nash_q_identical_interest(model: &dyn GameModel, beta: f64, tolerance: f64) -> Result<Vec<JointQTable>> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Config(format!("discount must lie in [0, 1), got {beta}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let t = TransitionTable::build(model)?;
    if !t.is_identical_interest() {
        return Err(Error::Precondition(
            "agents' rewards differ on some transition; only identical-interest games are supported".into(),
        ));
    }
    let q = optimal_values(&t, beta, tolerance)?;
    t.tables_from(&vec![q; t.n_agents])
}

fn state_max(q: &[f64], s: usize, joint: usize) -> f64 {
    q[s * joint..(s + 1) * joint]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn optimal_values(t: &TransitionTable, beta: f64, tolerance: f64) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 1_000_000;
    let j = t.joint_count;
    let mut q = vec![0.0; t.state_count * j];
    let mut v = vec![0.0; t.state_count];
    for _ in 0..MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        for s in 0..t.state_count {
            if t.absorbing[s] {
                continue;
            }
            for a in 0..j {
                let cont = if t.terminal(s, a) { 0.0 } else { beta * v[t.next(s, a)] };
                let new = t.reward(s, a, 0) + cont;
                delta = delta.max((new - q[s * j + a]).abs());
                q[s * j + a] = new;
            }
        }
        for (s, vs) in v.iter_mut().enumerate() {
            *vs = if t.absorbing[s] { 0.0 } else { state_max(&q, s, j) };
        }
        if delta < tolerance {
            return Ok(q);
        }
    }
    Err(Error::Divergence("value iteration did not reach the tolerance".into()))
}

/// Largest violation of the optimality equation by `q` for `agent`.
pub fn bellman_residual(model: &dyn GameModel, q: &JointQTable, beta: f64) -> Result<f64> {
    let t = TransitionTable::build(model)?;
    if q.state_count() != t.state_count || q.action_sizes() != t.action_sizes.as_slice() {
        return Err(Error::Config("table shape does not match the game".into()));
    }
    let j = t.joint_count;
    let values = q.values();
    let mut worst: f64 = 0.0;
    for s in 0..t.state_count {
        if t.absorbing[s] {
            continue;
        }
        for a in 0..j {
            let next = t.next(s, a);
            let cont = if t.terminal(s, a) || t.absorbing[next] {
                0.0
            } else {
                beta * state_max(values, next, j)
            };
            let target = t.reward(s, a, q.agent()) + cont;
            worst = worst.max((values[s * j + a] - target).abs());
        }
    }
    Ok(worst)
}

/// Mean squared difference over every (state, joint action) entry.
pub fn mse(a: &JointQTable, b: &JointQTable) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Dimension {
            what: "q-table entries",
            expected: a.values().len(),
            actual: b.values().len(),
        });
    }
    let n = a.values().len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(total / n as f64)
}

/// Mean of [`mse`] across agents.
pub fn mean_mse(a: &[JointQTable], b: &[JointQTable]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension {
            what: "table count",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += mse(x, y)?;
    }
    Ok(total / a.len() as f64)
}

/// The joint action with the highest value in every state (lowest index on
/// ties), as a deterministic advisor.
pub fn greedy_joint_advisor(q: &JointQTable) -> Result<PolicyAdvisor> {
    let j = q.joint_count();
    let policy = (0..q.state_count())
        .map(|s| {
            let slice = &q.values()[s * j..(s + 1) * j];
            let mut best = 0;
            for (i, &v) in slice.iter().enumerate() {
                if v > slice[best] {
                    best = i;
                }
            }
            joint_unindex(best, q.action_sizes())
        })
        .collect::<Result<Vec<JointAction>>>()?;
    PolicyAdvisor::new("joint_optimum", q.action_sizes(), policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::{Grade, MazeAdvisor, RandomAdvisor, ScriptedSequenceAdvisor};
    use crate::env::{Cell, GridMazeEnv, GridMazeLayout, MatrixGameEnv, ObservationMode, SingleStateDemoEnv};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn maze() -> (Arc<GridMazeLayout>, GridMazeEnv) {
        let layout = Arc::new(GridMazeLayout::default());
        let env = GridMazeEnv::from_shared(Arc::clone(&layout), ObservationMode::Joint);
        (layout, env)
    }

    #[test]
    fn geometric_value_of_permanent_joint_action() {
        let env = SingleStateDemoEnv::new(1000);
        let ul = AdvisorSolution::deterministic(&[0, 0], &[2, 2]).unwrap();
        let adv = ScriptedSequenceAdvisor::new(vec![ul]).unwrap();
        let v = advisor_value_q(&env, &adv, &OracleConfig::default()).unwrap();
        assert_eq!(v.source, ValueSource::Exact);
        let q = v.tables[0].get(StateId(0), &[0, 0]).unwrap();
        assert!((q - 20.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn terminal_cells_are_worth_their_reward() {
        let (layout, env) = maze();
        let adv = MazeAdvisor::new(Arc::clone(&layout), Grade::RANDOM);
        let config = OracleConfig {
            rollouts: 8,
            ..OracleConfig::default()
        };
        let v = advisor_value_q(&env, &adv, &config).unwrap();
        let t = TransitionTable::build(&env).unwrap();
        for s in 0..t.state_count {
            for a in 0..t.joint_count {
                if !t.is_absorbing(s) && t.terminal(s, a) {
                    assert_eq!(v.tables[0].values()[s * t.joint_count + a], t.reward(s, a, 0));
                }
            }
        }
    }

    #[test]
    fn single_step_nash_is_payoff() {
        let payoff = vec![1.0, -2.0, 0.5, 4.0];
        let env = MatrixGameEnv::identical_interest(&[2, 2], payoff.clone()).unwrap();
        let q = nash_q_identical_interest(&env, 0.9, 1e-12).unwrap();
        assert_eq!(q[0].values(), payoff.as_slice());
        assert_eq!(q.len(), 2);
    }

    #[test]
    fn nash_next_to_joint_goal_is_two() {
        let (layout, env) = maze();
        let q = nash_q_identical_interest(&env, 0.9, 1e-10).unwrap();
        // Put both agents beside the goal and find a joint move onto it.
        let g = layout.goal;
        let mut beside = Vec::new();
        for a in crate::env::MazeAction::ALL {
            for from in 0..layout.cell_count() {
                let c = layout.cell_at(from);
                if !layout.is_absorbing_cell(c) && layout.moved(c, a) == g {
                    beside.push((c, a));
                }
            }
        }
        let (c0, a0) = beside[0];
        let (c1, a1) = beside[beside.len() - 1];
        let s = layout.joint_state(c0, c1);
        assert_eq!(q[0].get(s, &[a0.index(), a1.index()]).unwrap(), 2.0);
    }

    #[test]
    fn nash_satisfies_optimality_and_is_a_fixed_point() {
        let (_, env) = maze();
        let q = nash_q_identical_interest(&env, 0.9, 1e-10).unwrap();
        assert!(bellman_residual(&env, &q[0], 0.9).unwrap() < 1e-9);
    }

    #[test]
    fn general_sum_game_is_rejected() {
        let game = crate::game::StageGame::new(&[2, 2], vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        let env = MatrixGameEnv::new(game, 1).unwrap();
        assert!(matches!(
            nash_q_identical_interest(&env, 0.9, 1e-9),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn joint_optimum_advisor_matches_nash() {
        let (_, env) = maze();
        let q = nash_q_identical_interest(&env, 0.9, 1e-12).unwrap();
        let adv = greedy_joint_advisor(&q[0]).unwrap();
        let v = advisor_value_q(&env, &adv, &OracleConfig::default()).unwrap();
        assert_eq!(v.source, ValueSource::Exact);
        let diff = v.tables[0]
            .values()
            .iter()
            .zip(q[0].values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff <= v.truncation_bound + 1e-9, "{diff}");
    }

    #[test]
    fn exact_and_rollout_agree_on_a_stochastic_advisor() {
        let (layout, env) = maze();
        let adv = MazeAdvisor::new(Arc::clone(&layout), Grade::new(3).unwrap());
        let exact = advisor_value_q(
            &env,
            &adv,
            &OracleConfig {
                method: ValueMethod::Exact,
                ..OracleConfig::default()
            },
        )
        .unwrap();
        let s = layout.joint_state(Cell::new(3, 1), Cell::new(4, 3));
        let est = rollout_estimate(&env, &adv, s, &[0, 2], 4000, &OracleConfig::default()).unwrap();
        let truth = exact.tables[0].get(s, &[0, 2]).unwrap();
        assert!((est.mean[0] - truth).abs() < 4.0 * est.std_error[0] + 1e-9, "{} vs {truth}", est.mean[0]);
    }

    #[test]
    fn rollout_error_shrinks_with_count() {
        let (layout, env) = maze();
        let adv = RandomAdvisor::new(&[4, 4]);
        let s = layout.joint_state(Cell::new(4, 0), Cell::new(4, 4));
        let cfg = OracleConfig::default();
        let small = rollout_estimate(&env, &adv, s, &[0, 0], 2000, &cfg).unwrap();
        let large = rollout_estimate(&env, &adv, s, &[0, 0], 8000, &cfg).unwrap();
        let ratio = small.std_error[0] / large.std_error[0];
        // Four times the rollouts halves the standard error.
        assert!((ratio - 2.0).abs() < 0.25, "{ratio}");
    }

    #[test]
    fn random_advisor_uses_rollouts_under_auto() {
        let (layout, env) = maze();
        let adv = MazeAdvisor::new(layout, Grade::RANDOM);
        let cfg = OracleConfig {
            rollouts: 2,
            ..OracleConfig::default()
        };
        assert_eq!(advisor_value_q(&env, &adv, &cfg).unwrap().source, ValueSource::Rollout { count: 2 });
    }

    #[test]
    fn rollouts_are_reproducible() {
        let (layout, env) = maze();
        let adv = MazeAdvisor::new(layout, Grade::new(2).unwrap());
        let cfg = OracleConfig {
            rollouts: 4,
            method: ValueMethod::Rollout,
            ..OracleConfig::default()
        };
        let a = advisor_value_q(&env, &adv, &cfg).unwrap();
        let b = advisor_value_q(&env, &adv, &cfg).unwrap();
        assert_eq!(a.tables, b.tables);
    }

    #[test]
    fn mse_examples() {
        let a = JointQTable::filled(0, 3, &[2, 2], 1.0);
        let b = JointQTable::filled(0, 3, &[2, 2], 1.5);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 0.25);
        assert!(mse(&a, &JointQTable::zeros(0, 2, &[2, 2])).is_err());
    }

    proptest! {
        #[test]
        fn mse_matches_naive_loop(vals in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 12)) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = vals.into_iter().unzip();
            let a = JointQTable::from_values(0, 3, &[2, 2], xs.clone()).unwrap();
            let b = JointQTable::from_values(0, 3, &[2, 2], ys.clone()).unwrap();
            let mut naive = 0.0;
            for s in 0..3 {
                for k in 0..4 {
                    let d = xs[s * 4 + k] - ys[s * 4 + k];
                    naive += d * d;
                }
            }
            naive /= 12.0;
            prop_assert!((mse(&a, &b).unwrap() - naive).abs() < 1e-12);
        }
    }
}
