//! Advisors: external sources of action recommendations for every agent.
//!
//! An advisor maps a joint state to an [`AdvisorSolution`], one strategy per
//! agent. Agents it has nothing to say about receive a uniform strategy.
//! Recommendations are draws from the agent's marginal in that solution.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;

use crate::env::{Cell, GridMazeLayout, MazeAction};
use crate::error::{Error, Result};
use crate::game::{one_hot, AdvisorSolution, EnvStep, JointAction, StateId};

pub trait Advisor: Send {
    fn name(&self) -> String;

    /// Full strategy tuple at `state`.
    fn solve(&self, state: StateId) -> AdvisorSolution;

    /// Recommended action for `agent`, drawn from its strategy at `state`.
    fn recommend(&self, state: StateId, agent: usize, rng: &mut dyn RngCore) -> usize {
        self.solve(state).sample(agent, rng)
    }

    /// Called after every environment transition.
    fn observe_transition(&mut self, _step: &EnvStep) {}

    /// Called once at the end of every episode.
    fn end_episode(&mut self) {}
}

/// Uniform over every agent's actions, for any environment.
#[derive(Debug, Clone)]
pub struct RandomAdvisor {
    action_sizes: Vec<usize>,
}

impl RandomAdvisor {
    pub fn new(action_sizes: &[usize]) -> Self {
        RandomAdvisor {
            action_sizes: action_sizes.to_vec(),
        }
    }
}

impl Advisor for RandomAdvisor {
    fn name(&self) -> String {
        "random".into()
    }

    fn solve(&self, _state: StateId) -> AdvisorSolution {
        AdvisorSolution::uniform(&self.action_sizes)
    }
}

/// Deterministic joint policy given as one joint action per state.
#[derive(Debug, Clone)]
pub struct PolicyAdvisor {
    name: String,
    action_sizes: Vec<usize>,
    policy: Vec<JointAction>,
}

impl PolicyAdvisor {
    pub fn new(name: impl Into<String>, action_sizes: &[usize], policy: Vec<JointAction>) -> Result<Self> {
        for joint in &policy {
            joint.validate(action_sizes)?;
        }
        Ok(PolicyAdvisor {
            name: name.into(),
            action_sizes: action_sizes.to_vec(),
            policy,
        })
    }

    /// The same joint action in every state.
    pub fn constant(action_sizes: &[usize], joint: JointAction, state_count: usize) -> Result<Self> {
        Self::new("constant", action_sizes, vec![joint; state_count])
    }
}

impl Advisor for PolicyAdvisor {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn solve(&self, state: StateId) -> AdvisorSolution {
        match self.policy.get(state.0) {
            Some(joint) => AdvisorSolution::deterministic(joint, &self.action_sizes)
                .expect("validated at construction"),
            None => AdvisorSolution::uniform(&self.action_sizes),
        }
    }
}

/// Plays back a fixed list of solutions, one per environment time step,
/// regardless of state. Time advances on every observed transition and
/// restarts with each episode; the last entry repeats once the list runs out.
#[derive(Debug, Clone)]
pub struct ScriptedSequenceAdvisor {
    script: Vec<AdvisorSolution>,
    cursor: usize,
}

impl ScriptedSequenceAdvisor {
    pub fn new(script: Vec<AdvisorSolution>) -> Result<Self> {
        if script.is_empty() {
            return Err(Error::Config("scripted advisor needs at least one solution".into()));
        }
        Ok(ScriptedSequenceAdvisor { script, cursor: 0 })
    }

    pub fn time(&self) -> usize {
        self.cursor
    }
}

impl Advisor for ScriptedSequenceAdvisor {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn solve(&self, _state: StateId) -> AdvisorSolution {
        self.script[self.cursor.min(self.script.len() - 1)].clone()
    }

    fn observe_transition(&mut self, _step: &EnvStep) {
        self.cursor += 1;
    }

    fn end_episode(&mut self) {
        self.cursor = 0;
    }
}

/// Quality grade of a rule-based Grid Maze advisor, 1 (best) to 4 (random).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(u8);

impl Grade {
    pub const BEST: Grade = Grade(1);
    pub const RANDOM: Grade = Grade(4);

    pub fn new(grade: u8) -> Result<Self> {
        if (1..=4).contains(&grade) {
            Ok(Grade(grade))
        } else {
            Err(Error::Config(format!("advisor grade must be 1..=4, got {grade}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> [Grade; 4] {
        [Grade(1), Grade(2), Grade(3), Grade(4)]
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let g: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("advisor grade must be 1..=4, got {s:?}")))?;
        Grade::new(g)
    }
}

/// Rule-based Grid Maze advisor.
///
/// * grade 1: shortest path to the goal, routing around pitfalls;
/// * grade 2: grade-1 moves only when within one step of the goal or a
///   pitfall, uniform elsewhere;
/// * grade 3: uniform over moves that shrink the Manhattan distance to the
///   goal, pitfalls ignored;
/// * grade 4: uniform.
#[derive(Debug, Clone)]
pub struct MazeAdvisor {
    layout: Arc<GridMazeLayout>,
    grade: Grade,
    /// Per cell, the strategy of a single agent standing there.
    table: Vec<Vec<f64>>,
}

impl MazeAdvisor {
    pub fn new(layout: Arc<GridMazeLayout>, grade: Grade) -> Self {
        let dist = safe_distances(&layout);
        let table = (0..layout.cell_count())
            .map(|id| cell_strategy(&layout, &dist, grade, layout.cell_at(id)))
            .collect();
        MazeAdvisor {
            layout,
            grade,
            table,
        }
    }

    pub fn grade(&self) -> Grade {
        self.grade
    }

    /// Strategy of one agent standing on `cell`.
    pub fn cell_strategy(&self, cell: Cell) -> &[f64] {
        &self.table[self.layout.cell_id(cell)]
    }
}

impl Advisor for MazeAdvisor {
    fn name(&self) -> String {
        format!("maze_grade{}", self.grade)
    }

    fn solve(&self, state: StateId) -> AdvisorSolution {
        let cells = self.layout.decode(state);
        AdvisorSolution::new(cells.iter().map(|&c| self.cell_strategy(c).to_vec()).collect())
            .expect("maze strategies are probability vectors")
    }
}

/// Breadth-first distance from every cell to the goal with pitfalls treated
/// as walls. `None` marks pitfalls and cells cut off from the goal.
pub fn safe_distances(layout: &GridMazeLayout) -> Vec<Option<usize>> {
    let mut dist = vec![None; layout.cell_count()];
    let mut queue = VecDeque::new();
    dist[layout.cell_id(layout.goal)] = Some(0);
    queue.push_back(layout.goal);
    while let Some(cell) = queue.pop_front() {
        let d = dist[layout.cell_id(cell)].expect("queued cells have a distance");
        for action in MazeAction::ALL {
            let next = layout.moved(cell, action);
            let id = layout.cell_id(next);
            if next != cell && dist[id].is_none() && !layout.is_pitfall(next) {
                dist[id] = Some(d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// The grade-1 move from `cell`: the lowest-indexed action that steps onto
/// a cell one closer to the goal. Cells without a safe route get a uniform
/// choice over moves that do not enter a pitfall.
fn best_strategy(layout: &GridMazeLayout, dist: &[Option<usize>], cell: Cell) -> Vec<f64> {
    if let Some(d) = dist[layout.cell_id(cell)] {
        for action in MazeAction::ALL {
            let next = layout.moved(cell, action);
            if d > 0 && dist[layout.cell_id(next)] == Some(d - 1) {
                return one_hot(action.index(), 4);
            }
        }
    }
    let safe: Vec<usize> = MazeAction::ALL
        .iter()
        .filter(|&&a| !layout.is_pitfall(layout.moved(cell, a)))
        .map(|a| a.index())
        .collect();
    spread(&safe)
}

fn spread(actions: &[usize]) -> Vec<f64> {
    if actions.is_empty() {
        return vec![0.25; 4];
    }
    let mut v = vec![0.0; 4];
    for &a in actions {
        v[a] = 1.0 / actions.len() as f64;
    }
    v
}

fn cell_strategy(layout: &GridMazeLayout, dist: &[Option<usize>], grade: Grade, cell: Cell) -> Vec<f64> {
    if layout.is_absorbing_cell(cell) {
        return vec![0.25; 4];
    }
    match grade.get() {
        1 => best_strategy(layout, dist, cell),
        2 => {
            let near = cell.manhattan(layout.goal) <= 1
                || layout.pitfalls.iter().any(|&p| cell.manhattan(p) <= 1);
            if near {
                best_strategy(layout, dist, cell)
            } else {
                vec![0.25; 4]
            }
        }
        3 => {
            let here = cell.manhattan(layout.goal);
            let closer: Vec<usize> = MazeAction::ALL
                .iter()
                .filter(|&&a| layout.moved(cell, a).manhattan(layout.goal) < here)
                .map(|a| a.index())
                .collect();
            spread(&closer)
        }
        _ => vec![0.25; 4],
    }
}

/// Starts out random and switches to the grade-1 rules after a given
/// number of completed episodes, modelling an advisor that improves while
/// it is being evaluated.
#[derive(Debug, Clone)]
pub struct AdaptiveAdvisor {
    weak: MazeAdvisor,
    strong: MazeAdvisor,
    switch_episode: Option<usize>,
    episodes_seen: usize,
}

impl AdaptiveAdvisor {
    /// `None` never switches.
    pub fn new(layout: Arc<GridMazeLayout>, switch_episode: Option<usize>) -> Self {
        AdaptiveAdvisor {
            weak: MazeAdvisor::new(Arc::clone(&layout), Grade::RANDOM),
            strong: MazeAdvisor::new(layout, Grade::BEST),
            switch_episode,
            episodes_seen: 0,
        }
    }

    pub fn episodes_seen(&self) -> usize {
        self.episodes_seen
    }

    pub fn is_strong(&self) -> bool {
        self.switch_episode.is_some_and(|s| self.episodes_seen >= s)
    }

    fn active(&self) -> &MazeAdvisor {
        if self.is_strong() {
            &self.strong
        } else {
            &self.weak
        }
    }
}

impl Advisor for AdaptiveAdvisor {
    fn name(&self) -> String {
        match self.switch_episode {
            Some(s) => format!("adaptive_switch{s}"),
            None => "adaptive_never".into(),
        }
    }

    fn solve(&self, state: StateId) -> AdvisorSolution {
        self.active().solve(state)
    }

    fn end_episode(&mut self) {
        self.episodes_seen += 1;
    }
}

/// The advisors attached to a training run: none, one shared by every agent,
/// or one per agent.
pub struct AdvisorPanel {
    advisors: Vec<Box<dyn Advisor>>,
    n_agents: usize,
}

impl AdvisorPanel {
    pub fn new(advisors: Vec<Box<dyn Advisor>>, n_agents: usize) -> Result<Self> {
        if !(advisors.len() <= 1 || advisors.len() == n_agents) {
            return Err(Error::Config(format!(
                "expected 0, 1 or {n_agents} advisors, got {}",
                advisors.len()
            )));
        }
        Ok(AdvisorPanel { advisors, n_agents })
    }

    pub fn none(n_agents: usize) -> Self {
        AdvisorPanel {
            advisors: Vec::new(),
            n_agents,
        }
    }

    pub fn shared(advisor: Box<dyn Advisor>, n_agents: usize) -> Self {
        AdvisorPanel {
            advisors: vec![advisor],
            n_agents,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.advisors.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    fn for_agent(&self, agent: usize) -> Result<&dyn Advisor> {
        match self.advisors.len() {
            0 => Err(Error::Config("advisor requested but none is configured".into())),
            1 => Ok(self.advisors[0].as_ref()),
            _ => Ok(self.advisors[agent].as_ref()),
        }
    }

    pub fn recommend(&self, state: StateId, agent: usize, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.for_agent(agent)?.recommend(state, agent, rng))
    }

    /// Solution used to bootstrap `agent`'s evaluation target.
    pub fn solve(&self, state: StateId, agent: usize) -> Result<AdvisorSolution> {
        Ok(self.for_agent(agent)?.solve(state))
    }

    pub fn names(&self) -> Vec<String> {
        self.advisors.iter().map(|a| a.name()).collect()
    }

    pub fn observe_transition(&mut self, step: &EnvStep) {
        for a in &mut self.advisors {
            a.observe_transition(step);
        }
    }

    pub fn end_episode(&mut self) {
        for a in &mut self.advisors {
            a.end_episode();
        }
    }
}

impl<A: Advisor + ?Sized> Advisor for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn solve(&self, state: StateId) -> AdvisorSolution {
        (**self).solve(state)
    }

    fn recommend(&self, state: StateId, agent: usize, rng: &mut dyn RngCore) -> usize {
        (**self).recommend(state, agent, rng)
    }

    fn observe_transition(&mut self, step: &EnvStep) {
        (**self).observe_transition(step)
    }

    fn end_episode(&mut self) {
        (**self).end_episode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{GridMazeLayout, MazeRewards, StartMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> Arc<GridMazeLayout> {
        Arc::new(GridMazeLayout {
            format_version: 1,
            rows: 5,
            cols: 5,
            starts: vec![Cell::new(4, 0), Cell::new(4, 4)],
            goal: Cell::new(0, 2),
            pitfalls: vec![Cell::new(1, 2), Cell::new(2, 3)],
            step_cap: 100,
            start_mode: StartMode::Fixed,
            rewards: MazeRewards::default(),
        })
    }

    fn assert_valid(sol: &AdvisorSolution) {
        for s in sol.strategies() {
            assert!(s.iter().all(|&p| p >= 0.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grade_parsing() {
        assert!(Grade::new(0).is_err());
        assert!(Grade::new(5).is_err());
        assert_eq!("3".parse::<Grade>().unwrap().get(), 3);
        assert!("x".parse::<Grade>().is_err());
    }

    #[test]
    fn grade1_enters_adjacent_goal() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::BEST);
        // Goal at (0,2); standing at (0,1) the only entering move is Right.
        let s = l.joint_state(Cell::new(0, 1), Cell::new(0, 3));
        let sol = adv.solve(s);
        assert_eq!(sol.strategy(0), &one_hot(MazeAction::Right.index(), 4)[..]);
        assert_eq!(sol.strategy(1), &one_hot(MazeAction::Left.index(), 4)[..]);
        assert!(sol.is_deterministic());
    }

    #[test]
    fn grade1_never_steps_into_pitfall() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::BEST);
        let dist = safe_distances(&l);
        for id in 0..l.cell_count() {
            let cell = l.cell_at(id);
            if l.is_absorbing_cell(cell) {
                continue;
            }
            let strat = adv.cell_strategy(cell);
            let a = strat.iter().position(|&p| p == 1.0).expect("deterministic");
            let next = l.moved(cell, MazeAction::from_index(a).unwrap());
            assert!(!l.is_pitfall(next), "cell {cell:?}");
            assert_eq!(
                dist[l.cell_id(next)].unwrap() + 1,
                dist[id].unwrap(),
                "cell {cell:?} is not on a shortest path"
            );
        }
    }

    #[test]
    fn grade1_routes_around_pitfall_below_goal() {
        let l = layout();
        // Pitfall at (1,2) sits between (2,2) and the goal.
        let dist = safe_distances(&l);
        assert_eq!(dist[l.cell_id(Cell::new(2, 2))], Some(4));
        assert_eq!(dist[l.cell_id(Cell::new(1, 2))], None);
    }

    #[test]
    fn grade3_enters_pitfall_on_the_way() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::new(3).unwrap());
        // From (2,2) the only distance-reducing move is Up, into the pitfall.
        let strat = adv.cell_strategy(Cell::new(2, 2));
        assert_eq!(strat, &one_hot(MazeAction::Up.index(), 4)[..]);
        // Brute-force Manhattan check everywhere.
        for id in 0..l.cell_count() {
            let cell = l.cell_at(id);
            if l.is_absorbing_cell(cell) {
                continue;
            }
            for (a, &p) in adv.cell_strategy(cell).iter().enumerate() {
                let next = l.moved(cell, MazeAction::from_index(a).unwrap());
                let reduces = next.manhattan(l.goal) < cell.manhattan(l.goal);
                assert_eq!(p > 0.0, reduces, "cell {cell:?} action {a}");
            }
        }
    }

    #[test]
    fn grade2_is_random_far_from_hazards() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::new(2).unwrap());
        assert_eq!(adv.cell_strategy(Cell::new(4, 0)), &[0.25; 4]);
        let best = MazeAdvisor::new(Arc::clone(&l), Grade::BEST);
        let near = Cell::new(2, 2);
        assert_eq!(adv.cell_strategy(near), best.cell_strategy(near));
    }

    #[test]
    fn grade4_is_uniform() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::RANDOM);
        for s in 0..625 {
            let sol = adv.solve(StateId(s));
            assert_eq!(sol.strategy(0), &[0.25; 4]);
            assert_eq!(sol.strategy(1), &[0.25; 4]);
        }
    }

    #[test]
    fn every_grade_returns_valid_and_stationary_solutions() {
        let l = layout();
        for g in Grade::all() {
            let adv = MazeAdvisor::new(Arc::clone(&l), g);
            for s in 0..625 {
                let a = adv.solve(StateId(s));
                assert_valid(&a);
                assert_eq!(a, adv.solve(StateId(s)));
            }
        }
    }

    #[test]
    fn recommend_matches_marginal() {
        let l = layout();
        let adv = MazeAdvisor::new(Arc::clone(&l), Grade::new(3).unwrap());
        let s = l.joint_state(Cell::new(4, 0), Cell::new(3, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[adv.recommend(s, 0, &mut rng)] += 1;
        }
        let marginal = adv.solve(s).strategy(0).to_vec();
        for a in 0..4 {
            let p = marginal[a];
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            let f = counts[a] as f64 / n as f64;
            assert!((f - p).abs() <= 4.0 * sd + 1e-12, "action {a}: {f} vs {p}");
        }
    }

    #[test]
    fn adaptive_switches_after_episodes() {
        let l = layout();
        let best = MazeAdvisor::new(Arc::clone(&l), Grade::BEST);
        let random = MazeAdvisor::new(Arc::clone(&l), Grade::RANDOM);
        let s = l.joint_state(Cell::new(4, 0), Cell::new(4, 4));

        let immediate = AdaptiveAdvisor::new(Arc::clone(&l), Some(0));
        assert_eq!(immediate.solve(s), best.solve(s));

        let mut never = AdaptiveAdvisor::new(Arc::clone(&l), None);
        for _ in 0..1000 {
            never.end_episode();
        }
        assert_eq!(never.solve(s), random.solve(s));

        let mut later = AdaptiveAdvisor::new(Arc::clone(&l), Some(3));
        for _ in 0..3 {
            assert_eq!(later.solve(s), random.solve(s));
            later.end_episode();
        }
        assert_eq!(later.solve(s), best.solve(s));
    }

    #[test]
    fn scripted_sequence_plays_in_order() {
        let first = AdvisorSolution::deterministic(&[0, 0], &[2, 2]).unwrap();
        let second = AdvisorSolution::uniform(&[2, 2]);
        let mut adv = ScriptedSequenceAdvisor::new(vec![first.clone(), second.clone()]).unwrap();
        let step = EnvStep {
            next_state: StateId(0),
            rewards: vec![0.0, 0.0],
            terminal: false,
            truncated: false,
        };
        assert_eq!(adv.solve(StateId(0)), first);
        adv.observe_transition(&step);
        assert_eq!(adv.solve(StateId(0)), second);
        adv.observe_transition(&step);
        assert_eq!(adv.solve(StateId(0)), second);
        adv.end_episode();
        assert_eq!(adv.time(), 0);
        assert!(ScriptedSequenceAdvisor::new(vec![]).is_err());
    }

    #[test]
    fn policy_advisor_is_deterministic() {
        let adv = PolicyAdvisor::constant(&[2, 3], JointAction(vec![1, 2]), 4).unwrap();
        let sol = adv.solve(StateId(2));
        assert_eq!(sol.mode(), JointAction(vec![1, 2]));
        assert!(sol.is_deterministic());
        assert!(PolicyAdvisor::constant(&[2, 3], JointAction(vec![2, 0]), 1).is_err());
    }
}
