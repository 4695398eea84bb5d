use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Environment, GameModel, Outcome};
use crate::error::{Error, Result};
use crate::game::{EnvStep, JointAction, StateId};

/// Layout file bundled with the crate.
pub const DEFAULT_LAYOUT: &str = include_str!("../../presets/grid_maze.toml");

const LAYOUT_FORMAT_VERSION: u32 = 1;
const MAZE_AGENTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl From<[usize; 2]> for Cell {
    fn from([row, col]: [usize; 2]) -> Self {
        Cell { row, col }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.row, c.col]
    }
}

/// The four moves available to each maze agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl MazeAction {
    pub const ALL: [MazeAction; 4] = [
        MazeAction::Up,
        MazeAction::Down,
        MazeAction::Left,
        MazeAction::Right,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeRewards {
    pub single_goal: f64,
    pub both_goal: f64,
    pub single_pitfall: f64,
    pub both_pitfall: f64,
    pub goal_and_pitfall: f64,
}

impl Default for MazeRewards {
    fn default() -> Self {
        MazeRewards {
            single_goal: 1.0,
            both_goal: 2.0,
            single_pitfall: -1.0,
            both_pitfall: -2.0,
            goal_and_pitfall: 1.0,
        }
    }
}

/// How `reset` places the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Always the configured start cells.
    #[default]
    Fixed,
    /// A uniformly random non-absorbing joint state (exploring starts).
    Random,
}

/// Whether agents see the joint state or only their own cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    #[default]
    Joint,
    Local,
}

/// Grid Maze description: geometry, start cells, goal, pitfalls, rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMazeLayout {
    pub format_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub starts: Vec<Cell>,
    pub goal: Cell,
    pub pitfalls: Vec<Cell>,
    pub step_cap: usize,
    #[serde(default)]
    pub start_mode: StartMode,
    #[serde(default)]
    pub rewards: MazeRewards,
}

impl Default for GridMazeLayout {
    fn default() -> Self {
        GridMazeLayout::from_toml(DEFAULT_LAYOUT).expect("bundled layout is valid")
    }
}

impl GridMazeLayout {
    pub fn from_toml(text: &str) -> Result<Self> {
        let layout: GridMazeLayout =
            toml::from_str(text).map_err(|e| Error::Config(format!("maze layout: {e}")))?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("layout serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != LAYOUT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "maze layout format_version {} is not supported (expected {LAYOUT_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("maze must have at least one row and column".into()));
        }
        if self.step_cap == 0 {
            return Err(Error::Config("maze step_cap must be positive".into()));
        }
        if self.starts.len() != MAZE_AGENTS {
            return Err(Error::Config(format!(
                "maze needs exactly {MAZE_AGENTS} start cells, got {}",
                self.starts.len()
            )));
        }
        let all = self
            .starts
            .iter()
            .chain(std::iter::once(&self.goal))
            .chain(&self.pitfalls);
        for c in all {
            if c.row >= self.rows || c.col >= self.cols {
                return Err(Error::Config(format!(
                    "cell [{}, {}] lies outside the {}x{} grid",
                    c.row, c.col, self.rows, self.cols
                )));
            }
        }
        if self.pitfalls.contains(&self.goal) {
            return Err(Error::Config("goal cell cannot also be a pitfall".into()));
        }
        for s in &self.starts {
            if self.is_absorbing_cell(*s) {
                return Err(Error::Config(format!(
                    "start cell [{}, {}] is a goal or pitfall",
                    s.row, s.col
                )));
            }
        }
        let r = &self.rewards;
        if [
            r.single_goal,
            r.both_goal,
            r.single_pitfall,
            r.both_pitfall,
            r.goal_and_pitfall,
        ]
        .iter()
        .any(|v| !v.is_finite())
        {
            return Err(Error::Config("maze rewards must be finite".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_id(&self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cell_at(&self, id: usize) -> Cell {
        Cell::new(id / self.cols, id % self.cols)
    }

    pub fn joint_state(&self, a: Cell, b: Cell) -> StateId {
        StateId(self.cell_id(a) * self.cell_count() + self.cell_id(b))
    }

    pub fn decode(&self, state: StateId) -> [Cell; 2] {
        let n = self.cell_count();
        [self.cell_at(state.0 / n), self.cell_at(state.0 % n)]
    }

    pub fn is_pitfall(&self, c: Cell) -> bool {
        self.pitfalls.contains(&c)
    }

    pub fn is_absorbing_cell(&self, c: Cell) -> bool {
        c == self.goal || self.is_pitfall(c)
    }

    /// Where `action` takes an agent from `from`; walls leave it in place.
    pub fn moved(&self, from: Cell, action: MazeAction) -> Cell {
        match action {
            MazeAction::Up if from.row > 0 => Cell::new(from.row - 1, from.col),
            MazeAction::Down if from.row + 1 < self.rows => Cell::new(from.row + 1, from.col),
            MazeAction::Left if from.col > 0 => Cell::new(from.row, from.col - 1),
            MazeAction::Right if from.col + 1 < self.cols => Cell::new(from.row, from.col + 1),
            _ => from,
        }
    }

    /// Shared reward after both moves land in the same tick, and whether the
    /// episode ends.
    pub fn score(&self, cells: [Cell; 2]) -> (f64, bool) {
        let goals = cells.iter().filter(|&&c| c == self.goal).count();
        let pits = cells.iter().filter(|&&c| self.is_pitfall(c)).count();
        let r = &self.rewards;
        let reward = match (goals, pits) {
            (2, _) => r.both_goal,
            (_, 2) => r.both_pitfall,
            (1, 1) => r.goal_and_pitfall,
            (1, 0) => r.single_goal,
            (0, 1) => r.single_pitfall,
            _ => 0.0,
        };
        (reward, goals + pits > 0)
    }

    pub fn max_episode_return(&self) -> f64 {
        let r = &self.rewards;
        [r.single_goal, r.both_goal, r.goal_and_pitfall, 0.0]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Two agents on a rectangular grid racing to a shared goal while avoiding
/// pitfalls. Rewards are identical for both agents.
#[derive(Debug, Clone)]
pub struct GridMazeEnv {
    layout: Arc<GridMazeLayout>,
    mode: ObservationMode,
    action_sizes: [usize; MAZE_AGENTS],
    cells: [Cell; 2],
    steps: usize,
    done: bool,
}

impl GridMazeEnv {
    pub fn new(layout: GridMazeLayout, mode: ObservationMode) -> Result<Self> {
        layout.validate()?;
        Ok(Self::from_shared(Arc::new(layout), mode))
    }

    pub fn from_shared(layout: Arc<GridMazeLayout>, mode: ObservationMode) -> Self {
        let cells = [layout.starts[0], layout.starts[1]];
        GridMazeEnv {
            layout,
            mode,
            action_sizes: [4; MAZE_AGENTS],
            cells,
            steps: 0,
            done: false,
        }
    }

    pub fn layout(&self) -> &GridMazeLayout {
        &self.layout
    }

    pub fn shared_layout(&self) -> Arc<GridMazeLayout> {
        Arc::clone(&self.layout)
    }

    pub fn observation_mode(&self) -> ObservationMode {
        self.mode
    }

    pub fn positions(&self) -> [Cell; 2] {
        self.cells
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Places the agents explicitly, e.g. to set up a test position.
    pub fn set_positions(&mut self, cells: [Cell; 2]) -> Result<()> {
        for c in cells {
            if c.row >= self.layout.rows || c.col >= self.layout.cols {
                return Err(Error::Usage(format!("cell [{}, {}] is off-grid", c.row, c.col)));
            }
        }
        self.cells = cells;
        self.steps = 0;
        self.done = cells.iter().any(|&c| self.layout.is_absorbing_cell(c));
        Ok(())
    }

    fn outcome(&self, cells: [Cell; 2], joint: &[usize]) -> Result<([Cell; 2], f64, bool)> {
        if joint.len() != MAZE_AGENTS {
            return Err(Error::Dimension {
                what: "joint action length",
                expected: MAZE_AGENTS,
                actual: joint.len(),
            });
        }
        let mut next = cells;
        for (cell, &a) in next.iter_mut().zip(joint) {
            let action = MazeAction::from_index(a).ok_or(Error::Index {
                what: "maze action",
                index: a,
                limit: 4,
            })?;
            *cell = self.layout.moved(*cell, action);
        }
        let (reward, terminal) = self.layout.score(next);
        Ok((next, reward, terminal))
    }
}

impl Environment for GridMazeEnv {
    fn name(&self) -> &str {
        "grid_maze"
    }

    fn n_agents(&self) -> usize {
        MAZE_AGENTS
    }

    fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    fn state_count(&self) -> usize {
        self.layout.cell_count().pow(2)
    }

    fn observation_count(&self) -> usize {
        match self.mode {
            ObservationMode::Joint => Environment::state_count(self),
            ObservationMode::Local => self.layout.cell_count(),
        }
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId {
        self.cells = match self.layout.start_mode {
            StartMode::Fixed => [self.layout.starts[0], self.layout.starts[1]],
            StartMode::Random => {
                let free: Vec<Cell> = (0..self.layout.cell_count())
                    .map(|id| self.layout.cell_at(id))
                    .filter(|&c| !self.layout.is_absorbing_cell(c))
                    .collect();
                [
                    free[rng.gen_range(0..free.len())],
                    free[rng.gen_range(0..free.len())],
                ]
            }
        };
        self.steps = 0;
        self.done = false;
        self.state()
    }

    fn step(&mut self, joint: &JointAction) -> Result<EnvStep> {
        if self.done {
            return Err(Error::Usage("step called on a finished maze episode".into()));
        }
        let (next, reward, terminal) = self.outcome(self.cells, joint)?;
        self.cells = next;
        self.steps += 1;
        let truncated = !terminal && self.steps >= self.layout.step_cap;
        self.done = terminal || truncated;
        Ok(EnvStep {
            next_state: self.state(),
            rewards: vec![reward; MAZE_AGENTS],
            terminal,
            truncated,
        })
    }

    fn state(&self) -> StateId {
        self.layout.joint_state(self.cells[0], self.cells[1])
    }

    fn observe(&self, agent: usize) -> Result<StateId> {
        if agent >= MAZE_AGENTS {
            return Err(Error::Index {
                what: "agent",
                index: agent,
                limit: MAZE_AGENTS,
            });
        }
        Ok(match self.mode {
            ObservationMode::Joint => self.state(),
            ObservationMode::Local => StateId(self.layout.cell_id(self.cells[agent])),
        })
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn step_cap(&self) -> usize {
        self.layout.step_cap
    }

    fn max_episode_return(&self) -> f64 {
        self.layout.max_episode_return()
    }

    fn model(&self) -> Option<&dyn GameModel> {
        Some(self)
    }
}

impl GameModel for GridMazeEnv {
    fn n_agents(&self) -> usize {
        MAZE_AGENTS
    }

    fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    fn state_count(&self) -> usize {
        self.layout.cell_count().pow(2)
    }

    fn is_absorbing(&self, state: StateId) -> bool {
        self.layout
            .decode(state)
            .iter()
            .any(|&c| self.layout.is_absorbing_cell(c))
    }

    fn transition(&self, state: StateId, joint: &[usize]) -> Result<Outcome> {
        if state.0 >= GameModel::state_count(self) {
            return Err(Error::Index {
                what: "state",
                index: state.0,
                limit: GameModel::state_count(self),
            });
        }
        let (next, reward, terminal) = self.outcome(self.layout.decode(state), joint)?;
        Ok(Outcome {
            next_state: self.layout.joint_state(next[0], next[1]),
            rewards: vec![reward; MAZE_AGENTS],
            terminal,
        })
    }

    fn horizon(&self) -> usize {
        self.layout.step_cap
    }
}
