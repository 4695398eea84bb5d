//! Experiment files: one TOML document per experiment.
//!
//! ```toml
//! format_version = 1
//! name = "maze-dm"
//! learner = "dm"
//! advisors = ["grade1"]
//! episodes = 2000
//! seeds = [0, 1, 2, 3, 4]
//!
//! [environment]
//! kind = "grid_maze"
//!
//! [dm]
//! alpha = 0.1
//! beta = 0.9
//! epsilon = { start = 0.1, end = 0.0, horizon = 3000 }
//! epsilon_prime = { start = 0.8, end = 0.0, horizon = 3000 }
//! ```
//!
//! Unknown keys anywhere in the file are rejected.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::advisor::{
    AdaptiveAdvisor, Advisor, AdvisorPanel, Grade, MazeAdvisor, RandomAdvisor,
    ScriptedSequenceAdvisor,
};
use crate::env::{
    Environment, GridMazeEnv, GridMazeLayout, MatrixGameEnv, ObservationMode, SingleStateDemoEnv,
    StartMode,
};
use crate::error::{Error, Result};
use crate::game::{AdvisorSolution, StageGame};
use crate::neural::{AcConfig, NeuralAeConfig, NeuralDmConfig};
use crate::oracle::OracleConfig;
use crate::tabular::{AeConfig, DmConfig};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub name: String,
    #[serde(default)]
    pub environment: Option<EnvSpec>,
    #[serde(default)]
    pub learner: Option<LearnerKind>,
    /// Empty for no advisor, one entry shared by every agent, or one per agent.
    #[serde(default)]
    pub advisors: Vec<AdvisorSpec>,
    #[serde(default)]
    pub episodes: usize,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Output directory; the command line `--out` wins over this.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub dm: Option<DmConfig>,
    #[serde(default)]
    pub ae: Option<AeConfig>,
    #[serde(default)]
    pub dm_nn: Option<NeuralDmConfig>,
    #[serde(default)]
    pub ae_nn: Option<NeuralAeConfig>,
    #[serde(default)]
    pub dm_ac: Option<AcConfig>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub evaluation: Option<EvaluationSpec>,
    #[serde(default)]
    pub pipeline: Option<PipelineSpec>,
    #[serde(default)]
    pub plot: Option<PlotSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Dm,
    Ae,
    DmNn,
    AeNn,
    DmAc,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Dm => "dm",
            LearnerKind::Ae => "ae",
            LearnerKind::DmNn => "dm-nn",
            LearnerKind::AeNn => "ae-nn",
            LearnerKind::DmAc => "dm-ac",
        })
    }
}

/// A learner together with its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnerSpec {
    Dm(DmConfig),
    Ae(AeConfig),
    DmNn(NeuralDmConfig),
    AeNn(NeuralAeConfig),
    DmAc(AcConfig),
}

impl LearnerSpec {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerSpec::Dm(_) => LearnerKind::Dm,
            LearnerSpec::Ae(_) => LearnerKind::Ae,
            LearnerSpec::DmNn(_) => LearnerKind::DmNn,
            LearnerSpec::AeNn(_) => LearnerKind::AeNn,
            LearnerSpec::DmAc(_) => LearnerKind::DmAc,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            LearnerSpec::Dm(c) => c.beta,
            LearnerSpec::Ae(c) => c.beta,
            LearnerSpec::DmNn(c) => c.beta,
            LearnerSpec::AeNn(c) => c.beta,
            LearnerSpec::DmAc(c) => c.beta,
        }
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, LearnerSpec::Dm(_) | LearnerSpec::Ae(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Dm(c) => c.validate(),
            LearnerSpec::Ae(c) => c.validate(),
            LearnerSpec::DmNn(c) => c.validate(),
            LearnerSpec::AeNn(c) => c.validate(),
            LearnerSpec::DmAc(c) => c.validate(),
        }
    }

    /// Same learner with the advisor-following schedule starting at `start`.
    /// Only decision-making learners have such a schedule.
    pub fn with_epsilon_prime_start(&self, start: f64) -> Result<LearnerSpec> {
        Ok(match self {
            LearnerSpec::Dm(c) => {
                let mut c = c.clone();
                c.epsilon_prime = c.epsilon_prime.with_start(start.min(1.0 - c.epsilon.start));
                LearnerSpec::Dm(c)
            }
            LearnerSpec::DmNn(c) => {
                let mut c = c.clone();
                c.epsilon_prime = c.epsilon_prime.with_start(start.min(1.0 - c.epsilon.start));
                LearnerSpec::DmNn(c)
            }
            LearnerSpec::DmAc(c) => {
                let mut c = c.clone();
                c.epsilon_prime = c.epsilon_prime.with_start(start);
                LearnerSpec::DmAc(c)
            }
            other => {
                return Err(Error::Config(format!(
                    "learner {} has no epsilon_prime schedule",
                    other.kind()
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    GridMaze(MazeSpec),
    SingleStateDemo(DemoSpec),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MazeSpec {
    /// Layout file; the bundled 5x5 layout when absent. Relative paths are
    /// taken from the experiment file's directory.
    #[serde(default)]
    pub layout: Option<PathBuf>,
    #[serde(default)]
    pub observation: ObservationMode,
    #[serde(default)]
    pub start_mode: Option<StartMode>,
    #[serde(default)]
    pub step_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSpec {
    pub step_cap: usize,
    /// Reward for every joint action other than (Up, Left).
    #[serde(default)]
    pub other_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub action_sizes: Vec<usize>,
    /// One payoff array per agent over joint actions, row-major.
    pub payoffs: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub horizon: usize,
}

fn one() -> usize {
    1
}

impl EnvSpec {
    /// Maze layout with the overrides applied; `None` for other games.
    pub fn maze_layout(&self) -> Result<Option<Arc<GridMazeLayout>>> {
        let EnvSpec::GridMaze(m) = self else {
            return Ok(None);
        };
        let mut layout = match &m.layout {
            Some(p) => GridMazeLayout::load(p)?,
            None => GridMazeLayout::default(),
        };
        if let Some(mode) = m.start_mode {
            layout.start_mode = mode;
        }
        if let Some(cap) = m.step_cap {
            layout.step_cap = cap;
        }
        layout.validate()?;
        Ok(Some(Arc::new(layout)))
    }

    pub fn build(&self) -> Result<Box<dyn Environment + Send>> {
        Ok(match self {
            EnvSpec::GridMaze(m) => {
                let layout = self.maze_layout()?.expect("maze spec has a layout");
                Box::new(GridMazeEnv::from_shared(layout, m.observation))
            }
            EnvSpec::SingleStateDemo(d) => {
                if d.step_cap == 0 {
                    return Err(Error::Config("environment.step_cap must be positive".into()));
                }
                Box::new(SingleStateDemoEnv::with_other_reward(d.step_cap, d.other_reward))
            }
            EnvSpec::Matrix(m) => {
                let game = StageGame::new(&m.action_sizes, m.payoffs.clone())?;
                Box::new(MatrixGameEnv::new(game, m.horizon)?)
            }
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let EnvSpec::GridMaze(MazeSpec { layout: Some(p), .. }) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Named advisor. Written in files as `random`, `grade1` .. `grade4`,
/// `adaptive`, `adaptive:<episode>` or `demo_script`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdvisorSpec {
    Random,
    Maze(Grade),
    /// Random until `switch` episodes have completed, grade 1 afterwards.
    Adaptive { switch: Option<usize> },
    /// Up-Left twice, then uniform, for the one-state demo game.
    DemoScript,
}

impl fmt::Display for AdvisorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdvisorSpec::Random => f.write_str("random"),
            AdvisorSpec::Maze(g) => write!(f, "grade{g}"),
            AdvisorSpec::Adaptive { switch: None } => f.write_str("adaptive"),
            AdvisorSpec::Adaptive { switch: Some(s) } => write!(f, "adaptive:{s}"),
            AdvisorSpec::DemoScript => f.write_str("demo_script"),
        }
    }
}

impl FromStr for AdvisorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "unknown advisor {s:?}; expected random, grade1..grade4, adaptive, adaptive:<episode> or demo_script"
            ))
        };
        match s {
            "random" => return Ok(AdvisorSpec::Random),
            "adaptive" => return Ok(AdvisorSpec::Adaptive { switch: None }),
            "demo_script" => return Ok(AdvisorSpec::DemoScript),
            _ => {}
        }
        if let Some(g) = s.strip_prefix("grade") {
            return g.parse().map(AdvisorSpec::Maze).map_err(|_| bad());
        }
        if let Some(e) = s.strip_prefix("adaptive:") {
            let switch = e.parse().map_err(|_| bad())?;
            return Ok(AdvisorSpec::Adaptive { switch: Some(switch) });
        }
        Err(bad())
    }
}

impl TryFrom<String> for AdvisorSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdvisorSpec> for String {
    fn from(a: AdvisorSpec) -> String {
        a.to_string()
    }
}

impl AdvisorSpec {
    pub fn needs_maze(&self) -> bool {
        matches!(self, AdvisorSpec::Maze(_) | AdvisorSpec::Adaptive { .. })
    }

    pub fn build(&self, env: &dyn Environment, layout: Option<&Arc<GridMazeLayout>>) -> Result<Box<dyn Advisor>> {
        let maze = || {
            layout
                .cloned()
                .ok_or_else(|| Error::Config(format!("advisor {self} needs a grid_maze environment")))
        };
        Ok(match *self {
            AdvisorSpec::Random => Box::new(RandomAdvisor::new(env.action_sizes())),
            AdvisorSpec::Maze(g) => Box::new(MazeAdvisor::new(maze()?, g)),
            AdvisorSpec::Adaptive { switch } => Box::new(AdaptiveAdvisor::new(maze()?, switch)),
            AdvisorSpec::DemoScript => {
                let sizes = env.action_sizes();
                let up_left = AdvisorSolution::deterministic(&vec![0; sizes.len()], sizes)?;
                Box::new(ScriptedSequenceAdvisor::new(vec![
                    up_left.clone(),
                    up_left,
                    AdvisorSolution::uniform(sizes),
                ])?)
            }
        })
    }
}

/// Builds the advisors of one run.
pub fn build_panel(
    specs: &[AdvisorSpec],
    env: &dyn Environment,
    layout: Option<&Arc<GridMazeLayout>>,
) -> Result<AdvisorPanel> {
    let advisors = specs
        .iter()
        .map(|s| s.build(env, layout))
        .collect::<Result<Vec<_>>>()?;
    AdvisorPanel::new(advisors, env.n_agents())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTarget {
    /// Joint optimum of an identical-interest game.
    Nash,
    /// Value of every agent following the (single, shared) advisor.
    Advisor,
}

/// Reference values. Present in a `train` config it adds the per-episode
/// `mse_to_oracle` column; `oracle` computes and stores the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub target: OracleTarget,
    #[serde(default)]
    pub settings: OracleConfig,
    /// Episodes between MSE measurements; others are left blank.
    #[serde(default = "one")]
    pub every: usize,
    /// Saved Q-table file to compare against the oracle.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Let `oracle` rerun the configured learner and log its MSE trace.
    #[serde(default)]
    pub track: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineRow {
    pub advisor: String,
    pub cr: f64,
    pub rcr: f64,
    pub mcr: f64,
}

/// Advisor evaluation settings. Runs use the `[ae]` learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    /// Advisors to evaluate; the top-level `advisors` list when empty.
    #[serde(default)]
    pub candidates: Vec<AdvisorSpec>,
    /// Baseline for RCR.
    #[serde(default = "random_advisor")]
    pub random_advisor: AdvisorSpec,
    /// Maximum cumulative reward; derived from the environment when absent.
    #[serde(default)]
    pub mcr: Option<f64>,
    /// Rows computed from given CR/RCR/MCR without running anything.
    #[serde(default)]
    pub offline: Vec<OfflineRow>,
}

fn random_advisor() -> AdvisorSpec {
    AdvisorSpec::Random
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        EvaluationSpec {
            candidates: Vec::new(),
            random_advisor: AdvisorSpec::Random,
            mcr: None,
            offline: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmStage {
    /// Train only with the candidate of highest ε′₀.
    #[default]
    Best,
    /// Train once per candidate, each with its own ε′₀.
    All,
}

/// Pre-learning followed by decision making.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    #[serde(default)]
    pub dm_stage: DmStage,
    /// Decision-making learner (`dm`, `dm-nn` or `dm-ac`); `dm` by default.
    #[serde(default)]
    pub dm_learner: Option<LearnerKind>,
    /// Decision-making episodes; `episodes` when absent.
    #[serde(default)]
    pub dm_episodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    CumulativeReward,
    EpisodeReward,
    MseToOracle,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::CumulativeReward => "cumulative reward",
            Metric::EpisodeReward => "episode reward",
            Metric::MseToOracle => "MSE to oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub label: String,
    /// Metrics files, one per seed. Relative paths are taken from the
    /// experiment file's directory.
    pub csv: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub agent: usize,
    #[serde(default)]
    pub title: Option<String>,
    /// File name inside the output directory.
    #[serde(default = "default_plot_file")]
    pub file: String,
    pub series: Vec<SeriesSpec>,
}

fn default_plot_file() -> String {
    "plot.svg".into()
}

/// What a command needs from the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    EvaluateAdvisor,
    Pipeline,
    Oracle,
    Plot,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                config.format_version
            )));
        }
        Ok(config)
    }

    /// Reads a file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(env) = &mut config.environment {
            env.resolve_paths(base);
        }
        if let Some(plot) = &mut config.plot {
            for s in &mut plot.series {
                for p in &mut s.csv {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
        }
        if let Some(OracleSpec { reference: Some(p), .. }) = &mut config.oracle {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn environment(&self) -> Result<&EnvSpec> {
        self.environment
            .as_ref()
            .ok_or_else(|| Error::Config("missing [environment] section".into()))
    }

    /// The learner named by `kind` with its settings section.
    pub fn learner_spec(&self, kind: LearnerKind) -> Result<LearnerSpec> {
        let missing = |section: &str| Error::Config(format!("learner {kind} needs a [{section}] section"));
        Ok(match kind {
            LearnerKind::Dm => LearnerSpec::Dm(self.dm.clone().ok_or_else(|| missing("dm"))?),
            LearnerKind::Ae => LearnerSpec::Ae(self.ae.clone().ok_or_else(|| missing("ae"))?),
            LearnerKind::DmNn => LearnerSpec::DmNn(self.dm_nn.clone().ok_or_else(|| missing("dm_nn"))?),
            LearnerKind::AeNn => LearnerSpec::AeNn(self.ae_nn.clone().ok_or_else(|| missing("ae_nn"))?),
            LearnerKind::DmAc => LearnerSpec::DmAc(self.dm_ac.clone().ok_or_else(|| missing("dm_ac"))?),
        })
    }

    /// The learner chosen by the top-level `learner` key.
    pub fn main_learner(&self) -> Result<LearnerSpec> {
        let kind = self
            .learner
            .ok_or_else(|| Error::Config("missing 'learner' key".into()))?;
        self.learner_spec(kind)
    }

    pub fn candidates(&self) -> Vec<AdvisorSpec> {
        match &self.evaluation {
            Some(e) if !e.candidates.is_empty() => e.candidates.clone(),
            _ => self.advisors.clone(),
        }
    }

    /// Checks everything `command` will use, so that bad input fails
    /// before any work starts.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("name {:?} must be a non-empty file-name fragment", self.name)));
        }
        if command == Command::Plot {
            let plot = self
                .plot
                .as_ref()
                .ok_or_else(|| Error::Config("plot needs a [plot] section".into()))?;
            if plot.series.is_empty() || plot.series.iter().any(|s| s.csv.is_empty()) {
                return Err(Error::Config("plot.series needs at least one series with csv files".into()));
            }
            return Ok(());
        }
        let offline_only = command == Command::EvaluateAdvisor
            && self.evaluation.as_ref().is_some_and(|e| !e.offline.is_empty())
            && self.candidates().is_empty();
        if offline_only {
            return Ok(());
        }

        let env_spec = self.environment()?;
        let env = env_spec.build()?;
        let layout = env_spec.maze_layout()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        let n = env.n_agents();
        if !(self.advisors.len() <= 1 || self.advisors.len() == n) {
            return Err(Error::Config(format!(
                "advisors lists {} entries; expected 0, 1 or {n}",
                self.advisors.len()
            )));
        }
        for a in self.advisors.iter().chain(&self.candidates()) {
            a.build(env.as_ref(), layout.as_ref())?;
        }

        match command {
            Command::Train => {
                let learner = self.main_learner()?;
                learner.validate()?;
                if let Some(o) = &self.oracle {
                    self.check_oracle(o, &learner, env.as_ref())?;
                }
            }
            Command::EvaluateAdvisor | Command::Pipeline => {
                let ae = self.learner_spec(LearnerKind::Ae)?;
                ae.validate()?;
                let eval = self.evaluation.clone().unwrap_or_default();
                eval.random_advisor.build(env.as_ref(), layout.as_ref())?;
                if self.candidates().is_empty() {
                    return Err(Error::Config("no advisors to evaluate: set advisors or evaluation.candidates".into()));
                }
                if command == Command::Pipeline {
                    let p = self.pipeline.clone().unwrap_or_default();
                    let kind = p.dm_learner.unwrap_or(LearnerKind::Dm);
                    if !matches!(kind, LearnerKind::Dm | LearnerKind::DmNn | LearnerKind::DmAc) {
                        return Err(Error::Config(format!("pipeline.dm_learner must be a decision-making learner, got {kind}")));
                    }
                    self.learner_spec(kind)?.validate()?;
                    if p.dm_episodes == Some(0) {
                        return Err(Error::Config("pipeline.dm_episodes must be positive".into()));
                    }
                }
            }
            Command::Oracle => {
                let o = self
                    .oracle
                    .as_ref()
                    .ok_or_else(|| Error::Config("oracle needs an [oracle] section".into()))?;
                o.settings.validate()?;
                if env.model().is_none() {
                    return Err(Error::Config(format!("environment {} is not enumerable", env.name())));
                }
                if o.target == OracleTarget::Advisor && self.advisors.len() != 1 {
                    return Err(Error::Config("oracle target 'advisor' needs exactly one shared advisor".into()));
                }
                if o.track {
                    let learner = self.main_learner()?;
                    learner.validate()?;
                    self.check_oracle(o, &learner, env.as_ref())?;
                }
            }
            Command::Plot => unreachable!(),
        }
        Ok(())
    }

    fn check_oracle(&self, o: &OracleSpec, learner: &LearnerSpec, env: &dyn Environment) -> Result<()> {
        o.settings.validate()?;
        if !learner.is_tabular() {
            return Err(Error::Config(format!("oracle MSE tracking needs a tabular learner, got {}", learner.kind())));
        }
        if env.model().is_none() {
            return Err(Error::Config(format!("environment {} is not enumerable", env.name())));
        }
        if (o.settings.beta - learner.beta()).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "oracle.settings.beta {} differs from the learner's beta {}",
                o.settings.beta,
                learner.beta()
            )));
        }
        if o.every == 0 {
            return Err(Error::Config("oracle.every must be positive".into()));
        }
        if o.target == OracleTarget::Advisor && self.advisors.len() != 1 {
            return Err(Error::Config("oracle target 'advisor' needs exactly one shared advisor".into()));
        }
        Ok(())
    }
}
