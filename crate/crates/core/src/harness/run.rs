//! One training run per seed, and the oracle tables runs are measured
//! against.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::game::JointQTable;
use crate::neural::{save_mlp, AcAgent, AcTrainer, Mlp, NeuralAeTrainer, NeuralDmTrainer};
use crate::oracle::{advisor_value_q, bellman_residual, mean_mse, mse, nash_q_identical_interest, ValueSource};
use crate::par;
use crate::rng::RunRngs;
use crate::tabular::{save_tables, AeTrainer, DmTrainer, EpisodeSummary};

use super::config::{build_panel, AdvisorSpec, EnvSpec, LearnerSpec, OracleSpec, OracleTarget};
use super::metrics::RunMetrics;

/// Oracle tables plus how often to measure the distance to them.
#[derive(Debug, Clone)]
pub struct Tracking {
    pub tables: Arc<Vec<JointQTable>>,
    pub every: usize,
}

/// Everything one seed of a run needs.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub env: EnvSpec,
    pub learner: LearnerSpec,
    pub advisors: Vec<AdvisorSpec>,
    pub episodes: usize,
    pub tracking: Option<Tracking>,
}

/// What training leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Tables(Vec<JointQTable>),
    QNets(Vec<Mlp>),
    ActorCritic(Vec<AcAgent>),
}

impl Model {
    /// Writes the model next to `stem` and returns the files written:
    /// `<stem>.qtable` for tables, `<stem>.agent<j>.mlp` for Q-networks and
    /// `<stem>.agent<j>.{actor,critic}.mlp` for actor-critic.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        match self {
            Model::Tables(t) => {
                let p = dir.join(format!("{stem}.qtable"));
                save_tables(t, &p)?;
                files.push(p);
            }
            Model::QNets(nets) => {
                for (j, net) in nets.iter().enumerate() {
                    let p = dir.join(format!("{stem}.agent{j}.mlp"));
                    save_mlp(net, &p)?;
                    files.push(p);
                }
            }
            Model::ActorCritic(agents) => {
                for (j, a) in agents.iter().enumerate() {
                    for (part, net) in [("actor", &a.actor), ("critic", &a.critic)] {
                        let p = dir.join(format!("{stem}.agent{j}.{part}.mlp"));
                        save_mlp(net, &p)?;
                        files.push(p);
                    }
                }
            }
        }
        Ok(files)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub model: Model,
}

fn measure(tracking: &Option<Tracking>, episode: usize, last: bool, tables: &[&JointQTable]) -> Result<Option<Vec<f64>>> {
    let Some(t) = tracking else {
        return Ok(None);
    };
    if episode % t.every != 0 && !last {
        return Ok(None);
    }
    tables
        .iter()
        .zip(t.tables.iter())
        .map(|(a, b)| mse(a, b))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

pub fn run_seed(plan: &RunPlan, seed: u64) -> Result<RunResult> {
    let started = Instant::now();
    let mut env = plan.env.build()?;
    let layout = plan.env.maze_layout()?;
    let panel = build_panel(&plan.advisors, env.as_ref(), layout.as_ref())?;
    let mut rngs = RunRngs::from_seed(seed);
    let mut metrics = RunMetrics::new(seed);
    let last = plan.episodes.saturating_sub(1);
    if plan.tracking.is_some() && !plan.learner.is_tabular() {
        return Err(Error::Config("oracle tracking needs a tabular learner".into()));
    }

    let model = match &plan.learner {
        LearnerSpec::Dm(c) => {
            let mut t = DmTrainer::new(env.as_mut(), panel, c.clone())?;
            let out = t.run(plan.episodes, &mut rngs, |s, learners| {
                let own: Vec<&JointQTable> = learners.iter().enumerate().map(|(j, l)| l.table_of(j)).collect();
                let m = measure(&plan.tracking, s.episode, s.episode == last, &own)?;
                metrics.push(s, m);
                Ok(())
            })?;
            Model::Tables(out.tables)
        }
        LearnerSpec::Ae(c) => {
            let mut t = AeTrainer::new(env.as_mut(), panel, c.clone())?;
            let out = t.run(plan.episodes, &mut rngs, |s, tables| {
                let own: Vec<&JointQTable> = tables.iter().collect();
                let m = measure(&plan.tracking, s.episode, s.episode == last, &own)?;
                metrics.push(s, m);
                Ok(())
            })?;
            Model::Tables(out.tables)
        }
        LearnerSpec::DmNn(c) => {
            let mut t = NeuralDmTrainer::new(env.as_mut(), panel, c.clone(), &mut rngs)?;
            let out = t.run(plan.episodes, &mut rngs, |s: &EpisodeSummary| {
                metrics.push(s, None);
                Ok(())
            })?;
            Model::QNets(out.nets)
        }
        LearnerSpec::AeNn(c) => {
            let mut t = NeuralAeTrainer::new(env.as_mut(), panel, c.clone(), &mut rngs)?;
            let out = t.run(plan.episodes, &mut rngs, |s: &EpisodeSummary| {
                metrics.push(s, None);
                Ok(())
            })?;
            Model::QNets(out.nets)
        }
        LearnerSpec::DmAc(c) => {
            let mut t = AcTrainer::new(env.as_mut(), panel, c.clone(), &mut rngs)?;
            let out = t.run(plan.episodes, &mut rngs, |s: &EpisodeSummary| {
                metrics.push(s, None);
                Ok(())
            })?;
            Model::ActorCritic(out.agents)
        }
    };
    metrics.wall_clock = started.elapsed();
    Ok(RunResult { metrics, model })
}

/// Runs every seed, in parallel when the `parallel` feature is on. Results
/// keep the order of `seeds`; the first failure is returned.
pub fn run_seeds(plan: &RunPlan, seeds: &[u64]) -> Result<Vec<RunResult>> {
    par::map(seeds.to_vec(), |s| run_seed(plan, s)).into_iter().collect()
}

/// Oracle tables with a short description of how they were obtained.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub tables: Vec<JointQTable>,
    /// Largest Bellman optimality residual (joint optimum only).
    pub residual: Option<f64>,
    pub description: String,
}

pub fn compute_oracle(env_spec: &EnvSpec, spec: &OracleSpec, advisors: &[AdvisorSpec]) -> Result<OracleResult> {
    spec.settings.validate()?;
    let env = env_spec.build()?;
    let model = env
        .model()
        .ok_or_else(|| Error::Config(format!("environment {} is not enumerable", env.name())))?;
    match spec.target {
        OracleTarget::Nash => {
            let tables = nash_q_identical_interest(model, spec.settings.beta, spec.settings.tolerance)?;
            let residual = bellman_residual(model, &tables[0], spec.settings.beta)?;
            Ok(OracleResult {
                description: format!(
                    "joint optimum, beta {}, tolerance {:e}, Bellman residual {residual:e}",
                    spec.settings.beta, spec.settings.tolerance
                ),
                tables,
                residual: Some(residual),
            })
        }
        OracleTarget::Advisor => {
            let [advisor] = advisors else {
                return Err(Error::Config("oracle target 'advisor' needs exactly one shared advisor".into()));
            };
            let layout = env_spec.maze_layout()?;
            let a = advisor.build(env.as_ref(), layout.as_ref())?;
            let v = advisor_value_q(model, a.as_ref(), &spec.settings)?;
            let how = match v.source {
                ValueSource::Exact => "exact expectation".to_string(),
                ValueSource::Rollout { count } => format!("{count} rollouts per cell"),
            };
            Ok(OracleResult {
                description: format!(
                    "value of advisor {advisor}, beta {}, horizon {}, {how}, truncation bound {:e}",
                    spec.settings.beta, v.horizon, v.truncation_bound
                ),
                tables: v.tables,
                residual: None,
            })
        }
    }
}

/// Mean over agents of the MSE between saved tables and oracle tables;
/// shape mismatches are configuration errors.
pub fn compare_tables(saved: &[JointQTable], oracle: &[JointQTable]) -> Result<f64> {
    if saved.len() != oracle.len() || saved.iter().zip(oracle).any(|(a, b)| !a.same_shape(b)) {
        return Err(Error::Config(
            "reference tables do not match the environment's states and joint actions".into(),
        ));
    }
    mean_mse(saved, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{DemoSpec, MazeSpec};
    use crate::neural::{AcConfig, NetConfig, NeuralDmConfig};
    use crate::oracle::OracleConfig;
    use crate::tabular::{AeConfig, DmConfig, Schedule};

    fn dm() -> DmConfig {
        DmConfig {
            alpha: 0.1,
            beta: 0.9,
            epsilon: Schedule::new(0.1, 0.0, 50).unwrap(),
            epsilon_prime: Schedule::new(0.5, 0.0, 50).unwrap(),
            q_init: 0.0,
            early_stop: None,
            exploring_starts: false,
        }
    }

    fn maze() -> EnvSpec {
        EnvSpec::GridMaze(MazeSpec::default())
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let plan = RunPlan {
            env: maze(),
            learner: LearnerSpec::Dm(dm()),
            advisors: vec!["grade1".parse().unwrap()],
            episodes: 30,
            tracking: None,
        };
        let a = run_seeds(&plan, &[1, 2]).unwrap();
        let b = run_seed(&plan, 1).unwrap();
        assert_eq!(a[0].metrics.rewards, b.metrics.rewards);
        assert_eq!(a[0].model, b.model);
        assert_ne!(a[0].metrics.rewards, a[1].metrics.rewards);
    }

    #[test]
    fn tracking_fills_the_mse_column() {
        let spec = OracleSpec {
            target: OracleTarget::Nash,
            settings: OracleConfig::default(),
            every: 5,
            reference: None,
            track: false,
        };
        let oracle = compute_oracle(&maze(), &spec, &[]).unwrap();
        assert!(oracle.residual.unwrap() < 1e-9);
        let plan = RunPlan {
            env: maze(),
            learner: LearnerSpec::Dm(dm()),
            advisors: vec!["grade1".parse().unwrap()],
            episodes: 12,
            tracking: Some(Tracking {
                tables: Arc::new(oracle.tables),
                every: 5,
            }),
        };
        let r = run_seed(&plan, 0).unwrap();
        let measured: Vec<usize> = (0..12).filter(|&e| r.metrics.mse[e].is_some()).collect();
        assert_eq!(measured, vec![0, 5, 10, 11]);
    }

    #[test]
    fn every_learner_runs_and_saves() {
        let demo = EnvSpec::SingleStateDemo(DemoSpec {
            step_cap: 4,
            other_reward: 0.0,
        });
        let net = NetConfig {
            hidden: vec![4],
            batch_size: 2,
            buffer_capacity: 50,
            ..NetConfig::default()
        };
        let learners = vec![
            LearnerSpec::Dm(dm()),
            LearnerSpec::Ae(AeConfig {
                alpha: 0.5,
                beta: 0.9,
                eta: 0.1,
                eta_prime: 0.5,
                q_init: 0.0,
            }),
            LearnerSpec::DmNn(NeuralDmConfig {
                beta: 0.9,
                epsilon: Schedule::constant(0.1),
                epsilon_prime: Schedule::constant(0.5),
                net: net.clone(),
            }),
            LearnerSpec::AeNn(crate::neural::NeuralAeConfig {
                beta: 0.9,
                eta: 0.1,
                eta_prime: 0.5,
                net,
            }),
            LearnerSpec::DmAc(AcConfig {
                beta: 0.9,
                epsilon_prime: Schedule::constant(0.5),
                hidden: vec![4],
                critic_lr: 1e-3,
                actor_lr: 1e-3,
                actor_loss: Default::default(),
                divergence_limit: 1e6,
            }),
        ];
        let dir = tempfile::tempdir().unwrap();
        for (i, learner) in learners.into_iter().enumerate() {
            let plan = RunPlan {
                env: demo.clone(),
                learner,
                advisors: vec!["demo_script".parse().unwrap()],
                episodes: 5,
                tracking: None,
            };
            let r = run_seed(&plan, 3).unwrap();
            assert_eq!(r.metrics.episodes(), 5);
            let files = r.model.save(dir.path(), &format!("m{i}")).unwrap();
            assert!(!files.is_empty() && files.iter().all(|f| f.exists()));
        }
    }

    #[test]
    fn mismatched_reference_is_a_config_error() {
        let a = vec![JointQTable::zeros(0, 3, &[2, 2])];
        let b = vec![JointQTable::zeros(0, 4, &[2, 2])];
        assert!(compare_tables(&a, &b).unwrap_err().is_invalid_input());
        assert_eq!(compare_tables(&a, &a).unwrap(), 0.0);
    }
}
