//! The five experiment commands. Each validates the whole configuration
//! before doing any work and writes its files under one output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::tabular::{load_tables, normalize_epsilon0, save_tables};

use super::config::{AdvisorSpec, Command, DmStage, ExperimentConfig, LearnerKind, LearnerSpec, Metric, SeriesSpec};
use super::metrics::csv_error;
use super::plot::emit_plot;
use super::run::{compare_tables, compute_oracle, run_seeds, RunPlan, RunResult, Tracking};

/// Files and totals of one seed.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    pub csv: PathBuf,
    pub model_files: Vec<PathBuf>,
    /// Total return per agent.
    pub totals: Vec<f64>,
    pub wall_clock: Duration,
    /// Mean MSE over agents at the first and last measured episode.
    pub mse_first_last: Option<(f64, f64)>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_runs(dir: &Path, label: &str, results: &[RunResult]) -> Result<Vec<RunRecord>> {
    results
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let stem = format!("{label}-seed{}", m.seed);
            let csv = dir.join(format!("{stem}.csv"));
            m.write_csv(&csv)?;
            let model_files = r.model.save(dir, &stem)?;
            let measured: Vec<f64> = m
                .mse
                .iter()
                .flatten()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            Ok(RunRecord {
                label: label.to_string(),
                seed: m.seed,
                csv,
                model_files,
                totals: m.cumulative.last().cloned().unwrap_or_default(),
                wall_clock: m.wall_clock,
                mse_first_last: measured.first().zip(measured.last()).map(|(a, b)| (*a, *b)),
            })
        })
        .collect()
}

fn series(label: &str, records: &[RunRecord]) -> SeriesSpec {
    SeriesSpec {
        label: label.to_string(),
        csv: records.iter().map(|r| r.csv.clone()).collect(),
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Return over the whole run averaged over agents and then seeds.
fn mean_total(results: &[RunResult]) -> f64 {
    mean(results.iter().map(|r| r.metrics.mean_total()))
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub runs: Vec<RunRecord>,
    pub oracle: Option<String>,
}

pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> Result<TrainReport> {
    config.validate_for(Command::Train)?;
    create_dir(out)?;
    let env = config.environment()?.clone();
    let (tracking, oracle) = match &config.oracle {
        Some(spec) => {
            let o = compute_oracle(&env, spec, &config.advisors)?;
            let tracking = Tracking {
                tables: Arc::new(o.tables),
                every: spec.every,
            };
            (Some(tracking), Some(o.description))
        }
        None => (None, None),
    };
    let plan = RunPlan {
        env,
        learner: config.main_learner()?,
        advisors: config.advisors.clone(),
        episodes: config.episodes,
        tracking,
    };
    let results = run_seeds(&plan, &config.seeds)?;
    let runs = write_runs(out, &config.name, &results)?;
    Ok(TrainReport { runs, oracle })
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRow {
    pub advisor: String,
    /// `None` for rows given offline.
    pub spec: Option<AdvisorSpec>,
    pub cr: f64,
    pub rcr: f64,
    pub mcr: f64,
    pub epsilon0: f64,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub rows: Vec<EvaluationRow>,
    pub report: PathBuf,
    pub runs: Vec<RunRecord>,
}

impl EvaluationReport {
    /// Evaluated (not offline) row with the highest ε′₀; ties go to the
    /// higher CR, then to the earlier row.
    pub fn best(&self) -> Option<&EvaluationRow> {
        self.rows.iter().filter(|r| r.spec.is_some()).fold(None, |best: Option<&EvaluationRow>, r| match best {
            Some(b) if (b.epsilon0, b.cr) >= (r.epsilon0, r.cr) => Some(b),
            _ => Some(r),
        })
    }
}

/// Maximum cumulative reward when every agent still takes a random action
/// with probability `eta`: the best episode return on the greedy share of
/// episodes, the random baseline's share on the rest.
pub fn exploration_adjusted_mcr(max_episode_return: f64, episodes: usize, eta: f64, rcr: f64) -> f64 {
    (1.0 - eta) * max_episode_return * episodes as f64 + eta * rcr
}

pub fn cmd_evaluate_advisor(config: &ExperimentConfig, out: &Path) -> Result<EvaluationReport> {
    config.validate_for(Command::EvaluateAdvisor)?;
    create_dir(out)?;
    let eval = config.evaluation.clone().unwrap_or_default();
    let mut rows = Vec::new();
    let mut runs = Vec::new();

    let candidates = config.candidates();
    if !candidates.is_empty() {
        let env = config.environment()?.clone();
        let learner = config.learner_spec(LearnerKind::Ae)?;
        let LearnerSpec::Ae(ae) = &learner else { unreachable!() };
        let dir = out.join("evaluation");
        create_dir(&dir)?;
        let plan = |advisor: AdvisorSpec| RunPlan {
            env: env.clone(),
            learner: learner.clone(),
            advisors: vec![advisor],
            episodes: config.episodes,
            tracking: None,
        };

        let baseline = run_seeds(&plan(eval.random_advisor), &config.seeds)?;
        let rcr = mean_total(&baseline);
        let baseline_label = format!("baseline-{}", eval.random_advisor);
        let baseline_runs = write_runs(&dir, &baseline_label, &baseline)?;
        let mcr = match eval.mcr {
            Some(m) => m,
            None => {
                let max = env.build()?.max_episode_return();
                exploration_adjusted_mcr(max, config.episodes, ae.eta, rcr)
            }
        };
        let mut plot_series = Vec::new();
        for c in &candidates {
            let results = run_seeds(&plan(*c), &config.seeds)?;
            let cr = mean_total(&results);
            let recs = write_runs(&dir, &c.to_string(), &results)?;
            plot_series.push(series(&c.to_string(), &recs));
            runs.extend(recs);
            rows.push(EvaluationRow {
                advisor: c.to_string(),
                spec: Some(*c),
                cr,
                rcr,
                mcr,
                epsilon0: normalize_epsilon0(cr, rcr, mcr)?,
            });
        }
        plot_series.push(series(&baseline_label, &baseline_runs));
        runs.extend(baseline_runs);
        emit_plot(
            &plot_series,
            Metric::CumulativeReward,
            0,
            &format!("{}: advisor evaluation", config.name),
            &out.join("evaluation.svg"),
        )?;
    }
    for o in &eval.offline {
        rows.push(EvaluationRow {
            advisor: o.advisor.clone(),
            spec: None,
            cr: o.cr,
            rcr: o.rcr,
            mcr: o.mcr,
            epsilon0: normalize_epsilon0(o.cr, o.rcr, o.mcr)?,
        });
    }

    let report = out.join("evaluation.csv");
    let mut w = csv::Writer::from_path(&report).map_err(|e| csv_error(&report, e))?;
    let write_err = |e: csv::Error| csv_error(&report, e);
    w.write_record(["advisor", "cr", "rcr", "mcr", "epsilon0"]).map_err(write_err)?;
    for r in &rows {
        w.write_record([
            r.advisor.clone(),
            r.cr.to_string(),
            r.rcr.to_string(),
            r.mcr.to_string(),
            r.epsilon0.to_string(),
        ])
        .map_err(write_err)?;
    }
    w.flush().map_err(|e| Error::io(&report, e))?;
    Ok(EvaluationReport { rows, report, runs })
}

/// One decision-making stage of the pipeline.
#[derive(Debug, Clone)]
pub struct DmStageReport {
    pub advisor: AdvisorSpec,
    pub epsilon0: f64,
    /// Starting value actually used, after keeping ε + ε′ ≤ 1.
    pub epsilon_prime_start: f64,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub evaluation: EvaluationReport,
    pub stages: Vec<DmStageReport>,
    pub report: PathBuf,
}

fn epsilon_prime_start(l: &LearnerSpec) -> f64 {
    match l {
        LearnerSpec::Dm(c) => c.epsilon_prime.start,
        LearnerSpec::DmNn(c) => c.epsilon_prime.start,
        LearnerSpec::DmAc(c) => c.epsilon_prime.start,
        _ => 0.0,
    }
}

pub fn cmd_pipeline(config: &ExperimentConfig, out: &Path) -> Result<PipelineReport> {
    config.validate_for(Command::Pipeline)?;
    let evaluation = cmd_evaluate_advisor(config, out)?;
    let p = config.pipeline.clone().unwrap_or_default();
    let kind = p.dm_learner.unwrap_or(LearnerKind::Dm);
    let base = config.learner_spec(kind)?;
    let chosen: Vec<EvaluationRow> = match p.dm_stage {
        DmStage::Best => evaluation.best().cloned().into_iter().collect(),
        DmStage::All => evaluation.rows.iter().filter(|r| r.spec.is_some()).cloned().collect(),
    };
    let dir = out.join("decision");
    create_dir(&dir)?;
    let mut stages = Vec::new();
    let mut plot_series = Vec::new();
    for row in chosen {
        let advisor = row.spec.expect("only evaluated rows are chosen");
        let learner = base.with_epsilon_prime_start(row.epsilon0)?;
        let start = epsilon_prime_start(&learner);
        let plan = RunPlan {
            env: config.environment()?.clone(),
            learner,
            advisors: vec![advisor],
            episodes: p.dm_episodes.unwrap_or(config.episodes),
            tracking: None,
        };
        let results = run_seeds(&plan, &config.seeds)?;
        let label = format!("{kind}-{advisor}");
        let runs = write_runs(&dir, &label, &results)?;
        plot_series.push(series(&format!("{advisor} (ε′₀ = {})", row.epsilon0), &runs));
        stages.push(DmStageReport {
            advisor,
            epsilon0: row.epsilon0,
            epsilon_prime_start: start,
            runs,
        });
    }
    emit_plot(
        &plot_series,
        Metric::CumulativeReward,
        0,
        &format!("{}: decision making", config.name),
        &out.join("decision.svg"),
    )?;

    let report = out.join("pipeline.csv");
    let mut text = String::from("advisor,epsilon0,epsilon_prime_start,learner,episodes,mean_total_reward\n");
    for s in &stages {
        let totals = s.runs.iter().map(|r| r.totals.iter().sum::<f64>() / r.totals.len().max(1) as f64);
        let _ = writeln!(
            text,
            "{},{},{},{kind},{},{}",
            s.advisor,
            s.epsilon0,
            s.epsilon_prime_start,
            p.dm_episodes.unwrap_or(config.episodes),
            mean(totals)
        );
    }
    std::fs::write(&report, text).map_err(|e| Error::io(&report, e))?;
    Ok(PipelineReport {
        evaluation,
        stages,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub description: String,
    pub residual: Option<f64>,
    pub tables: PathBuf,
    /// Mean MSE of the reference file against the oracle.
    pub reference_mse: Option<f64>,
    pub tracked: Vec<RunRecord>,
}

pub fn cmd_oracle(config: &ExperimentConfig, out: &Path) -> Result<OracleReport> {
    config.validate_for(Command::Oracle)?;
    create_dir(out)?;
    let spec = config.oracle.as_ref().expect("validated");
    let env = config.environment()?;
    let oracle = compute_oracle(env, spec, &config.advisors)?;
    let tables = out.join(format!("{}-oracle.qtable", config.name));
    save_tables(&oracle.tables, &tables)?;

    let reference_mse = match &spec.reference {
        Some(p) => Some(compare_tables(&load_tables(p)?, &oracle.tables)?),
        None => None,
    };
    let mut tracked = Vec::new();
    if spec.track {
        let plan = RunPlan {
            env: env.clone(),
            learner: config.main_learner()?,
            advisors: config.advisors.clone(),
            episodes: config.episodes,
            tracking: Some(Tracking {
                tables: Arc::new(oracle.tables.clone()),
                every: spec.every,
            }),
        };
        let results = run_seeds(&plan, &config.seeds)?;
        tracked = write_runs(out, &config.name, &results)?;
        emit_plot(
            &[series(&config.name, &tracked)],
            Metric::MseToOracle,
            0,
            &format!("{}: MSE to oracle", config.name),
            &out.join(format!("{}-mse.svg", config.name)),
        )?;
    }
    Ok(OracleReport {
        description: oracle.description,
        residual: oracle.residual,
        tables,
        reference_mse,
        tracked,
    })
}

pub fn cmd_plot(config: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    config.validate_for(Command::Plot)?;
    create_dir(out)?;
    let plot = config.plot.as_ref().expect("validated");
    let path = out.join(&plot.file);
    let title = plot.title.clone().unwrap_or_else(|| config.name.clone());
    emit_plot(&plot.series, plot.metric, plot.agent, &title, &path)?;
    Ok(path)
}
