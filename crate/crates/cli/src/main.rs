//! `admiral` command-line driver.
//!
//! ```text
//! admiral train|evaluate-advisor|pipeline|oracle|plot --config <file> [--out <dir>] [--seeds a,b,c]
//! ```
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admiral::harness::{
    cmd_evaluate_advisor, cmd_oracle, cmd_pipeline, cmd_plot, cmd_train, EvaluationReport,
    ExperimentConfig, RunRecord,
};
use admiral::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "admiral", version, about = "Advisor-guided multi-agent Q-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the configured learner, one metrics CSV and one model per seed.
    Train(Common),
    /// Pre-learning run per candidate advisor; reports CR, RCR, MCR and ε′₀.
    EvaluateAdvisor(Common),
    /// Advisor evaluation followed by decision-making training with the derived ε′₀.
    Pipeline(Common),
    /// Compute oracle Q-tables and optionally compare or track runs against them.
    Oracle(Common),
    /// Draw the series listed under `[plot]` into an SVG file.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory. Defaults to the file's `out`, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds replacing the file's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seeds) = &self.seeds {
            config.seeds = seeds.clone();
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| Path::new("out").join(&config.name));
        Ok((config, out))
    }
}

fn print_runs(runs: &[RunRecord]) {
    for r in runs {
        let mean = r.totals.iter().sum::<f64>() / r.totals.len().max(1) as f64;
        print!(
            "{} seed {}: total reward {mean:.4} ({:.2?}) -> {}",
            r.label,
            r.seed,
            r.wall_clock,
            r.csv.display()
        );
        if let Some((first, last)) = r.mse_first_last {
            print!("  mse {first:.6e} -> {last:.6e}");
        }
        println!();
    }
}

fn print_evaluation(e: &EvaluationReport) {
    println!("{:<16} {:>14} {:>14} {:>14} {:>6}", "advisor", "CR", "RCR", "MCR", "ε′₀");
    for r in &e.rows {
        println!(
            "{:<16} {:>14.2} {:>14.2} {:>14.2} {:>6.1}",
            r.advisor, r.cr, r.rcr, r.mcr, r.epsilon0
        );
    }
    println!("report: {}", e.report.display());
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Cmd::Train(c) => {
            let (config, out) = c.load()?;
            let report = cmd_train(&config, &out)?;
            if let Some(o) = &report.oracle {
                println!("oracle: {o}");
            }
            print_runs(&report.runs);
        }
        Cmd::EvaluateAdvisor(c) => {
            let (config, out) = c.load()?;
            print_evaluation(&cmd_evaluate_advisor(&config, &out)?);
        }
        Cmd::Pipeline(c) => {
            let (config, out) = c.load()?;
            let report = cmd_pipeline(&config, &out)?;
            print_evaluation(&report.evaluation);
            for s in &report.stages {
                println!(
                    "decision stage with {}: ε′₀ = {}, ε′ starts at {}",
                    s.advisor, s.epsilon0, s.epsilon_prime_start
                );
                print_runs(&s.runs);
            }
            println!("report: {}", report.report.display());
        }
        Cmd::Oracle(c) => {
            let (config, out) = c.load()?;
            let report = cmd_oracle(&config, &out)?;
            println!("oracle: {}", report.description);
            if let Some(r) = report.residual {
                println!("bellman residual: {r:.3e}");
            }
            println!("tables: {}", report.tables.display());
            if let Some(m) = report.reference_mse {
                println!("reference mse: {m:.6e}");
            }
            print_runs(&report.tracked);
        }
        Cmd::Plot(c) => {
            let (config, out) = c.load()?;
            println!("{}", cmd_plot(&config, &out)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("admiral: {e}");
            ExitCode::from(if e.is_invalid_input() { 2 } else { 1 })
        }
    }
}
