//! Per-run metrics and their CSV form.
//!
//! Columns, one row per (episode, agent):
//! `episode, seed, agent, episode_reward, cumulative_reward, epsilon,
//! epsilon_prime, mse_to_oracle`. The last column is empty when no oracle
//! was tracked for that episode.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::EpisodeSummary;

pub const CSV_HEADER: [&str; 8] = [
    "episode",
    "seed",
    "agent",
    "episode_reward",
    "cumulative_reward",
    "epsilon",
    "epsilon_prime",
    "mse_to_oracle",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub episode: usize,
    pub seed: u64,
    pub agent: usize,
    pub episode_reward: f64,
    pub cumulative_reward: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub mse_to_oracle: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    /// `rewards[e][j]`: return of agent `j` in episode `e`.
    pub rewards: Vec<Vec<f64>>,
    /// Running sums of `rewards`, per agent.
    pub cumulative: Vec<Vec<f64>>,
    pub epsilon: Vec<f64>,
    pub epsilon_prime: Vec<f64>,
    /// Per-agent MSE to the oracle, for the episodes where it was measured.
    pub mse: Vec<Option<Vec<f64>>>,
    pub wall_clock: Duration,
}

impl RunMetrics {
    pub fn new(seed: u64) -> Self {
        RunMetrics {
            seed,
            ..Default::default()
        }
    }

    pub fn push(&mut self, s: &EpisodeSummary, mse: Option<Vec<f64>>) {
        let cumulative = match self.cumulative.last() {
            Some(prev) => prev.iter().zip(&s.rewards).map(|(c, r)| c + r).collect(),
            None => s.rewards.clone(),
        };
        self.rewards.push(s.rewards.clone());
        self.cumulative.push(cumulative);
        self.epsilon.push(s.epsilon);
        self.epsilon_prime.push(s.epsilon_prime);
        self.mse.push(mse);
    }

    pub fn episodes(&self) -> usize {
        self.rewards.len()
    }

    /// Total return of `agent` over the run.
    pub fn total(&self, agent: usize) -> f64 {
        self.cumulative.last().map_or(0.0, |c| c[agent])
    }

    /// Total return averaged over agents.
    pub fn mean_total(&self) -> f64 {
        match self.cumulative.last() {
            Some(c) if !c.is_empty() => c.iter().sum::<f64>() / c.len() as f64,
            _ => 0.0,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = CsvRow> + '_ {
        (0..self.episodes()).flat_map(move |e| {
            (0..self.rewards[e].len()).map(move |j| CsvRow {
                episode: e,
                seed: self.seed,
                agent: j,
                episode_reward: self.rewards[e][j],
                cumulative_reward: self.cumulative[e][j],
                epsilon: self.epsilon[e],
                epsilon_prime: self.epsilon_prime[e],
                mse_to_oracle: self.mse[e].as_ref().map(|m| m[j]),
            })
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for row in self.rows() {
            w.serialize(row).map_err(|e| csv_error(path, e))?;
        }
        if self.episodes() == 0 {
            w.write_record(CSV_HEADER).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected header; expected {}", CSV_HEADER.join(",")),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(e: usize, r: [f64; 2]) -> EpisodeSummary {
        EpisodeSummary {
            episode: e,
            rewards: r.to_vec(),
            epsilon: 0.1,
            epsilon_prime: 0.2,
            steps: 3,
            max_change: 0.0,
        }
    }

    #[test]
    fn cumulative_is_the_prefix_sum() {
        let mut m = RunMetrics::new(7);
        let rs = [[1.0, -1.0], [0.5, 2.0], [-0.25, 0.0]];
        for (e, r) in rs.iter().enumerate() {
            m.push(&summary(e, *r), None);
        }
        for j in 0..2 {
            let mut acc = 0.0;
            for (e, r) in rs.iter().enumerate() {
                acc += r[j];
                assert_eq!(m.cumulative[e][j], acc);
            }
        }
        assert_eq!(m.total(1), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let mut m = RunMetrics::new(3);
        m.push(&summary(0, [1.0, 2.0]), Some(vec![0.5, 0.25]));
        m.push(&summary(1, [0.1, 0.2]), None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")), "{text}");
        assert!(text.lines().nth(3).unwrap().ends_with(','), "{text}");
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows, m.rows().collect::<Vec<_>>());
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { .. })));
    }
}
