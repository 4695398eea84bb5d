//! Tabular learners and their shared pieces.

mod ae;
mod dm;
mod normalize;
mod persist;
mod schedule;
mod select;
mod update;

pub use ae::{select_action_ae, train_ae, AeConfig, AeTrainer};
pub use dm::{
    copies_coherent, predict_others, select_action_dm, train_dm, DmConfig, DmLearnerState,
    DmTrainer,
};
pub use normalize::{epsilon0_raw, normalize_epsilon0, ROUNDING_SLACK};
pub use persist::{load_tables, save_tables, tables_from_text, tables_to_text, QTABLE_FORMAT_VERSION};
pub use schedule::Schedule;
pub use select::{select_action, ActionSource, Mixture};
pub use update::{ae_update, dm_update, td_update, StepSizes};

use crate::game::JointQTable;

/// What one finished episode looked like.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    /// Undiscounted return per agent.
    pub rewards: Vec<f64>,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub steps: usize,
    /// Largest absolute change to any table entry during the episode.
    pub max_change: f64,
}

/// Per-episode log of a training run plus its final tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOutcome {
    pub episodes: Vec<EpisodeSummary>,
    pub tables: Vec<JointQTable>,
}

impl TrainOutcome {
    pub(crate) fn push(&mut self, s: EpisodeSummary) {
        self.episodes.push(s);
    }

    /// Return of `agent` in every episode.
    pub fn rewards_of(&self, agent: usize) -> Vec<f64> {
        self.episodes.iter().map(|e| e.rewards[agent]).collect()
    }

    /// Sum of `agent`'s returns over all episodes.
    pub fn cumulative_reward(&self, agent: usize) -> f64 {
        self.episodes.iter().map(|e| e.rewards[agent]).sum()
    }
}
