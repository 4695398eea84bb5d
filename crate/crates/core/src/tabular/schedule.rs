use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear decay from `start` to `end` over `horizon` episodes, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    /// Episodes until `end` is reached. Zero means `end` from the outset.
    pub horizon: usize,
}

impl Schedule {
    pub fn new(start: f64, end: f64, horizon: usize) -> Result<Self> {
        let s = Schedule {
            start,
            end,
            horizon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64) -> Self {
        Schedule {
            start: value,
            end: value,
            horizon: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.end)
            || !(0.0..=1.0).contains(&self.start)
            || self.end > self.start
        {
            return Err(Error::Config(format!(
                "schedule needs 0 <= end <= start <= 1, got start {} end {}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn value(&self, episode: usize) -> f64 {
        if self.horizon == 0 || episode >= self.horizon {
            return self.end;
        }
        let frac = episode as f64 / self.horizon as f64;
        self.start - (self.start - self.end) * frac
    }

    /// A copy with a different starting value, keeping `end` no larger.
    pub fn with_start(&self, start: f64) -> Self {
        Schedule {
            start,
            end: self.end.min(start),
            horizon: self.horizon,
        }
    }
}

/// Largest `a(e) + b(e)` over all episodes for two linear schedules.
/// Both are piecewise linear with breaks at their horizons, so checking the
/// breakpoints suffices.
pub(crate) fn max_sum(a: &Schedule, b: &Schedule) -> f64 {
    [0, a.horizon, b.horizon]
        .iter()
        .map(|&e| a.value(e) + b.value(e))
        .fold(f64::NEG_INFINITY, f64::max)
}
