//! The three-way behaviour mixture shared by every learner: follow the
//! advisor, act at random, or act greedily.

use rand::Rng;

use crate::error::{Error, Result};

/// Probabilities of the advisor and random branches; the greedy branch takes
/// the remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture {
    pub advisor: f64,
    pub random: f64,
}

/// Which branch produced an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionSource {
    Advisor,
    Random,
    Greedy,
}

impl Mixture {
    pub fn new(advisor: f64, random: f64) -> Result<Self> {
        let m = Mixture { advisor, random };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.advisor) || !(0.0..=1.0).contains(&self.random) {
            return Err(Error::Config(format!(
                "mixture probabilities must lie in [0, 1], got advisor {} random {}",
                self.advisor, self.random
            )));
        }
        if self.advisor + self.random > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "advisor ({}) and random ({}) probabilities sum above 1",
                self.advisor, self.random
            )));
        }
        Ok(())
    }

    pub fn greedy(&self) -> f64 {
        (1.0 - self.advisor - self.random).max(0.0)
    }

    /// One uniform draw split at the cumulative thresholds
    /// `[0, advisor)`, `[advisor, advisor + random)`, `[advisor + random, 1)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionSource {
        let u: f64 = rng.gen();
        if u < self.advisor {
            ActionSource::Advisor
        } else if u < self.advisor + self.random {
            ActionSource::Random
        } else {
            ActionSource::Greedy
        }
    }
}

/// Resolves one mixture draw into an action. The closures are only invoked
/// for the branch that was drawn.
pub fn select_action<R, G, A>(
    mixture: Mixture,
    n_actions: usize,
    rng: &mut R,
    advisor: A,
    greedy: G,
) -> Result<(usize, ActionSource)>
where
    R: Rng + ?Sized,
    A: FnOnce(&mut R) -> Result<usize>,
    G: FnOnce(&mut R) -> Result<usize>,
{
    let source = mixture.draw(rng);
    let action = match source {
        ActionSource::Advisor => advisor(rng)?,
        ActionSource::Random => rng.gen_range(0..n_actions),
        ActionSource::Greedy => greedy(rng)?,
    };
    Ok((action, source))
}
