//! Single-entry temporal-difference updates.

use crate::error::{ensure_finite, Error, Result};
use crate::game::{advisor_q, joint_index, AdvisorSolution, JointQTable, StateId};

/// Learning rate and discount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub alpha: f64,
    pub beta: f64,
}

impl StepSizes {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let s = StepSizes { alpha, beta };
        s.validate()?;
        Ok(s)
    }

    /// `alpha` in `[0, 1)` (zero only for frozen runs) and `beta` in `[0, 1)`.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "learning rate must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!(
                "discount must lie in [0, 1), got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha * target`. Returns the new value.
pub fn td_update(
    q: &mut JointQTable,
    state: StateId,
    joint: &[usize],
    target: f64,
    alpha: f64,
) -> Result<f64> {
    ensure_finite(target, "td target")?;
    let idx = joint_index(joint, q.action_sizes())?;
    let cell = &mut q.slice_mut(state)?[idx];
    let updated = (1.0 - alpha) * *cell + alpha * target;
    *cell = ensure_finite(updated, "updated q value")?;
    Ok(updated)
}

/// Decision-making update: bootstraps from the value of the next joint
/// action, `r + beta * Q(s', a')`.
#[allow(clippy::too_many_arguments)]
pub fn dm_update(
    q: &mut JointQTable,
    state: StateId,
    joint: &[usize],
    reward: f64,
    next_state: StateId,
    next_joint: &[usize],
    sizes: StepSizes,
) -> Result<f64> {
    ensure_finite(reward, "reward")?;
    let next = q.get(next_state, next_joint)?;
    td_update(q, state, joint, reward + sizes.beta * next, sizes.alpha)
}

/// Advisor-evaluation update: bootstraps from the expected value of the
/// advisor's solution at the next state, `r + beta * AdvisorQ(s')`.
pub fn ae_update(
    q: &mut JointQTable,
    state: StateId,
    joint: &[usize],
    reward: f64,
    next_solution: &AdvisorSolution,
    next_state: StateId,
    sizes: StepSizes,
) -> Result<f64> {
    ensure_finite(reward, "reward")?;
    next_solution.check_sizes(q.action_sizes())?;
    let next = advisor_q(next_solution, q.slice(next_state)?)?;
    td_update(q, state, joint, reward + sizes.beta * next, sizes.alpha)
}
