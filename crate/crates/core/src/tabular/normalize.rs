//! Turning an advisor evaluation into the initial advisor-following
//! probability for decision making.

use crate::error::{Error, Result};

/// Evaluations within this distance above a lower tenth stay on that tenth.
/// The cumulative rewards fed in are themselves rounded averages, so a raw
/// ratio a hair above a tenth carries no real signal.
pub const ROUNDING_SLACK: f64 = 0.005;

/// `(cr - rcr) / (mcr - rcr)` clamped to `[0, 1]`.
pub fn epsilon0_raw(cr: f64, rcr: f64, mcr: f64) -> Result<f64> {
    if !(cr.is_finite() && rcr.is_finite() && mcr.is_finite()) {
        return Err(Error::NonFinite("cumulative reward"));
    }
    if mcr <= rcr {
        return Err(Error::DegenerateBaseline { rcr, mcr });
    }
    Ok(((cr - rcr) / (mcr - rcr)).clamp(0.0, 1.0))
}

/// Normalised advisor score rounded up to the next tenth.
///
/// `cr` is the cumulative reward of advisor evaluation with the candidate
/// advisor, `rcr` the same with a random advisor and `mcr` the best
/// achievable cumulative reward. The result is always one of
/// `0.0, 0.1, ..., 1.0`.
pub fn normalize_epsilon0(cr: f64, rcr: f64, mcr: f64) -> Result<f64> {
    let raw = epsilon0_raw(cr, rcr, mcr)?;
    let tenths = ((raw - ROUNDING_SLACK) * 10.0).ceil().clamp(0.0, 10.0);
    // `ceil` of a small negative number is -0.0; adding 0.0 clears the sign.
    Ok(tenths / 10.0 + 0.0)
}
