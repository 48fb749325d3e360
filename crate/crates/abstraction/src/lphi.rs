use crate::error::{Error, Result};

fn check_constants(l_pi: f64, l_v: f64, rmax: f64) -> Result<()> {
    for (name, v) in [("policy constant", l_pi), ("value constant", l_v), ("rmax", rmax)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    Ok(())
}

/// Worst-case value loss per unit of class radius when a stable policy is
/// collapsed onto belief classes and re-run through the true filter, for the
/// discounted criterion.
pub fn compute_lphi1(l_pi: f64, l_v: f64, rmax: f64, gamma: f64) -> Result<f64> {
    check_constants(l_pi, l_v, rmax)?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Core(pomdp_core::Error::BadDiscount {
            gamma: Some(gamma),
            horizon: None,
        }));
    }
    let horizon_factor = 1.0 / (1.0 - gamma);
    Ok(((l_pi + 1.0) * rmax + 2.0 * l_v) * horizon_factor
        + (gamma * rmax * l_pi + rmax) * horizon_factor * horizon_factor)
}

/// Finite-horizon counterpart of [`compute_lphi1`]: the effective horizon
/// replaces the discount series and the discount factor drops out.
pub fn compute_lphi1_finite(l_pi: f64, l_v: f64, rmax: f64, horizon: usize) -> Result<f64> {
    check_constants(l_pi, l_v, rmax)?;
    if horizon == 0 {
        return Err(Error::Core(pomdp_core::Error::BadDiscount {
            gamma: None,
            horizon: Some(horizon),
        }));
    }
    let h = horizon as f64;
    Ok(((l_pi + 1.0) * rmax + 2.0 * l_v) * h + (rmax * l_pi + rmax) * h * h)
}
