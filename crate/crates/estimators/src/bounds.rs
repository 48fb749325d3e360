//! Finite-sample error bounds for both estimators, evaluated numerically.
//!
//! Each bound has two ingredients that scale the abstraction resolution eps:
//! a loss-smoothness constant (how fast the population loss moves when its
//! arguments move by eps) and a value-gap constant (how far the plug-in
//! estimate moves under the same perturbation). The statistical term is a
//! concentration band over the finite class. All constants are exposed as
//! plain helpers so experiments can report them alongside the bound.

use abstraction::{compute_lphi1, compute_lphi1_finite};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Invalid(msg.into()))
    }
}

/// Loss smoothness of the paired Bellman objective in the discounted
/// setting: (8 Rmax / (1-gamma)) ((1+gamma) L_Q + Rmax / (1-gamma)).
pub fn ds_l_e(rmax: f64, gamma: f64, l_q: f64) -> f64 {
    (8.0 * rmax / (1.0 - gamma)) * ((1.0 + gamma) * l_q + rmax / (1.0 - gamma))
}

/// Value gap of the discounted plug-in estimate under abstraction: the
/// one-step policy-value constant plus Rmax/(1-gamma) + L_Q for reading the
/// fitted function at a representative.
pub fn ds_l_phi(rmax: f64, gamma: f64, l_q: f64, l_pi: f64, l_v: f64) -> Result<f64> {
    Ok(compute_lphi1(l_pi, l_v, rmax, gamma)? + rmax / (1.0 - gamma) + l_q)
}

/// Inputs to the double-sampling bound. `concentrability` is the sup of the
/// evaluation occupancy over the data law on the abstract system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsBoundParams {
    pub concentrability: f64,
    pub n: usize,
    pub delta: f64,
    pub class_size: usize,
    pub rmax: f64,
    pub gamma: f64,
    pub l_q: f64,
    pub l_pi: f64,
    pub l_v: f64,
    pub eps: f64,
}

impl DsBoundParams {
    fn validate(&self) -> Result<()> {
        require(self.concentrability > 0.0, "concentrability must be > 0")?;
        require(self.n >= 1, "sample count must be >= 1")?;
        require(
            self.delta > 0.0 && self.delta < 1.0,
            "failure probability must lie in (0, 1)",
        )?;
        require(self.class_size >= 1, "class must be non-empty")?;
        require(self.rmax > 0.0, "rmax must be > 0")?;
        require(
            (0.0..1.0).contains(&self.gamma),
            "discount must lie in [0, 1)",
        )?;
        require(
            self.l_q >= 0.0 && self.l_pi >= 0.0 && self.l_v >= 0.0 && self.eps >= 0.0,
            "smoothness constants and eps must be >= 0",
        )
    }

    /// The class-uniform concentration band on the paired loss:
    /// sqrt(32 Rmax^4 log(2 |class| / delta) / (n (1-gamma)^4)).
    fn concentration(&self) -> f64 {
        let span = self.rmax.powi(4) / (self.n as f64 * (1.0 - self.gamma).powi(4));
        (32.0 * span * (2.0 * self.class_size as f64 / self.delta).ln()).sqrt()
    }
}

/// High-probability gap between the fitted plug-in value and the target
/// value at a given abstraction resolution.
pub fn compute_bound_ds(p: &DsBoundParams) -> Result<f64> {
    p.validate()?;
    let inner = p.concentration() + ds_l_e(p.rmax, p.gamma, p.l_q) * p.eps;
    let statistical = (p.concentrability.sqrt() / (1.0 - p.gamma)) * inner.sqrt();
    Ok(statistical + ds_l_phi(p.rmax, p.gamma, p.l_q, p.l_pi, p.l_v)? * p.eps)
}

/// The bound specialized to the resolution rule that balances both error
/// sources against the sample size. `eps` in the params is ignored here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsRateBound {
    /// Bound value at the balanced resolution, an n^{-1/4} rate.
    pub bound: f64,
    /// The balancing resolution: concentration band over the loss smoothness.
    pub eps_n: f64,
    /// Sample-count floor for the value-gap term to be dominated.
    pub n_floor: f64,
}

pub fn compute_bound_ds_rate(p: &DsBoundParams) -> Result<DsRateBound> {
    p.validate()?;
    let l_e = ds_l_e(p.rmax, p.gamma, p.l_q);
    let l_phi = ds_l_phi(p.rmax, p.gamma, p.l_q, p.l_pi, p.l_v)?;
    let log_term = (2.0 * p.class_size as f64 / p.delta).ln();
    let eps_n = p.concentration() / l_e;
    let n_floor = 8.0 * p.rmax.powi(4) * (l_phi / l_e).powi(4) * log_term;
    let span = p.rmax.powi(4) / (p.n as f64 * (1.0 - p.gamma).powi(4));
    let bound =
        (2.0 * p.concentrability.sqrt() / (1.0 - p.gamma)) * (128.0 * span * log_term).powf(0.25);
    Ok(DsRateBound {
        bound,
        eps_n,
        n_floor,
    })
}

/// Universal constant of the trajectory bound assembled from its
/// concentration argument; `condition_constant` is the constant in the
/// resolution condition the assembly is valid under.
pub fn fdvf_default_c(condition_constant: f64) -> f64 {
    1406.0 + (80707.0 + 29.0 * condition_constant).sqrt()
}

/// Loss smoothness of the trajectory objective when both the model and the
/// policies are windowed; needs margins on behavior action probabilities
/// and on observation probabilities.
pub fn fdvf_l_e_main(
    h: usize,
    c_mu: f64,
    l_pi: f64,
    v_inf: f64,
    theta_inf: f64,
    min_pi_b: f64,
    min_obs_prob: f64,
) -> f64 {
    let h = h as f64;
    let vt = v_inf * theta_inf;
    3.0 * (2.0 * h * (c_mu + 1.0) * l_pi * vt / min_pi_b
        + h * c_mu * vt
        + 3.0 * h * h * (c_mu * vt).max(0.5 * theta_inf * theta_inf)
            / min_obs_prob.min(min_pi_b / l_pi))
}

/// Loss smoothness when only the policies are windowed; no observation
/// margin is needed. `c1`, `c2` are the uniform constants of that
/// guarantee, 1.0 unless a sharper assembly is supplied.
pub fn fdvf_l_e_tighter(
    h: usize,
    c_mu: f64,
    l_pi: f64,
    v_inf: f64,
    theta_inf: f64,
    min_pi_b: f64,
    c1: f64,
    c2: f64,
) -> f64 {
    let h = h as f64;
    let vt = v_inf * theta_inf;
    3.0 * (h * l_pi * (c1 * (c_mu + 1.0) * vt + c2 * h * (c_mu * vt).max(0.5 * theta_inf * theta_inf))
        / min_pi_b
        + h * c_mu * vt)
}

/// Value gap under model-and-policy windowing: the finite-horizon
/// policy-value constant plus the class sup-norm.
pub fn fdvf_l_phi_main(rmax: f64, h: usize, l_pi: f64, l_v: f64, v_inf: f64) -> Result<f64> {
    Ok(compute_lphi1_finite(l_pi, l_v, rmax, h)? + v_inf)
}

/// Value gap under policy-only windowing: Rmax H L_pi + Rmax H^2 L_pi plus
/// the class sup-norm. No model smoothness enters.
pub fn fdvf_l_phi_tighter(rmax: f64, h: usize, l_pi: f64, v_inf: f64) -> f64 {
    let h = h as f64;
    rmax * h * l_pi + rmax * h * h * l_pi + v_inf
}

/// Inputs to the trajectory-estimator bound. `coverage_ratio` is the worst
/// step-wise ratio of evaluation-side to behavior-side squared residuals;
/// `c_v` is max(sup-norm of the value class + 1, sup-norm of the test
/// class); `l_e` and `l_phi` come from the matching pipeline helpers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdvfBoundParams {
    pub coverage_ratio: f64,
    pub n: usize,
    pub delta: f64,
    pub h: usize,
    pub c_v: f64,
    pub c_mu: f64,
    pub l_e: f64,
    pub l_phi: f64,
    pub eps: f64,
    pub c: f64,
    pub v_card: usize,
    pub theta_card: usize,
}

impl FdvfBoundParams {
    fn validate(&self) -> Result<()> {
        require(self.coverage_ratio >= 0.0, "coverage ratio must be >= 0")?;
        require(self.n >= 1, "sample count must be >= 1")?;
        require(
            self.delta > 0.0 && self.delta < 1.0,
            "failure probability must lie in (0, 1)",
        )?;
        require(self.h >= 1, "horizon must be >= 1")?;
        require(self.c_v > 0.0 && self.c_mu > 0.0, "envelopes must be > 0")?;
        require(self.c > 0.0, "uniform constant must be > 0")?;
        require(
            self.v_card >= 1 && self.theta_card >= 1,
            "classes must be non-empty",
        )?;
        require(
            self.l_e >= 0.0 && self.l_phi >= 0.0 && self.eps >= 0.0,
            "smoothness constants and eps must be >= 0",
        )
    }
}

/// High-probability gap between the fitted trajectory estimate and the
/// evaluation policy's value at a given memory-window resolution.
pub fn compute_bound_fdvf(p: &FdvfBoundParams) -> Result<f64> {
    p.validate()?;
    let h = p.h as f64;
    let log_term = (p.v_card as f64 * p.theta_card as f64 / p.delta).ln();
    let statistical = (p.c * h * p.c_v * p.c_v * p.c_mu / p.n as f64) * log_term;
    Ok(p.l_phi * p.eps + h.sqrt() * p.coverage_ratio * (statistical + p.l_e * p.eps).sqrt())
}
