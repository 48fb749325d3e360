//! Tabular POMDP model: finite states, actions, observations, a transition
//! kernel per (state, action), an emission row per state, deterministic
//! rewards in [0, rmax], and either a discount in [0,1) or a finite horizon.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Construction-time tolerance for probability rows.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// File-load tolerance: rows within this of 1 are renormalized, worse is rejected.
pub const LOAD_TOL: f64 = 1e-9;

/// Timing convention for the Bayes filter.
///
/// Update-first applies the observation posterior to the current belief and
/// then pushes it through the action (the step-h+1 observation is emitted by
/// the pre-transition state). Predict-first pushes through the action and
/// conditions on an observation emitted by the successor state. Both are
/// valid filters for the respective generative story; they differ on which
/// story generated the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateOrder {
    #[default]
    UpdateFirst,
    PredictFirst,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularPOMDP {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obs: usize,
    /// Discount in [0,1); exactly one of gamma / horizon is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Finite horizon (number of steps); exactly one of gamma / horizon is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub rmax: f64,
    /// Initial latent-state distribution.
    pub d0: Vec<f64>,
    /// transition[s][a] is the distribution over successor states.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// emission[s] is the distribution over observations.
    pub emission: Vec<Vec<f64>>,
    /// reward[s][a] in [0, rmax].
    pub reward: Vec<Vec<f64>>,
}

fn check_row(kind: &'static str, index: usize, row: &[f64], tol: f64) -> Result<()> {
    let sum: f64 = row.iter().sum();
    let min_entry = row.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_entry < 0.0 || (sum - 1.0).abs() > tol {
        return Err(Error::NonStochasticRow {
            kind,
            index,
            sum,
            min_entry,
        });
    }
    Ok(())
}

fn renorm_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    for x in row.iter_mut() {
        *x /= sum;
    }
}

impl TabularPOMDP {
    /// Check every structural invariant; cheap enough to call at trust boundaries.
    pub fn validate(&self) -> Result<()> {
        match (self.gamma, self.horizon) {
            (Some(g), None) if (0.0..1.0).contains(&g) => {}
            (None, Some(h)) if h >= 1 => {}
            _ => {
                return Err(Error::BadDiscount {
                    gamma: self.gamma,
                    horizon: self.horizon,
                })
            }
        }
        if self.n_states == 0 || self.n_actions == 0 || self.n_obs == 0 {
            return Err(Error::SchemaMismatch("empty state/action/obs space".into()));
        }
        if self.rmax < 0.0 || !self.rmax.is_finite() {
            return Err(Error::SchemaMismatch(format!("bad rmax {}", self.rmax)));
        }
        let dims_ok = self.d0.len() == self.n_states
            && self.transition.len() == self.n_states
            && self.transition.iter().all(|per_a| {
                per_a.len() == self.n_actions
                    && per_a.iter().all(|row| row.len() == self.n_states)
            })
            && self.emission.len() == self.n_states
            && self.emission.iter().all(|row| row.len() == self.n_obs)
            && self.reward.len() == self.n_states
            && self.reward.iter().all(|row| row.len() == self.n_actions);
        if !dims_ok {
            return Err(Error::SchemaMismatch("array dimensions disagree with counts".into()));
        }
        check_row("d0", 0, &self.d0, ROW_SUM_TOL)?;
        for (s, per_a) in self.transition.iter().enumerate() {
            for (a, row) in per_a.iter().enumerate() {
                // index encodes the flat (s,a) slot
                check_row("transition", s * self.n_actions + a, row, ROW_SUM_TOL)?;
            }
        }
        for (s, row) in self.emission.iter().enumerate() {
            check_row("emission", s, row, ROW_SUM_TOL)?;
        }
        for (s, row) in self.reward.iter().enumerate() {
            for (a, &r) in row.iter().enumerate() {
                if !(0.0..=self.rmax).contains(&r) {
                    return Err(Error::RewardOutOfRange {
                        state: s,
                        action: a,
                        value: r,
                        rmax: self.rmax,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_finite_horizon(&self) -> bool {
        self.horizon.is_some()
    }

    /// Discount used by accumulation loops: 1 in the finite-horizon regime.
    pub fn discount(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    /// rmax * (gamma^depth) / (1-gamma): mass of everything beyond the
    /// enumeration depth. Zero once a finite horizon is fully enumerated.
    pub fn value_tail_bound(&self, depth: usize) -> f64 {
        match (self.gamma, self.horizon) {
            (Some(g), None) => g.powi(depth as i32) * self.rmax / (1.0 - g),
            (None, Some(h)) => {
                if depth >= h {
                    0.0
                } else {
                    ((h - depth) as f64) * self.rmax
                }
            }
            _ => f64::NAN,
        }
    }

    /// Expected reward under a belief: <b, reward(., a)>.
    pub fn reward_belief(&self, probs: &[f64], a: usize) -> f64 {
        probs
            .iter()
            .enumerate()
            .map(|(s, &p)| p * self.reward[s][a])
            .sum()
    }

    /// Parse and validate, renormalizing rows that are within the load
    /// tolerance of stochastic. Anything worse is rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut m: TabularPOMDP = serde_json::from_str(text)?;
        let off = |row: &[f64]| {
            let sum: f64 = row.iter().sum();
            (sum - 1.0).abs() <= LOAD_TOL && row.iter().all(|&x| x >= 0.0)
        };
        if off(&m.d0) {
            renorm_row(&mut m.d0);
        }
        for per_a in m.transition.iter_mut() {
            for row in per_a.iter_mut() {
                if off(row) {
                    renorm_row(row);
                }
            }
        }
        for row in m.emission.iter_mut() {
            if off(row) {
                renorm_row(row);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// Content hash over the compact serialization; datasets record it so a
    /// dataset can never be silently paired with the wrong model.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }
}
