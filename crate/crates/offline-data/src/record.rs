//! The two offline dataset shapes.

use pomdp_core::{History, Phase};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How the second tuple of a double-sampled record was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum D1Mode {
    /// Both (reward, next observation) pairs are full redraws from the
    /// prefix belief, so they are conditionally independent given
    /// (prefix, action) and the paired product loss is unbiased for the
    /// squared residual.
    IndependentRedraw,
    /// The literal logged shape: one reward shared by both sides, only the
    /// second successor redrawn after the reset.
    SharedReward,
}

/// One double-sampled record: a plus-history prefix, the probed action, and
/// two successor draws. Successor histories are not stored; they are
/// `prefix.child_plus(action, obs)` on demand, so one dataset serves both
/// the true-space and abstract-space estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct D1Record {
    pub h: usize,
    pub prefix: History,
    pub action: usize,
    pub reward_a: f64,
    pub obs_a: usize,
    pub reward_b: f64,
    pub obs_b: usize,
    pub mode: D1Mode,
}

impl D1Record {
    pub fn next_a(&self) -> Result<History> {
        Ok(self.prefix.child_plus(self.action, self.obs_a)?)
    }

    pub fn next_b(&self) -> Result<History> {
        Ok(self.prefix.child_plus(self.action, self.obs_b)?)
    }

    /// Structural invariants: the prefix is a plus history of h steps, and
    /// shared-reward records carry one reward bit for bit.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| pomdp_core::Error::SchemaMismatch(msg);
        if self.prefix.phase() != Phase::Plus {
            return Err(bad(format!(
                "D1 prefix {:?} must end on an observation",
                self.prefix.canonical()
            ))
            .into());
        }
        if self.prefix.step() != self.h {
            return Err(bad(format!(
                "step index {} disagrees with prefix {:?}",
                self.h,
                self.prefix.canonical()
            ))
            .into());
        }
        if self.mode == D1Mode::SharedReward && self.reward_a != self.reward_b {
            return Err(bad(format!(
                "shared-reward record carries two rewards {} vs {}",
                self.reward_a, self.reward_b
            ))
            .into());
        }
        Ok(())
    }
}

/// One behavior trajectory: (o_t, a_t, r_t) for t = 1..H.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct D2Trajectory {
    pub steps: Vec<(usize, usize, f64)>,
}

impl D2Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted return, the finite-horizon estimand.
    pub fn return_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.2).sum()
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.steps.len() != horizon {
            return Err(pomdp_core::Error::SchemaMismatch(format!(
                "trajectory has {} steps, meta declares horizon {horizon}",
                self.steps.len()
            ))
            .into());
        }
        Ok(())
    }
}
