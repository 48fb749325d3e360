//! Prefix-length laws for double-sampled records.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Law of the truncation index h >= 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum PrefixDist {
    /// P(h = k) = (1 - p) p^{k-1} for k < cap, with the whole tail on cap.
    /// With p = gamma this is the discounted-occupancy weighting over steps,
    /// cut at the enumeration depth so successors stay inside the graph.
    TruncatedGeometric { p_continue: f64, cap: usize },
    /// Uniform over min..=max, the finite-horizon choice.
    Uniform { min: usize, max: usize },
}

impl PrefixDist {
    /// The discounted default: continue with probability gamma, stop at cap.
    pub fn discounted(gamma: f64, cap: usize) -> Self {
        PrefixDist::TruncatedGeometric {
            p_continue: gamma,
            cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| pomdp_core::Error::DomainMismatch(msg).into();
        match *self {
            PrefixDist::TruncatedGeometric { p_continue, cap } => {
                if !(0.0..=1.0).contains(&p_continue) || !p_continue.is_finite() {
                    return Err(bad(format!(
                        "continue probability {p_continue} outside [0, 1]"
                    )));
                }
                if cap == 0 {
                    return Err(bad("prefix-length cap must be >= 1".to_string()));
                }
            }
            PrefixDist::Uniform { min, max } => {
                if min == 0 || min > max {
                    return Err(bad(format!("need 1 <= min <= max, got {min}..={max}")));
                }
            }
        }
        Ok(())
    }

    /// Largest h the law can produce.
    pub fn max_len(&self) -> usize {
        match *self {
            PrefixDist::TruncatedGeometric { cap, .. } => cap,
            PrefixDist::Uniform { max, .. } => max,
        }
    }

    /// Exact pmf over 1..=max_len(); entry k-1 is P(h = k).
    pub fn pmf(&self) -> Vec<f64> {
        match *self {
            PrefixDist::TruncatedGeometric { p_continue, cap } => (1..=cap)
                .map(|k| {
                    let reach = p_continue.powi(k as i32 - 1);
                    if k < cap {
                        reach * (1.0 - p_continue)
                    } else {
                        reach
                    }
                })
                .collect(),
            PrefixDist::Uniform { min, max } => {
                let p = 1.0 / (max - min + 1) as f64;
                (1..=max).map(|k| if k >= min { p } else { 0.0 }).collect()
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match *self {
            PrefixDist::TruncatedGeometric { p_continue, cap } => {
                let mut h = 1;
                while h < cap && rng.gen::<f64>() < p_continue {
                    h += 1;
                }
                h
            }
            PrefixDist::Uniform { min, max } => rng.gen_range(min..=max),
        }
    }
}
