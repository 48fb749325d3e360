//! Policies over histories/beliefs. Four kinds cover everything the
//! experiments need:
//!
//! * belief-table: one action row per latent state, mixed linearly by the
//!   belief. Linear in b, so its Lipschitz constant is certifiable.
//! * history-table: explicit rows keyed by canonical plus-history strings.
//! * memoryless: one row per last observation.
//! * truncated-memory(T): rows keyed by the last-T window of the history.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::history::{History, Phase};

pub const DIST_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// rows[s] is the action distribution taken at the one-hot belief on s;
    /// at a general belief the rows are mixed by the belief weights.
    BeliefTable { rows: Vec<Vec<f64>> },
    /// Explicit action distribution per canonical plus-history key.
    HistoryTable {
        table: BTreeMap<String, Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Vec<f64>>,
    },
    /// rows[o] is the action distribution after last observation o.
    Memoryless { rows: Vec<Vec<f64>> },
    /// Keys are canonical last-T windows of plus histories.
    TruncatedMemory {
        t: usize,
        table: BTreeMap<String, Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BeliefPolicy {
    #[serde(flatten)]
    pub kind: PolicyKind,
    /// Claimed Lipschitz constant in the belief argument (L1 to L1 total
    /// variation x2 scale). For belief-table kinds `certified_l_pi` is exact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_l_pi: Option<f64>,
}

fn check_dist(context: &str, dist: &[f64], n_actions: usize) -> Result<()> {
    if dist.len() != n_actions {
        return Err(Error::DomainMismatch(format!(
            "{context}: action distribution has {} entries, expected {n_actions}",
            dist.len()
        )));
    }
    let sum: f64 = dist.iter().sum();
    let min = dist.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 || (sum - 1.0).abs() > DIST_SUM_TOL {
        return Err(Error::NonStochasticRow {
            kind: "policy",
            index: 0,
            sum,
            min_entry: min,
        });
    }
    Ok(())
}

impl BeliefPolicy {
    pub fn uniform(n_actions: usize) -> Self {
        BeliefPolicy {
            kind: PolicyKind::BeliefTable {
                rows: vec![vec![1.0 / n_actions as f64; n_actions]; 1],
            },
            declared_l_pi: Some(0.0),
        }
        // a single shared row: the belief mix of identical rows is constant
    }

    pub fn constant(dist: Vec<f64>) -> Self {
        BeliefPolicy {
            kind: PolicyKind::BeliefTable { rows: vec![dist] },
            declared_l_pi: Some(0.0),
        }
    }

    pub fn belief_table(rows: Vec<Vec<f64>>) -> Self {
        BeliefPolicy {
            kind: PolicyKind::BeliefTable { rows },
            declared_l_pi: None,
        }
    }

    pub fn memoryless(rows: Vec<Vec<f64>>) -> Self {
        BeliefPolicy {
            kind: PolicyKind::Memoryless { rows },
            declared_l_pi: None,
        }
    }

    pub fn validate(&self, n_actions: usize) -> Result<()> {
        match &self.kind {
            PolicyKind::BeliefTable { rows } => {
                if rows.is_empty() {
                    return Err(Error::DomainMismatch("belief-table policy with no rows".into()));
                }
                for row in rows {
                    check_dist("belief-table row", row, n_actions)?;
                }
            }
            PolicyKind::HistoryTable { table, default } => {
                for (key, row) in table {
                    check_dist(key, row, n_actions)?;
                }
                if let Some(d) = default {
                    check_dist("history-table default", d, n_actions)?;
                }
            }
            PolicyKind::Memoryless { rows } => {
                for row in rows {
                    check_dist("memoryless row", row, n_actions)?;
                }
            }
            PolicyKind::TruncatedMemory { t, table, default } => {
                if *t < 1 {
                    return Err(Error::DomainMismatch("truncated-memory window must be >= 1".into()));
                }
                for (key, row) in table {
                    check_dist(key, row, n_actions)?;
                }
                if let Some(d) = default {
                    check_dist("truncated-memory default", d, n_actions)?;
                }
            }
        }
        Ok(())
    }

    /// Action distribution at (tau_h-plus, its belief).
    pub fn action_probs(&self, tau_plus: &History, belief: &Belief) -> Result<Vec<f64>> {
        if tau_plus.phase() != Phase::Plus {
            return Err(Error::DomainMismatch(
                "policies act at plus-shaped histories".into(),
            ));
        }
        match &self.kind {
            PolicyKind::BeliefTable { rows } => {
                // identical rows collapse to a constant policy; otherwise one
                // row per state is required
                if rows.len() == 1 {
                    return Ok(rows[0].clone());
                }
                if rows.len() != belief.dim() {
                    return Err(Error::DomainMismatch(format!(
                        "belief-table policy has {} rows for a {}-state belief",
                        rows.len(),
                        belief.dim()
                    )));
                }
                let n_actions = rows[0].len();
                let mut mix = vec![0.0; n_actions];
                for (s, &p) in belief.probs().iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    for (a, &q) in rows[s].iter().enumerate() {
                        mix[a] += p * q;
                    }
                }
                Ok(mix)
            }
            PolicyKind::HistoryTable { table, default } => {
                let key = tau_plus.canonical();
                table
                    .get(&key)
                    .or(default.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::DomainMismatch(format!("history-table policy has no row for {key:?}")))
            }
            PolicyKind::Memoryless { rows } => {
                let o = tau_plus.last_obs().expect("plus history has a last obs");
                rows.get(o).cloned().ok_or(Error::IndexOutOfRange {
                    what: "memoryless policy row",
                    index: o,
                    size: rows.len(),
                })
            }
            PolicyKind::TruncatedMemory { t, table, default } => {
                let key = tau_plus.window(*t).canonical();
                table
                    .get(&key)
                    .or(default.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::DomainMismatch(format!("truncated-memory policy has no row for {key:?}")))
            }
        }
    }

    /// Exact Lipschitz constant for belief-table policies: half the largest
    /// L1 distance between two rows (the mix is linear and row differences
    /// integrate to zero). None for kinds that are not functions of belief.
    pub fn certified_l_pi(&self) -> Option<f64> {
        match &self.kind {
            PolicyKind::BeliefTable { rows } => {
                let mut worst: f64 = 0.0;
                for i in 0..rows.len() {
                    for j in (i + 1)..rows.len() {
                        let d: f64 = rows[i]
                            .iter()
                            .zip(rows[j].iter())
                            .map(|(x, y)| (x - y).abs())
                            .sum();
                        worst = worst.max(0.5 * d);
                    }
                }
                Some(worst)
            }
            _ => None,
        }
    }

    /// Declared constant if present, else the certified one.
    pub fn l_pi(&self) -> Option<f64> {
        self.declared_l_pi.or_else(|| self.certified_l_pi())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serialization cannot fail")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("policy serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        format!("{:x}", hasher.finalize())
    }

    /// Smallest action probability this policy can emit on declared rows;
    /// used to validate full-support requirements before generation.
    pub fn min_prob(&self) -> f64 {
        let rows: Vec<&Vec<f64>> = match &self.kind {
            PolicyKind::BeliefTable { rows } | PolicyKind::Memoryless { rows } => rows.iter().collect(),
            PolicyKind::HistoryTable { table, default }
            | PolicyKind::TruncatedMemory { table, default, .. } => {
                table.values().chain(default.iter()).collect()
            }
        };
        rows.iter()
            .flat_map(|r| r.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(obs: Vec<usize>, acts: Vec<usize>) -> History {
        History::new(obs, acts).unwrap()
    }

    #[test]
    fn belief_table_mixes_rows_linearly() {
        let pi = BeliefPolicy::belief_table(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        pi.validate(2).unwrap();
        let b = Belief::new(vec![0.3, 0.7]).unwrap();
        let p = pi.action_probs(&tau(vec![0], vec![]), &b).unwrap();
        assert!((p[0] - 0.3).abs() <= 1e-15 && (p[1] - 0.7).abs() <= 1e-15);
    }

    #[test]
    fn certified_l_pi_is_half_max_row_distance() {
        let pi = BeliefPolicy::belief_table(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(pi.certified_l_pi(), Some(1.0));
        let constant = BeliefPolicy::constant(vec![0.5, 0.5]);
        assert_eq!(constant.certified_l_pi(), Some(0.0));
    }

    #[test]
    fn memoryless_uses_last_observation() {
        let pi = BeliefPolicy::memoryless(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        pi.validate(2).unwrap();
        let b = Belief::uniform(2);
        let p = pi.action_probs(&tau(vec![1, 0], vec![0]), &b).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn truncated_memory_keys_on_windows() {
        let mut table = BTreeMap::new();
        table.insert("o1-a0-o0".to_string(), vec![0.2, 0.8]);
        let pi = BeliefPolicy {
            kind: PolicyKind::TruncatedMemory {
                t: 2,
                table,
                default: Some(vec![0.5, 0.5]),
            },
            declared_l_pi: None,
        };
        pi.validate(2).unwrap();
        let b = Belief::uniform(2);
        // long history whose last-2 window is o1 a0 o0
        let p = pi.action_probs(&tau(vec![3, 1, 0], vec![1, 0]), &b).unwrap();
        assert_eq!(p, vec![0.2, 0.8]);
        // unseen window falls back to the default row
        let q = pi.action_probs(&tau(vec![0], vec![]), &b).unwrap();
        assert_eq!(q, vec![0.5, 0.5]);
    }

    #[test]
    fn history_table_without_row_or_default_errors() {
        let pi = BeliefPolicy {
            kind: PolicyKind::HistoryTable {
                table: BTreeMap::new(),
                default: None,
            },
            declared_l_pi: None,
        };
        let b = Belief::uniform(2);
        assert!(pi.action_probs(&tau(vec![0], vec![]), &b).is_err());
    }

    #[test]
    fn invalid_distribution_is_rejected() {
        let pi = BeliefPolicy::belief_table(vec![vec![0.6, 0.6]]);
        assert!(pi.validate(2).is_err());
        let pi = BeliefPolicy::belief_table(vec![vec![1.2, -0.2]]);
        assert!(pi.validate(2).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_kind_and_hash() {
        let pi = BeliefPolicy::memoryless(vec![vec![0.4, 0.6], vec![0.9, 0.1]]);
        let text = pi.to_json_string();
        assert!(text.contains("\"kind\": \"memoryless\""));
        let back = BeliefPolicy::from_json_str(&text).unwrap();
        assert_eq!(pi.content_hash(), back.content_hash());
    }
}
