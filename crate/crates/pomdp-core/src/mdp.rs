//! Explicit finite MDPs. Used for telescoping checks, abstract models, and
//! exact policy evaluation oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point iteration stops when the sup-norm change drops below this.
const EVAL_TOL: f64 = 1e-14;
const EVAL_MAX_ITERS: usize = 200_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteMDP {
    pub n_states: usize,
    pub n_actions: usize,
    /// p[s][a] is the distribution over successors.
    pub p: Vec<Vec<Vec<f64>>>,
    /// r[s][a].
    pub r: Vec<Vec<f64>>,
    pub d0: Vec<f64>,
    pub gamma: f64,
}

impl FiniteMDP {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::BadDiscount {
                gamma: Some(self.gamma),
                horizon: None,
            });
        }
        let dims_ok = self.p.len() == self.n_states
            && self.r.len() == self.n_states
            && self.d0.len() == self.n_states
            && self
                .p
                .iter()
                .all(|pa| pa.len() == self.n_actions && pa.iter().all(|row| row.len() == self.n_states))
            && self.r.iter().all(|row| row.len() == self.n_actions);
        if !dims_ok {
            return Err(Error::SchemaMismatch("MDP array dimensions disagree".into()));
        }
        let rows = self
            .p
            .iter()
            .flatten()
            .chain(std::iter::once(&self.d0));
        for (i, row) in rows.enumerate() {
            let sum: f64 = row.iter().sum();
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < 0.0 || (sum - 1.0).abs() > 1e-10 {
                return Err(Error::NonStochasticRow {
                    kind: "mdp",
                    index: i,
                    sum,
                    min_entry: min,
                });
            }
        }
        Ok(())
    }

    /// One application of the policy Bellman operator to a Q table.
    pub fn bellman_backup(&self, q: &[Vec<f64>], policy: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_actions]; self.n_states];
        // value of the successor state under the policy
        let v: Vec<f64> = (0..self.n_states)
            .map(|s| {
                policy[s]
                    .iter()
                    .zip(q[s].iter())
                    .map(|(pi, qv)| pi * qv)
                    .sum()
            })
            .collect();
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let future: f64 = self.p[s][a]
                    .iter()
                    .zip(v.iter())
                    .map(|(p, vv)| p * vv)
                    .sum();
                out[s][a] = self.r[s][a] + self.gamma * future;
            }
        }
        out
    }

    /// Exact Q^pi by fixed-point iteration; the geometric error bound is
    /// driven below 1e-12 by the stopping rule.
    pub fn policy_q(&self, policy: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut q = vec![vec![0.0; self.n_actions]; self.n_states];
        for _ in 0..EVAL_MAX_ITERS {
            let next = self.bellman_backup(&q, policy);
            let delta = next
                .iter()
                .flatten()
                .zip(q.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            q = next;
            if delta <= EVAL_TOL {
                break;
            }
        }
        q
    }

    pub fn state_values(&self, q: &[Vec<f64>], policy: &[Vec<f64>]) -> Vec<f64> {
        (0..self.n_states)
            .map(|s| {
                policy[s]
                    .iter()
                    .zip(q[s].iter())
                    .map(|(pi, qv)| pi * qv)
                    .sum()
            })
            .collect()
    }

    pub fn j(&self, policy: &[Vec<f64>]) -> f64 {
        let q = self.policy_q(policy);
        let v = self.state_values(&q, policy);
        self.d0.iter().zip(v.iter()).map(|(d, vv)| d * vv).sum()
    }

    pub fn j_of_q(&self, q: &[Vec<f64>], policy: &[Vec<f64>]) -> f64 {
        let v = self.state_values(q, policy);
        self.d0.iter().zip(v.iter()).map(|(d, vv)| d * vv).sum()
    }

    /// Discounted occupancy d(s,a) = (1-gamma) sum_k gamma^{k-1}
    /// Pr(s_k=s, a_k=a), truncated at kmax steps; optionally renormalized to
    /// total mass 1 (dividing by 1 - gamma^kmax).
    pub fn occupancy(&self, policy: &[Vec<f64>], kmax: usize, renormalize: bool) -> Vec<Vec<f64>> {
        let mut occ = vec![vec![0.0; self.n_actions]; self.n_states];
        let mut m = self.d0.clone();
        let mut coeff = 1.0 - self.gamma;
        for _ in 0..kmax {
            let mut next_m = vec![0.0; self.n_states];
            for s in 0..self.n_states {
                if m[s] == 0.0 {
                    continue;
                }
                for a in 0..self.n_actions {
                    let w = m[s] * policy[s][a];
                    occ[s][a] += coeff * w;
                    if w == 0.0 {
                        continue;
                    }
                    for (s2, &p) in self.p[s][a].iter().enumerate() {
                        next_m[s2] += w * p;
                    }
                }
            }
            m = next_m;
            coeff *= self.gamma;
        }
        if renormalize {
            let z = 1.0 - self.gamma.powi(kmax as i32);
            for row in occ.iter_mut() {
                for x in row.iter_mut() {
                    *x /= z;
                }
            }
        }
        occ
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> FiniteMDP {
        // two states, move right and stay; reward only in state 1
        FiniteMDP {
            n_states: 2,
            n_actions: 2,
            p: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]], // from 0: stay / go
                vec![vec![1.0, 0.0], vec![0.0, 1.0]], // from 1: back / stay
            ],
            r: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            d0: vec![1.0, 0.0],
            gamma: 0.5,
        }
    }

    #[test]
    fn policy_eval_matches_geometric_series() {
        let m = chain();
        // always "go": from state 0 we get 0 + gamma * V(1); in state 1 we
        // stay and collect 1 forever: V(1) = 1/(1-gamma) = 2, V(0) = 1.
        let go = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let q = m.policy_q(&go);
        let v = m.state_values(&q, &go);
        assert!((v[1] - 2.0).abs() < 1e-11);
        assert!((v[0] - 1.0).abs() < 1e-11);
        assert!((m.j(&go) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn hand_solved_two_state_q_values() {
        let m = chain();
        let go = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let q = m.policy_q(&go);
        // Q(0, stay) = 0 + 0.5 * V(0) = 0.5; Q(1, back) = 1 + 0.5 * V(0)
        assert!((q[0][0] - 0.5).abs() < 1e-11);
        assert!((q[1][0] - 1.5).abs() < 1e-11);
    }

    #[test]
    fn occupancy_mass_and_distribution() {
        let m = chain();
        let go = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let occ = m.occupancy(&go, 30, false);
        let mass: f64 = occ.iter().flatten().sum();
        assert!((mass - (1.0 - 0.5f64.powi(30))).abs() < 1e-12);
        // step 1 contributes (1-gamma) at (0, go); everything later sits at (1, go)
        assert!((occ[0][1] - 0.5).abs() < 1e-12);
        assert!(occ[0][0].abs() < 1e-15 && occ[1][0].abs() < 1e-15);
        let renorm = m.occupancy(&go, 30, true);
        let mass: f64 = renorm.iter().flatten().sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bellman_backup_fixed_point_is_policy_q() {
        let m = chain();
        let pi = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let q = m.policy_q(&pi);
        let back = m.bellman_backup(&q, &pi);
        for (a, b) in q.iter().flatten().zip(back.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_mdp_rows_are_rejected() {
        let mut m = chain();
        m.p[0][0] = vec![0.5, 0.4];
        assert!(m.validate().is_err());
    }
}
