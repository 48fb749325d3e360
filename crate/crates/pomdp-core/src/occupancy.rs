//! Exact occupancy measures on the truncated history tree.
//!
//! Two normalizations: the standard discounted weighting (1-gamma) gamma^{k-1}
//! per step k, and per-step uniform 1/H for finite-horizon runs. Weights are
//! keyed by plus-history nodes (where actions are taken); the joint
//! state-history table is keyed by action-boundary histories, which is the
//! shape the coverage definitions consume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::belief::{belief_update, initial_belief, initial_obs_dist, obs_predictive, predict, Belief};
use crate::error::{Error, Result};
use crate::history::History;
use crate::model::{TabularPOMDP, UpdateOrder};
use crate::policy::BeliefPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "norm")]
pub enum Normalization {
    /// weight (1-gamma) gamma^{k-1} at step k.
    Discounted { gamma: f64 },
    /// weight 1/horizon at every step.
    PerStepUniform { horizon: usize },
}

impl Normalization {
    pub fn step_weight(&self, k: usize) -> f64 {
        match self {
            Normalization::Discounted { gamma } => (1.0 - gamma) * gamma.powi(k as i32 - 1),
            Normalization::PerStepUniform { horizon } => 1.0 / *horizon as f64,
        }
    }

    /// Total mass of steps 1..=depth.
    pub fn mass(&self, depth: usize) -> f64 {
        match self {
            Normalization::Discounted { gamma } => 1.0 - gamma.powi(depth as i32),
            Normalization::PerStepUniform { horizon } => depth.min(*horizon) as f64 / *horizon as f64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OccupancyTable {
    pub normalization: Normalization,
    pub depth: usize,
    /// Mass that the truncation discards (gamma^depth, or the missing steps / H).
    pub tail_mass_bound: f64,
    /// (plus-history, action) mass: step weight x Pr(tau_h-plus) x pi(a | .).
    pub weights: BTreeMap<String, Vec<f64>>,
    /// Joint (latent state, action-boundary history) mass at the history's step.
    pub state_joint: BTreeMap<String, Vec<f64>>,
}

impl OccupancyTable {
    pub fn total_mass(&self) -> f64 {
        self.weights.values().flatten().sum()
    }

    /// Mass per action-boundary history (the state_joint marginal).
    pub fn history_mass(&self, key: &str) -> f64 {
        self.state_joint
            .get(key)
            .map(|v| v.iter().sum())
            .unwrap_or(0.0)
    }
}

struct OccWalk<'a> {
    model: &'a TabularPOMDP,
    policy: &'a BeliefPolicy,
    order: UpdateOrder,
    norm: Normalization,
    depth: usize,
    cap: usize,
    nodes: usize,
    weights: BTreeMap<String, Vec<f64>>,
    state_joint: BTreeMap<String, Vec<f64>>,
}

impl OccWalk<'_> {
    fn add_joint(&mut self, tau: &History, masses: &[f64]) {
        let slot = self
            .state_joint
            .entry(tau.canonical())
            .or_insert_with(|| vec![0.0; masses.len()]);
        for (dst, &m) in slot.iter_mut().zip(masses.iter()) {
            *dst += m;
        }
    }

    // tau_plus reached with probability `prob` at step h = tau_plus.step()
    fn go(&mut self, tau_plus: &History, b: &Belief, prob: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::TreeTooLarge { cap: self.cap });
        }
        let h = tau_plus.step();
        let cw = self.norm.step_weight(h);
        let probs = self.policy.action_probs(tau_plus, b)?;
        self.weights.insert(
            tau_plus.canonical(),
            probs.iter().map(|&pa| cw * prob * pa).collect(),
        );
        if h >= self.depth {
            return Ok(());
        }
        let cw_next = self.norm.step_weight(h + 1);
        for (a, &pa) in probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            // joint mass at the action-boundary child tau_{h+1}
            let mut tau_next = tau_plus.clone();
            tau_next.push_act(a)?;
            let pred = predict(self.model, b.probs(), a);
            let joint: Vec<f64> = pred.iter().map(|&ps| cw_next * prob * pa * ps).collect();
            self.add_joint(&tau_next, &joint);

            let obs_p = obs_predictive(self.model, b, a, self.order);
            for (o, &po) in obs_p.iter().enumerate() {
                if po == 0.0 {
                    continue;
                }
                let child = tau_plus.child_plus(a, o)?;
                let bc = belief_update(self.model, b, a, o, self.order)?;
                self.go(&child, &bc, prob * pa * po)?;
            }
        }
        Ok(())
    }
}

/// Exact occupancy of `policy` truncated at `depth` steps.
pub fn occupancy(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    depth: usize,
    norm: Normalization,
    order: UpdateOrder,
    node_cap: usize,
) -> Result<OccupancyTable> {
    if depth == 0 {
        return Err(Error::DomainMismatch("occupancy depth must be >= 1".into()));
    }
    let mut walk = OccWalk {
        model,
        policy,
        order,
        norm,
        depth,
        cap: node_cap,
        nodes: 0,
        weights: BTreeMap::new(),
        state_joint: BTreeMap::new(),
    };
    // step 1: the empty action-boundary history carries d0
    let c1 = norm.step_weight(1);
    let root_joint: Vec<f64> = model.d0.iter().map(|&p| c1 * p).collect();
    walk.add_joint(&History::empty(), &root_joint);

    let p1 = initial_obs_dist(model);
    for (o, &po) in p1.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let tau = History::new(vec![o], vec![])?;
        let b = initial_belief(model, o)?;
        walk.go(&tau, &b, po)?;
    }
    let tail = match norm {
        Normalization::Discounted { gamma } => gamma.powi(depth as i32),
        Normalization::PerStepUniform { horizon } => {
            (horizon.saturating_sub(depth)) as f64 / horizon as f64
        }
    };
    Ok(OccupancyTable {
        normalization: norm,
        depth,
        tail_mass_bound: tail,
        weights: walk.weights,
        state_joint: walk.state_joint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::counter_example_model;

    #[test]
    fn depth_one_weights_are_initial_obs_times_policy() {
        let m = counter_example_model(0.1, 2).unwrap();
        let pi = BeliefPolicy::constant(vec![0.3, 0.7]);
        let norm = Normalization::Discounted { gamma: 0.9 };
        let t = occupancy(&m, &pi, 1, norm, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let p1 = initial_obs_dist(&m);
        for (o, &po) in p1.iter().enumerate() {
            if po == 0.0 {
                continue;
            }
            let key = History::new(vec![o], vec![]).unwrap().canonical();
            let w = &t.weights[&key];
            assert!((w[0] - 0.1 * po * 0.3).abs() <= 1e-15);
            assert!((w[1] - 0.1 * po * 0.7).abs() <= 1e-15);
        }
        assert!((t.total_mass() - 0.1).abs() <= 1e-15);
        assert!((t.tail_mass_bound - 0.9).abs() <= 1e-15);
    }

    #[test]
    fn total_mass_matches_normalization() {
        let m = counter_example_model(0.05, 1).unwrap();
        let pi = BeliefPolicy::uniform(1);
        let norm = Normalization::Discounted { gamma: 0.9 };
        let t = occupancy(&m, &pi, 5, norm, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        assert!((t.total_mass() - norm.mass(5)).abs() <= 1e-12);
        // state_joint carries the same mass (steps 1..=depth each appear once)
        let joint_mass: f64 = t.state_joint.values().flatten().sum();
        assert!((joint_mass - norm.mass(5)).abs() <= 1e-12);
    }

    #[test]
    fn identical_policies_have_identical_tables() {
        let m = counter_example_model(0.05, 2).unwrap();
        let p1 = BeliefPolicy::constant(vec![0.5, 0.5]);
        let p2 = BeliefPolicy::constant(vec![0.5, 0.5]);
        let norm = Normalization::Discounted { gamma: 0.9 };
        let a = occupancy(&m, &p1, 3, norm, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let b = occupancy(&m, &p2, 3, norm, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.state_joint, b.state_joint);
    }

    #[test]
    fn state_marginals_match_latent_chain_recursion() {
        // with a constant policy the history-marginalized state distribution
        // follows the plain latent chain, independent of observations
        let m = TabularPOMDP {
            n_states: 3,
            n_actions: 2,
            n_obs: 3,
            gamma: Some(0.7),
            horizon: None,
            rmax: 1.0,
            d0: vec![0.6, 0.3, 0.1],
            transition: vec![
                vec![vec![0.2, 0.5, 0.3], vec![0.7, 0.2, 0.1]],
                vec![vec![0.4, 0.4, 0.2], vec![0.1, 0.6, 0.3]],
                vec![vec![0.3, 0.3, 0.4], vec![0.5, 0.1, 0.4]],
            ],
            emission: vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.7, 0.2], vec![0.3, 0.3, 0.4]],
            reward: vec![vec![0.0, 0.0]; 3],
        };
        m.validate().unwrap();
        let pi_dist = [0.4, 0.6];
        let pi = BeliefPolicy::constant(pi_dist.to_vec());
        let depth = 4;
        let norm = Normalization::Discounted { gamma: 0.7 };
        for order in [UpdateOrder::UpdateFirst, UpdateOrder::PredictFirst] {
            let t = occupancy(&m, &pi, depth, norm, order, 1 << 22).unwrap();
            // sum the joint over histories at each step
            let mut by_step: Vec<Vec<f64>> = vec![vec![0.0; 3]; depth + 1];
            for (key, masses) in &t.state_joint {
                let h = History::parse(key).unwrap().step();
                for (s, &v) in masses.iter().enumerate() {
                    by_step[h][s] += v;
                }
            }
            // forward latent recursion
            let mut marginal = m.d0.clone();
            for k in 1..=depth {
                let w = norm.step_weight(k);
                for s in 0..3 {
                    assert!(
                        (by_step[k][s] - w * marginal[s]).abs() <= 1e-10,
                        "step {k} state {s} ({order:?})"
                    );
                }
                let mut next = vec![0.0; 3];
                for s in 0..3 {
                    for (a, &pa) in pi_dist.iter().enumerate() {
                        for s2 in 0..3 {
                            next[s2] += marginal[s] * pa * m.transition[s][a][s2];
                        }
                    }
                }
                marginal = next;
            }
        }
    }
}
