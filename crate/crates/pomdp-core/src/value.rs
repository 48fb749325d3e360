//! Exact policy values by backward induction on the enumerated history tree,
//! plus a Monte-Carlo rollout oracle for cross-checks.

use std::collections::BTreeMap;

use crate::belief::{belief_update, initial_belief, initial_obs_dist, obs_predictive, Belief};
use crate::error::{Error, Result};
use crate::history::History;
use crate::model::{TabularPOMDP, UpdateOrder};
use crate::policy::BeliefPolicy;
use crate::rng::stream;
use crate::sim::sample_trajectory;

/// Default enumeration budget; every tree walk in the crate honors one.
pub const DEFAULT_NODE_CAP: usize = 20_000_000;

#[derive(Clone, Debug)]
pub struct ValueReport {
    /// E over the initial observation of the root values.
    pub j: f64,
    /// Value-to-go per plus-history node (discounting starts at the node's step).
    pub v: BTreeMap<String, f64>,
    /// Certified truncation slack: anything past the depth contributes at
    /// most this much to the untruncated value.
    pub tail_bound: f64,
    pub depth: usize,
    pub nodes: usize,
}

struct ValueWalk<'a> {
    model: &'a TabularPOMDP,
    policy: &'a BeliefPolicy,
    order: UpdateOrder,
    depth: usize,
    disc: f64,
    cap: usize,
    nodes: usize,
    v: BTreeMap<String, f64>,
}

impl ValueWalk<'_> {
    // value-to-go at tau_h-plus; h = tau_plus.step()
    fn go(&mut self, tau_plus: &History, b: &Belief) -> Result<f64> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::TreeTooLarge { cap: self.cap });
        }
        let h = tau_plus.step();
        let probs = self.policy.action_probs(tau_plus, b)?;
        let mut val = 0.0;
        for (a, &pa) in probs.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let mut q = self.model.reward_belief(b.probs(), a);
            if h < self.depth {
                let obs_p = obs_predictive(self.model, b, a, self.order);
                let mut future = 0.0;
                for (o, &po) in obs_p.iter().enumerate() {
                    if po == 0.0 {
                        continue;
                    }
                    let child = tau_plus.child_plus(a, o)?;
                    let bc = belief_update(self.model, b, a, o, self.order)?;
                    future += po * self.go(&child, &bc)?;
                }
                q += self.disc * future;
            }
            val += pa * q;
        }
        self.v.insert(tau_plus.canonical(), val);
        Ok(val)
    }
}

/// Exact J(pi) and per-node values on the depth-truncated history tree.
///
/// For discounted models the reported tail bound is gamma^depth rmax/(1-gamma);
/// finite-horizon models are evaluated to exactly min(depth, H) steps and the
/// tail is zero once depth >= H.
pub fn exact_value(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    depth: usize,
    order: UpdateOrder,
    node_cap: usize,
) -> Result<ValueReport> {
    if depth == 0 {
        return Err(Error::DomainMismatch("evaluation depth must be >= 1".into()));
    }
    let depth = match model.horizon {
        Some(h) => depth.min(h),
        None => depth,
    };
    let mut walk = ValueWalk {
        model,
        policy,
        order,
        depth,
        disc: model.discount(),
        cap: node_cap,
        nodes: 0,
        v: BTreeMap::new(),
    };
    let p1 = initial_obs_dist(model);
    let mut j = 0.0;
    for (o, &po) in p1.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let tau = History::new(vec![o], vec![])?;
        let b = initial_belief(model, o)?;
        j += po * walk.go(&tau, &b)?;
    }
    Ok(ValueReport {
        j,
        v: walk.v,
        tail_bound: model.value_tail_bound(depth),
        depth,
        nodes: walk.nodes,
    })
}

/// Monte-Carlo estimate of J(pi): mean discounted (or plain, finite-horizon)
/// return over n rollouts of the given length. Returns (mean, standard error).
pub fn mc_value(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    steps: usize,
    n: usize,
    master_seed: u64,
    order: UpdateOrder,
) -> Result<(f64, f64)> {
    let steps = match model.horizon {
        Some(h) => steps.min(h),
        None => steps,
    };
    let disc = model.discount();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n {
        let mut rng = stream(master_seed, "mc-rollout", i as u64);
        let traj = sample_trajectory(model, policy, steps, order, &mut rng)?;
        let mut ret = 0.0;
        let mut w = 1.0;
        for step in &traj {
            ret += w * step.reward;
            w *= disc;
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let se = (var / n as f64).sqrt();
    Ok((mean, se))
}
