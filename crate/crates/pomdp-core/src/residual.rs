//! Finite-horizon residuals of future-dependent value functions.
//!
//! A value V attaches to future pairs f_h = ((o_h, a_h, ..., o_H, a_H), tau_h).
//! The residual at tau_h plays the evaluation policy for one step and the
//! behavior policy afterwards, minus the behavior-policy baseline; summed
//! along evaluation-policy histories it telescopes to J(pi_e) - E_pi_b[V(f_1)].
//! Everything here enumerates the tree exactly, so it is meant for small
//! horizons.

use crate::belief::{
    belief_of_history, belief_update, initial_obs_dist, obs_predictive, obs_prob_given_tau, Belief,
};
use crate::error::{Error, Result};
use crate::history::{Future, History, Phase};
use crate::model::{TabularPOMDP, UpdateOrder};
use crate::policy::BeliefPolicy;

/// Anything that scores a future pair. V(f_{H+1}) is never requested; the
/// residual uses 0 for the past-horizon value by convention.
pub trait FutureValueFn {
    fn value(&self, f: &Future) -> f64;
}

impl<F: Fn(&Future) -> f64> FutureValueFn for F {
    fn value(&self, f: &Future) -> f64 {
        self(f)
    }
}

fn require_horizon(model: &TabularPOMDP) -> Result<usize> {
    model.horizon.ok_or(Error::BadDiscount {
        gamma: model.gamma,
        horizon: None,
    })
}

/// All action-boundary histories tau_h at step `h` together with their
/// probabilities under `policy`.
pub fn enumerate_action_histories(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    h: usize,
    order: UpdateOrder,
) -> Result<Vec<(History, f64)>> {
    if h == 0 {
        return Err(Error::DomainMismatch("history steps start at 1".into()));
    }
    let mut out: Vec<(History, f64)> = Vec::new();
    if h == 1 {
        out.push((History::empty(), 1.0));
        return Ok(out);
    }

    // walk plus nodes carrying the belief; stop once the boundary at `h` is reached
    fn grow(
        model: &TabularPOMDP,
        policy: &BeliefPolicy,
        order: UpdateOrder,
        h: usize,
        tau_plus: &History,
        b: &Belief,
        p: f64,
        out: &mut Vec<(History, f64)>,
    ) -> Result<()> {
        let k = tau_plus.step();
        let action_p = policy.action_probs(tau_plus, b)?;
        for (a, &pa) in action_p.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            if k + 1 == h {
                let mut tau = tau_plus.clone();
                tau.push_act(a)?;
                out.push((tau, p * pa));
                continue;
            }
            let obs_p = obs_predictive(model, b, a, order);
            for (o, &po) in obs_p.iter().enumerate() {
                if po == 0.0 {
                    continue;
                }
                let child = tau_plus.child_plus(a, o)?;
                let bc = belief_update(model, b, a, o, order)?;
                grow(model, policy, order, h, &child, &bc, p * pa * po, out)?;
            }
        }
        Ok(())
    }

    let p1 = initial_obs_dist(model);
    for (o, &po) in p1.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let tau_plus = History::new(vec![o], vec![])?;
        let b = belief_of_history(model, &tau_plus, order)?;
        grow(model, policy, order, h, &tau_plus, &b, po, &mut out)?;
    }
    Ok(out)
}

/// All future pairs f_h from the action-boundary history `tau`, with their
/// probabilities: observations from the model, actions from `policy`. Past
/// the horizon the only future is the empty one.
pub fn enumerate_futures(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    tau: &History,
    order: UpdateOrder,
) -> Result<Vec<(Future, f64)>> {
    let horizon = require_horizon(model)?;
    if tau.phase() != Phase::ActionBoundary {
        return Err(Error::DomainMismatch(
            "futures attach to action-boundary histories".into(),
        ));
    }
    let h = tau.step();
    if h > horizon {
        return Ok(vec![(Future::new(vec![], vec![], tau.clone())?, 1.0)]);
    }

    struct Walk<'w> {
        model: &'w TabularPOMDP,
        policy: &'w BeliefPolicy,
        order: UpdateOrder,
        horizon: usize,
        start: &'w History,
        out: Vec<(Future, f64)>,
    }

    impl Walk<'_> {
        // at the plus node `full` (step k) with belief b; fwd holds o_h..o_k
        // and a_h..a_{k-1}
        fn go(
            &mut self,
            full: &History,
            b: &Belief,
            fwd_obs: &mut Vec<usize>,
            fwd_acts: &mut Vec<usize>,
            p: f64,
        ) -> Result<()> {
            let k = full.step();
            let action_p = self.policy.action_probs(full, b)?;
            for (a, &pa) in action_p.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                fwd_acts.push(a);
                if k == self.horizon {
                    self.out.push((
                        Future::new(fwd_obs.clone(), fwd_acts.clone(), self.start.clone())?,
                        p * pa,
                    ));
                } else {
                    let obs_p = obs_predictive(self.model, b, a, self.order);
                    for (o, &po) in obs_p.iter().enumerate() {
                        if po == 0.0 {
                            continue;
                        }
                        fwd_obs.push(o);
                        let child = full.child_plus(a, o)?;
                        let bc = belief_update(self.model, b, a, o, self.order)?;
                        self.go(&child, &bc, fwd_obs, fwd_acts, p * pa * po)?;
                        fwd_obs.pop();
                    }
                }
                fwd_acts.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        model,
        policy,
        order,
        horizon,
        start: tau,
        out: Vec::new(),
    };
    let obs_p = obs_prob_given_tau(model, tau, order)?;
    for (o, &po) in obs_p.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let mut full = tau.clone();
        full.push_obs(o)?;
        let b = belief_of_history(model, &full, order)?;
        let mut fwd_obs = vec![o];
        let mut fwd_acts = Vec::new();
        walk.go(&full, &b, &mut fwd_obs, &mut fwd_acts, po)?;
    }
    Ok(walk.out)
}

/// One-step residual of `v` at the action-boundary history `tau`:
/// the evaluation policy chooses a_h (behavior policy afterwards), minus the
/// all-behavior baseline. Finite-horizon models only.
pub fn bellman_residual_h<V: FutureValueFn + ?Sized>(
    model: &TabularPOMDP,
    pi_e: &BeliefPolicy,
    pi_b: &BeliefPolicy,
    v: &V,
    tau: &History,
    order: UpdateOrder,
) -> Result<f64> {
    let horizon = require_horizon(model)?;
    if tau.phase() != Phase::ActionBoundary {
        return Err(Error::DomainMismatch(
            "residuals are defined at action-boundary histories".into(),
        ));
    }
    let h = tau.step();
    if h > horizon {
        return Err(Error::IndexOutOfRange {
            what: "residual step",
            index: h,
            size: horizon,
        });
    }

    let mut term1 = 0.0;
    let obs_p = obs_prob_given_tau(model, tau, order)?;
    for (o, &po) in obs_p.iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let mut plus = tau.clone();
        plus.push_obs(o)?;
        let b = belief_of_history(model, &plus, order)?;
        let action_p = pi_e.action_probs(&plus, &b)?;
        for (a, &pa) in action_p.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let er = model.reward_belief(b.probs(), a);
            let fv = if h == horizon {
                0.0
            } else {
                let mut next = plus.clone();
                next.push_act(a)?;
                enumerate_futures(model, pi_b, &next, order)?
                    .iter()
                    .map(|(f, p)| p * v.value(f))
                    .sum()
            };
            term1 += po * pa * (er + fv);
        }
    }

    let term2: f64 = enumerate_futures(model, pi_b, tau, order)?
        .iter()
        .map(|(f, p)| p * v.value(f))
        .sum();
    Ok(term1 - term2)
}
