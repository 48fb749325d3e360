//! Exact enumeration oracles over finite-horizon models: full latent path
//! laws under a policy, and value/residual quantities conditioned on the
//! latent state. Everything walks the tree exhaustively, so these are for
//! small fixtures and test oracles, not for data-scale use.
//!
//! State-conditioned walks exist only for the predict-first story. Under
//! update-first the next observation is emitted by the pre-transition state,
//! so (state, history) is not a sufficient statistic there; use the full
//! path law instead.

use std::collections::BTreeMap;

use pomdp_core::residual::FutureValueFn;
use pomdp_core::{
    belief_of_history, initial_belief, belief_update, BeliefPolicy, Future, History, TabularPOMDP,
    UpdateOrder,
};

use crate::error::{Error, Result};

/// One complete latent trajectory with its probability: the state occupied
/// at each step, what was observed, what was done, and the reward collected.
#[derive(Debug, Clone)]
pub struct Path {
    pub states: Vec<usize>,
    pub obs: Vec<usize>,
    pub acts: Vec<usize>,
    pub rewards: Vec<f64>,
    pub prob: f64,
}

impl Path {
    /// tau_h: everything strictly before the step-h observation.
    pub fn boundary(&self, h: usize) -> History {
        History::new(self.obs[..h - 1].to_vec(), self.acts[..h - 1].to_vec())
            .expect("prefix of a valid path alternates")
    }

    /// tau_h-plus: the boundary extended by o_h.
    pub fn plus(&self, h: usize) -> History {
        History::new(self.obs[..h].to_vec(), self.acts[..h - 1].to_vec())
            .expect("prefix of a valid path alternates")
    }

    /// f_h: the forward segment from step h attached to tau_h.
    pub fn future(&self, h: usize) -> Future {
        Future::new(
            self.obs[h - 1..].to_vec(),
            self.acts[h - 1..].to_vec(),
            self.boundary(h),
        )
        .expect("suffix of a valid path alternates")
    }
}

pub(crate) fn require_horizon(model: &TabularPOMDP) -> Result<usize> {
    model.horizon.ok_or(Error::Core(pomdp_core::Error::BadDiscount {
        gamma: model.gamma,
        horizon: None,
    }))
}

pub(crate) fn require_predict_first(order: UpdateOrder, what: &str) -> Result<()> {
    if order != UpdateOrder::PredictFirst {
        return Err(Error::Core(pomdp_core::Error::DomainMismatch(format!(
            "{what} conditions on (state, history), which only determines the future \
             under the predict-first story"
        ))));
    }
    Ok(())
}

/// Every positive-probability latent path of a finite-horizon model under
/// `policy`, with exact probabilities.
pub fn enumerate_paths(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    order: UpdateOrder,
) -> Result<Vec<Path>> {
    let horizon = require_horizon(model)?;

    struct Walk<'w> {
        model: &'w TabularPOMDP,
        policy: &'w BeliefPolicy,
        order: UpdateOrder,
        horizon: usize,
        states: Vec<usize>,
        obs: Vec<usize>,
        acts: Vec<usize>,
        rewards: Vec<f64>,
        out: Vec<Path>,
    }

    impl Walk<'_> {
        // at step h = obs.len(), current state emitted the last observation's
        // step; tau carries the plus history and b its filter belief
        fn go(&mut self, state: usize, tau: &History, b: &pomdp_core::Belief, p: f64) -> Result<()> {
            let h = self.obs.len();
            let action_p = self.policy.action_probs(tau, b)?;
            for (a, &pa) in action_p.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                self.acts.push(a);
                self.rewards.push(self.model.reward[state][a]);
                if h == self.horizon {
                    self.out.push(Path {
                        states: self.states.clone(),
                        obs: self.obs.clone(),
                        acts: self.acts.clone(),
                        rewards: self.rewards.clone(),
                        prob: p * pa,
                    });
                } else {
                    match self.order {
                        UpdateOrder::UpdateFirst => {
                            for (o, &po) in self.model.emission[state].iter().enumerate() {
                                if po == 0.0 {
                                    continue;
                                }
                                for (s2, &ps) in
                                    self.model.transition[state][a].iter().enumerate()
                                {
                                    if ps == 0.0 {
                                        continue;
                                    }
                                    self.step(s2, a, o, tau, b, p * pa * po * ps)?;
                                }
                            }
                        }
                        UpdateOrder::PredictFirst => {
                            for (s2, &ps) in self.model.transition[state][a].iter().enumerate() {
                                if ps == 0.0 {
                                    continue;
                                }
                                for (o, &po) in self.model.emission[s2].iter().enumerate() {
                                    if po == 0.0 {
                                        continue;
                                    }
                                    self.step(s2, a, o, tau, b, p * pa * ps * po)?;
                                }
                            }
                        }
                    }
                }
                self.acts.pop();
                self.rewards.pop();
            }
            Ok(())
        }

        fn step(
            &mut self,
            s2: usize,
            a: usize,
            o: usize,
            tau: &History,
            b: &pomdp_core::Belief,
            p: f64,
        ) -> Result<()> {
            let child = tau.child_plus(a, o)?;
            let bc = belief_update(self.model, b, a, o, self.order)?;
            self.states.push(s2);
            self.obs.push(o);
            self.go(s2, &child, &bc, p)?;
            self.states.pop();
            self.obs.pop();
            Ok(())
        }
    }

    let mut walk = Walk {
        model,
        policy,
        order,
        horizon,
        states: Vec::new(),
        obs: Vec::new(),
        acts: Vec::new(),
        rewards: Vec::new(),
        out: Vec::new(),
    };
    for (s1, &ds) in model.d0.iter().enumerate() {
        if ds == 0.0 {
            continue;
        }
        for (o1, &po) in model.emission[s1].iter().enumerate() {
            if po == 0.0 {
                continue;
            }
            let tau = History::new(vec![o1], vec![])?;
            let b = initial_belief(model, o1)?;
            walk.states.push(s1);
            walk.obs.push(o1);
            walk.go(s1, &tau, &b, ds * po)?;
            walk.states.pop();
            walk.obs.pop();
        }
    }
    Ok(walk.out)
}

/// Joint law of (s_h, tau_h) at the step-h action boundary, keyed by
/// (state, canonical history).
pub fn state_history_law(paths: &[Path], h: usize) -> BTreeMap<(usize, String), f64> {
    let mut out: BTreeMap<(usize, String), f64> = BTreeMap::new();
    for path in paths {
        let key = (path.states[h - 1], path.boundary(h).canonical());
        *out.entry(key).or_insert(0.0) += path.prob;
    }
    out
}

/// Conditional law of the future pair f_h given (s_h, tau_h), normalized
/// within each conditioning cell.
pub fn conditional_future_law(
    paths: &[Path],
    h: usize,
) -> BTreeMap<(usize, String), Vec<(Future, f64)>> {
    let mut grouped: BTreeMap<(usize, String), BTreeMap<Future, f64>> = BTreeMap::new();
    for path in paths {
        let key = (path.states[h - 1], path.boundary(h).canonical());
        *grouped
            .entry(key)
            .or_default()
            .entry(path.future(h))
            .or_insert(0.0) += path.prob;
    }
    grouped
        .into_iter()
        .map(|(key, futures)| {
            let mass: f64 = futures.values().sum();
            let rows = futures.into_iter().map(|(f, p)| (f, p / mass)).collect();
            (key, rows)
        })
        .collect()
}

/// Law of the future pair f_h started from latent state `s` at the
/// action-boundary history `tau`, actions from `policy`. Predict-first only.
pub fn futures_given_state(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    s: usize,
    tau: &History,
    order: UpdateOrder,
) -> Result<Vec<(Future, f64)>> {
    require_predict_first(order, "futures_given_state")?;
    let horizon = require_horizon(model)?;
    let h = tau.step();
    if h > horizon {
        return Ok(vec![(Future::new(vec![], vec![], tau.clone())?, 1.0)]);
    }

    struct Walk<'w> {
        model: &'w TabularPOMDP,
        policy: &'w BeliefPolicy,
        horizon: usize,
        start: &'w History,
        fwd_obs: Vec<usize>,
        fwd_acts: Vec<usize>,
        out: Vec<(Future, f64)>,
    }

    impl Walk<'_> {
        fn go(&mut self, state: usize, tau: &History, p: f64) -> Result<()> {
            for (o, &po) in self.model.emission[state].iter().enumerate() {
                if po == 0.0 {
                    continue;
                }
                let mut plus = tau.clone();
                plus.push_obs(o)?;
                let b = belief_of_history(self.model, &plus, UpdateOrder::PredictFirst)?;
                let action_p = self.policy.action_probs(&plus, &b)?;
                self.fwd_obs.push(o);
                for (a, &pa) in action_p.iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    self.fwd_acts.push(a);
                    if plus.step() == self.horizon {
                        self.out.push((
                            Future::new(
                                self.fwd_obs.clone(),
                                self.fwd_acts.clone(),
                                self.start.clone(),
                            )?,
                            p * po * pa,
                        ));
                    } else {
                        let boundary = {
                            let mut t = plus.clone();
                            t.push_act(a)?;
                            t
                        };
                        for (s2, &ps) in self.model.transition[state][a].iter().enumerate() {
                            if ps == 0.0 {
                                continue;
                            }
                            self.go(s2, &boundary, p * po * pa * ps)?;
                        }
                    }
                    self.fwd_acts.pop();
                }
                self.fwd_obs.pop();
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        model,
        policy,
        horizon,
        start: tau,
        fwd_obs: Vec::new(),
        fwd_acts: Vec::new(),
        out: Vec::new(),
    };
    walk.go(s, tau, 1.0)?;
    Ok(walk.out)
}

/// Expected remaining return from latent state `s` at the action-boundary
/// history `tau`, all actions from `pi`. Predict-first only.
pub fn value_to_go(
    model: &TabularPOMDP,
    pi: &BeliefPolicy,
    s: usize,
    tau: &History,
    order: UpdateOrder,
) -> Result<f64> {
    require_predict_first(order, "value_to_go")?;
    let horizon = require_horizon(model)?;
    let h = tau.step();
    if h > horizon {
        return Ok(0.0);
    }
    let mut v = 0.0;
    for (o, &po) in model.emission[s].iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let mut plus = tau.clone();
        plus.push_obs(o)?;
        let b = belief_of_history(model, &plus, order)?;
        let action_p = pi.action_probs(&plus, &b)?;
        for (a, &pa) in action_p.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let mut total = model.reward[s][a];
            if h < horizon {
                let boundary = {
                    let mut t = plus.clone();
                    t.push_act(a)?;
                    t
                };
                for (s2, &ps) in model.transition[s][a].iter().enumerate() {
                    if ps == 0.0 {
                        continue;
                    }
                    total += ps * value_to_go(model, pi, s2, &boundary, order)?;
                }
            }
            v += po * pa * total;
        }
    }
    Ok(v)
}

/// One-step residual of `v` at (s_h, tau_h): the evaluation policy picks a_h
/// (behavior afterwards), minus the all-behavior baseline. The
/// state-conditioned counterpart of `pomdp_core::residual::bellman_residual_h`.
/// Predict-first only.
pub fn residual_given_state<V: FutureValueFn + ?Sized>(
    model: &TabularPOMDP,
    pi_e: &BeliefPolicy,
    pi_b: &BeliefPolicy,
    v: &V,
    s: usize,
    tau: &History,
    order: UpdateOrder,
) -> Result<f64> {
    require_predict_first(order, "residual_given_state")?;
    let horizon = require_horizon(model)?;
    let h = tau.step();

    let mut term1 = 0.0;
    for (o, &po) in model.emission[s].iter().enumerate() {
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
            let mut total = model.reward[s][a];
            if h < horizon {
                let boundary = {
                    let mut t = plus.clone();
                    t.push_act(a)?;
                    t
                };
                for (s2, &ps) in model.transition[s][a].iter().enumerate() {
                    if ps == 0.0 {
                        continue;
                    }
                    let fv: f64 = futures_given_state(model, pi_b, s2, &boundary, order)?
                        .iter()
                        .map(|(f, p)| p * v.value(f))
                        .sum();
                    total += ps * fv;
                }
            }
            term1 += po * pa * total;
        }
    }

    let term2: f64 = futures_given_state(model, pi_b, s, tau, order)?
        .iter()
        .map(|(f, p)| p * v.value(f))
        .sum();
    Ok(term1 - term2)
}
