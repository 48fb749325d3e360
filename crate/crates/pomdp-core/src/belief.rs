//! Beliefs and the exact Bayes filter under both timing conventions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{History, Phase};
use crate::model::{TabularPOMDP, UpdateOrder};

/// Construction tolerance on the probability-vector invariant.
pub const BELIEF_SUM_TOL: f64 = 1e-10;

/// Posterior over latent states; a point of the simplex over S.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    probs: Vec<f64>,
}

impl Belief {
    /// Validates nonnegativity and normalization within 1e-10, then stores
    /// the exactly renormalized vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        let min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 0.0 || (sum - 1.0).abs() > BELIEF_SUM_TOL {
            return Err(Error::NonStochasticRow {
                kind: "belief",
                index: 0,
                sum,
                min_entry: min,
            });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Belief { probs })
    }

    pub fn one_hot(n: usize, s: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[s] = 1.0;
        Belief { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Belief {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// L1 distance; at most 2 for any pair of beliefs.
    pub fn l1(&self, other: &Belief) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn is_one_hot(&self, tol: f64) -> bool {
        self.probs.iter().any(|&p| (p - 1.0).abs() <= tol)
    }
}

/// Bayes posterior of `prior` given observation `o` emitted by the state the
/// prior ranges over. Unnormalized mass prior(s)*emission(o|s).
pub fn posterior(model: &TabularPOMDP, prior: &[f64], o: usize, context: &str) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = prior
        .iter()
        .enumerate()
        .map(|(s, &p)| p * model.emission[s][o])
        .collect();
    let norm: f64 = out.iter().sum();
    if norm <= 0.0 {
        return Err(Error::UnreachableObservation {
            obs: o,
            context: context.to_string(),
        });
    }
    for x in out.iter_mut() {
        *x /= norm;
    }
    Ok(out)
}

/// Push a state distribution through action `a`.
pub fn predict(model: &TabularPOMDP, probs: &[f64], a: usize) -> Vec<f64> {
    let mut out = vec![0.0; model.n_states];
    for (s, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (s2, &t) in model.transition[s][a].iter().enumerate() {
            out[s2] += p * t;
        }
    }
    out
}

/// One filter step b(tau_h-plus) -> b(tau_{h+1}-plus) for action a and
/// observation o.
///
/// Update-first conditions b on o (the observation is emitted by the current
/// state) and then predicts through a; predict-first predicts first and
/// conditions on an observation emitted by the successor.
pub fn belief_update(
    model: &TabularPOMDP,
    b: &Belief,
    a: usize,
    o: usize,
    order: UpdateOrder,
) -> Result<Belief> {
    let probs = match order {
        UpdateOrder::UpdateFirst => {
            let post = posterior(model, b.probs(), o, "update-first posterior")?;
            predict(model, &post, a)
        }
        UpdateOrder::PredictFirst => {
            let pred = predict(model, b.probs(), a);
            posterior(model, &pred, o, "predict-first posterior")?
        }
    };
    Belief::new(probs)
}

/// Distribution of the next observation given belief b and action a. Under
/// update-first this is action-independent (the current state emits); under
/// predict-first the successor state emits.
pub fn obs_predictive(model: &TabularPOMDP, b: &Belief, a: usize, order: UpdateOrder) -> Vec<f64> {
    let source = match order {
        UpdateOrder::UpdateFirst => b.probs().to_vec(),
        UpdateOrder::PredictFirst => predict(model, b.probs(), a),
    };
    let mut out = vec![0.0; model.n_obs];
    for (s, &p) in source.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &e) in model.emission[s].iter().enumerate() {
            out[o] += p * e;
        }
    }
    out
}

/// Distribution of the first observation: the emission pushed through d0.
/// Identical under both orders.
pub fn initial_obs_dist(model: &TabularPOMDP) -> Vec<f64> {
    let mut out = vec![0.0; model.n_obs];
    for (s, &p) in model.d0.iter().enumerate() {
        for (o, &e) in model.emission[s].iter().enumerate() {
            out[o] += p * e;
        }
    }
    out
}

/// b(tau_1-plus): posterior of d0 on the first observation.
pub fn initial_belief(model: &TabularPOMDP, o1: usize) -> Result<Belief> {
    Belief::new(posterior(model, &model.d0, o1, "initial observation")?)
}

/// Fold the filter over a plus-shaped history.
pub fn belief_of_history(model: &TabularPOMDP, tau: &History, order: UpdateOrder) -> Result<Belief> {
    if tau.phase() != Phase::Plus {
        return Err(Error::DomainMismatch(
            "beliefs are defined on plus-shaped histories only".into(),
        ));
    }
    let mut b = initial_belief(model, tau.obs[0])?;
    for k in 0..tau.acts.len() {
        b = belief_update(model, &b, tau.acts[k], tau.obs[k + 1], order)?;
    }
    Ok(b)
}

/// P(o_h | tau_h): predictive of the step-h observation given the
/// action-boundary history. Needs the previous belief plus the last action
/// (predict-first) or just the previous belief (update-first); at h=1 it is
/// the initial observation distribution under either order.
pub fn obs_prob_given_tau(
    model: &TabularPOMDP,
    tau: &History,
    order: UpdateOrder,
) -> Result<Vec<f64>> {
    if tau.phase() != Phase::ActionBoundary {
        return Err(Error::DomainMismatch(
            "observation predictive conditions on an action-boundary history".into(),
        ));
    }
    if tau.is_empty() {
        return Ok(initial_obs_dist(model));
    }
    let prev_plus = History {
        obs: tau.obs.clone(),
        acts: tau.acts[..tau.acts.len() - 1].to_vec(),
    };
    let b = belief_of_history(model, &prev_plus, order)?;
    Ok(obs_predictive(model, &b, tau.acts[tau.acts.len() - 1] , order))
}

/// The counter-example family: 2 states, 4 observations, one real action,
/// identity transition. State 1 emits (0.5, 0, 0.5-xi, xi), state 2 emits
/// (0, 0.5, xi, 0.5-xi); a single posterior step can expand belief distance
/// by 1/(4 xi).
pub fn counter_example_model(xi: f64, n_actions: usize) -> Result<TabularPOMDP> {
    if !(xi > 0.0 && xi <= 0.25) {
        return Err(Error::SchemaMismatch(format!(
            "counter-example xi must lie in (0, 0.25], got {xi}"
        )));
    }
    let m = TabularPOMDP {
        n_states: 2,
        n_actions,
        n_obs: 4,
        gamma: Some(0.9),
        horizon: None,
        rmax: 1.0,
        d0: vec![0.5, 0.5],
        transition: vec![
            vec![vec![1.0, 0.0]; n_actions],
            vec![vec![0.0, 1.0]; n_actions],
        ],
        emission: vec![
            vec![0.5, 0.0, 0.5 - xi, xi],
            vec![0.0, 0.5, xi, 0.5 - xi],
        ],
        reward: vec![vec![0.0; n_actions]; 2],
    };
    m.validate()?;
    Ok(m)
}
