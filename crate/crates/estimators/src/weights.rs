//! Importance weights correcting the trajectory law of the source system to
//! the law of its windowed surrogate.
//!
//! Per step the weight multiplies two ratios: the windowed behavior policy
//! over the true one, and the windowed model's observation predictive over
//! the true predictive. Both numerators are read off the short-memory
//! model, whose latent state is the window itself, so each step is a table
//! lookup keyed by the previous window and action.

use abstraction::ShortMemory;
use offline_data::{D2Dataset, D2Trajectory};
use pomdp_core::{
    belief_update, initial_belief, obs_prob_given_tau, BeliefPolicy, History, TabularPOMDP,
    UpdateOrder,
};

use crate::error::{Error, Result};

fn short_slot(short: &ShortMemory, plus: &History) -> Result<usize> {
    let key = plus.window(short.t).canonical();
    short.slot_of_window(&key).ok_or_else(|| {
        Error::Core(pomdp_core::Error::DomainMismatch(format!(
            "window {key:?} is not a state of the short-memory model"
        )))
    })
}

fn positive(value: f64, what: &'static str, context: String) -> Result<f64> {
    if value <= 0.0 {
        return Err(Error::Core(pomdp_core::Error::SupportViolation {
            what,
            context,
        }));
    }
    Ok(value)
}

/// w(f_1) for one trajectory: the product over steps of
/// [windowed-policy / policy] x [windowed-model obs predictive / true
/// predictive]. Returns 1 when the window covers the whole horizon and the
/// windowed inputs coincide with the true ones.
pub fn importance_weight_wphi_t(
    model: &TabularPOMDP,
    short: &ShortMemory,
    pi_b: &BeliefPolicy,
    pi_b_truncated: &BeliefPolicy,
    traj: &D2Trajectory,
    order: UpdateOrder,
) -> Result<f64> {
    if traj.steps.is_empty() {
        return Err(Error::Invalid("trajectory with no steps".into()));
    }
    let obs: Vec<usize> = traj.steps.iter().map(|s| s.0).collect();
    let acts: Vec<usize> = traj.steps.iter().map(|s| s.1).collect();
    let steps = obs.len();

    let mut weight = 1.0;
    let mut belief = initial_belief(model, obs[0])?;
    for h in 1..=steps {
        let o_h = obs[h - 1];
        let a_h = acts[h - 1];
        let tau = History::new(obs[..h - 1].to_vec(), acts[..h - 1].to_vec())?;
        let tau_plus = History::new(obs[..h].to_vec(), acts[..h - 1].to_vec())?;
        if h > 1 {
            belief = belief_update(model, &belief, acts[h - 2], o_h, order)?;
        }

        // observation ratio: the short model predicts o_h from the previous
        // window and action; exactly one window per (window, action, obs)
        // can receive mass, but sum for robustness
        let num_obs = if h == 1 {
            short
                .windows
                .iter()
                .zip(short.pomdp.d0.iter())
                .filter(|(w, _)| w.last_obs() == Some(o_h))
                .map(|(_, &p)| p)
                .sum::<f64>()
        } else {
            let prev_plus = History::new(obs[..h - 1].to_vec(), acts[..h - 2].to_vec())?;
            let w_prev = short_slot(short, &prev_plus)?;
            let row = &short.pomdp.transition[w_prev][acts[h - 2]];
            short
                .windows
                .iter()
                .zip(row.iter())
                .filter(|(w, _)| w.last_obs() == Some(o_h))
                .map(|(_, &p)| p)
                .sum::<f64>()
        };
        let den_obs = positive(
            obs_prob_given_tau(model, &tau, order)?[o_h],
            "observation probability",
            format!("observation {o_h} at {:?}", tau.canonical()),
        )?;

        // policy ratio at the full plus history; the windowed policy
        // truncates its own argument
        let den_act = positive(
            pi_b.action_probs(&tau_plus, &belief)?[a_h],
            "behavior policy probability",
            format!("action {a_h} at {:?}", tau_plus.canonical()),
        )?;
        let num_act = pi_b_truncated.action_probs(&tau_plus, &belief)?[a_h];

        weight *= (num_act / den_act) * (num_obs / den_obs);
    }
    Ok(weight)
}

/// Weights for every trajectory of a dataset, aligned by index.
pub fn importance_weights_wphi_t(
    model: &TabularPOMDP,
    short: &ShortMemory,
    pi_b: &BeliefPolicy,
    pi_b_truncated: &BeliefPolicy,
    data: &D2Dataset,
) -> Result<Vec<f64>> {
    data.meta.check_model(model)?;
    data.trajectories
        .iter()
        .map(|traj| importance_weight_wphi_t(model, short, pi_b, pi_b_truncated, traj, data.meta.order))
        .collect()
}
