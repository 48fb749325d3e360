//! The min-max future-dependent value estimator over behavior trajectories.
//!
//! A candidate value function V scores future pairs; a test function theta
//! scores action-boundary histories. The inner objective accumulates, per
//! step, the single-ratio-weighted temporal difference of V tested against
//! theta, minus the quadratic regularizer. Maximized over a rich theta
//! class this recovers half the summed squared history-conditioned Bellman
//! residual of V, so the outer argmin looks for a V whose residual the
//! theta class cannot detect. Terminal convention: V of the step-(H+1)
//! future is zero.
//!
//! Memory truncation windows every argument (theta's history, V's attached
//! history, and the policies, which window internally when built that way);
//! each trajectory term can additionally carry an importance weight
//! correcting the behavior law to the windowed one.

use abstraction::FunctionTable;
use offline_data::{D2Dataset, D2Trajectory};
use pomdp_core::residual::enumerate_futures;
use pomdp_core::{
    belief_update, initial_belief, BeliefPolicy, Future, History, TabularPOMDP, UpdateOrder,
};

use crate::class::{argmin_lowest_index, EstimateMode, EstimateResult, FunctionClass};
use crate::error::{Error, Result};
use crate::exact::enumerate_paths;
use crate::reduce::sharded_mean;

/// The action ratio mu(a, tau-plus) = pi_e(a | tau-plus) / pi_b(a | tau-plus)
/// together with the model needed to filter beliefs along a trajectory.
#[derive(Clone, Copy)]
pub struct MuSpec<'a> {
    pub pi_e: &'a BeliefPolicy,
    pub pi_b: &'a BeliefPolicy,
    pub model: &'a TabularPOMDP,
    pub order: UpdateOrder,
}

fn window_future(f: Future, t: Option<usize>) -> Future {
    match t {
        Some(t) => f.with_windowed_history(t),
        None => f,
    }
}

fn window_history(tau: &History, t: Option<usize>) -> History {
    match t {
        Some(t) => tau.window(t),
        None => tau.clone(),
    }
}

/// One trajectory's inner-objective term, truncation-aware. The belief is
/// filtered forward once; policies see the full plus history (window-built
/// policies truncate themselves).
fn trajectory_objective(
    v: &FunctionTable,
    theta: &FunctionTable,
    mu: &MuSpec,
    t: Option<usize>,
    traj: &D2Trajectory,
) -> Result<f64> {
    let steps = traj.steps.len();
    if steps == 0 {
        return Err(Error::Invalid("trajectory with no steps".into()));
    }
    let obs: Vec<usize> = traj.steps.iter().map(|s| s.0).collect();
    let acts: Vec<usize> = traj.steps.iter().map(|s| s.1).collect();

    let future_at = |h: usize| -> Result<Future> {
        let attached = History::new(obs[..h - 1].to_vec(), acts[..h - 1].to_vec())?;
        let f = Future::new(obs[h - 1..].to_vec(), acts[h - 1..].to_vec(), attached)?;
        Ok(window_future(f, t))
    };

    let mut total = 0.0;
    let mut belief = initial_belief(mu.model, obs[0])?;
    for h in 1..=steps {
        if h > 1 {
            belief = belief_update(mu.model, &belief, acts[h - 2], obs[h - 1], mu.order)?;
        }
        let tau = History::new(obs[..h - 1].to_vec(), acts[..h - 1].to_vec())?;
        let tau_plus = History::new(obs[..h].to_vec(), acts[..h - 1].to_vec())?;
        let a = acts[h - 1];
        let pb = mu.pi_b.action_probs(&tau_plus, &belief)?[a];
        if pb == 0.0 {
            return Err(Error::Core(pomdp_core::Error::SupportViolation {
                what: "behavior policy probability",
                context: format!("action {a} at {:?}", tau_plus.canonical()),
            }));
        }
        let mu_h = mu.pi_e.action_probs(&tau_plus, &belief)?[a] / pb;
        let r_h = traj.steps[h - 1].2;
        let v_cur = v.at_future(&future_at(h)?.canonical())?;
        let v_next = if h < steps {
            v.at_future(&future_at(h + 1)?.canonical())?
        } else {
            0.0
        };
        let th = theta.at_history(&window_history(&tau, t).canonical())?;
        total += (mu_h * (r_h + v_next) - v_cur) * th - 0.5 * th * th;
    }
    Ok(total)
}

fn inner_objective(
    v: &FunctionTable,
    theta: &FunctionTable,
    data: &D2Dataset,
    mu: &MuSpec,
    t: Option<usize>,
    w_phi: Option<&[f64]>,
) -> Result<f64> {
    data.meta.check_model(mu.model)?;
    if data.meta.order != mu.order {
        return Err(Error::Core(pomdp_core::Error::DomainMismatch(format!(
            "dataset was generated {:?} but the ratio spec filters {:?}",
            data.meta.order, mu.order
        ))));
    }
    if data.trajectories.is_empty() {
        return Err(Error::Invalid("trajectory dataset is empty".into()));
    }
    if let Some(w) = w_phi {
        if w.len() != data.trajectories.len() {
            return Err(Error::Invalid(format!(
                "{} weights for {} trajectories",
                w.len(),
                data.trajectories.len()
            )));
        }
        let rows: Vec<(f64, &D2Trajectory)> =
            w.iter().copied().zip(data.trajectories.iter()).collect();
        sharded_mean(&rows, |(wi, traj)| {
            Ok(*wi * trajectory_objective(v, theta, mu, t, traj)?)
        })
    } else {
        sharded_mean(&data.trajectories, |traj| {
            trajectory_objective(v, theta, mu, t, traj)
        })
    }
}

/// Empirical inner objective of (V, theta) on the dataset, no truncation.
pub fn fdvf_inner(
    v: &FunctionTable,
    theta: &FunctionTable,
    data: &D2Dataset,
    mu: &MuSpec,
) -> Result<f64> {
    inner_objective(v, theta, data, mu, None, None)
}

/// Population inner objective by exhaustive path enumeration under the
/// behavior policy. Latent per-path rewards are exact here: the reward
/// coefficient in the objective is measurable with respect to the past, so
/// conditioning washes the state out.
pub fn fdvf_inner_exact(v: &FunctionTable, theta: &FunctionTable, mu: &MuSpec) -> Result<f64> {
    let paths = enumerate_paths(mu.model, mu.pi_b, mu.order)?;
    let mut total = 0.0;
    for path in &paths {
        let traj = D2Trajectory {
            steps: (0..path.obs.len())
                .map(|i| (path.obs[i], path.acts[i], path.rewards[i]))
                .collect(),
        };
        total += path.prob * trajectory_objective(v, theta, mu, None, &traj)?;
    }
    Ok(total)
}

/// Exhaustive min-max fit: every V scored by its worst theta (ties to the
/// lowest index at both levels), estimate read off the winning V at the
/// first future. A window of T at or beyond the trajectory length changes
/// nothing, so such fits are normalized to the untruncated path.
pub fn fdvf_fit(
    v_class: &FunctionClass,
    theta_class: &FunctionClass,
    data: &D2Dataset,
    mu: &MuSpec,
    truncation_t: Option<usize>,
    w_phi: Option<&[f64]>,
) -> Result<EstimateResult> {
    if theta_class.members.is_empty() {
        return Err(Error::Invalid("empty test-function class".into()));
    }
    let horizon: usize = data
        .trajectories
        .first()
        .map(|traj| traj.steps.len())
        .unwrap_or(0);
    let t = truncation_t.filter(|&t| t < horizon);
    if t == Some(0) {
        return Err(Error::Invalid("memory window must be >= 1".into()));
    }

    let mut inner_max = Vec::with_capacity(v_class.members.len());
    for v in &v_class.members {
        let mut worst = f64::NEG_INFINITY;
        for theta in &theta_class.members {
            let val = inner_objective(v, theta, data, mu, t, w_phi)?;
            if val > worst {
                worst = val;
            }
        }
        inner_max.push(worst);
    }
    let chosen = argmin_lowest_index(&inner_max)?;
    let j_hat = fdvf_estimate_data(&v_class.members[chosen], data)?;
    Ok(EstimateResult {
        j_hat,
        chosen_index: chosen,
        empirical_loss: inner_max[chosen],
        n_used: data.trajectories.len(),
        mode: match t {
            Some(t) => EstimateMode::Windowed { t },
            None => EstimateMode::TrueSpace,
        },
        member_losses: inner_max,
    })
}

fn first_future(traj: &D2Trajectory) -> Result<Future> {
    let obs = traj.steps.iter().map(|s| s.0).collect();
    let acts = traj.steps.iter().map(|s| s.1).collect();
    Ok(Future::new(obs, acts, History::empty())?)
}

/// Empirical value estimate: the dataset mean of V at the whole-trajectory
/// future. The attached history of a first future is empty, so truncation
/// never changes this.
pub fn fdvf_estimate_data(v: &FunctionTable, data: &D2Dataset) -> Result<f64> {
    if data.trajectories.is_empty() {
        return Err(Error::Invalid("trajectory dataset is empty".into()));
    }
    sharded_mean(&data.trajectories, |traj| {
        Ok(v.at_future(&first_future(traj)?.canonical())?)
    })
}

/// Exact value estimate: E over the behavior law of V at the first future,
/// by enumeration.
pub fn fdvf_estimate_exact(
    v: &FunctionTable,
    model: &TabularPOMDP,
    pi_b: &BeliefPolicy,
    order: UpdateOrder,
) -> Result<f64> {
    let futures = enumerate_futures(model, pi_b, &History::empty(), order)?;
    let mut total = 0.0;
    for (f, p) in &futures {
        total += p * v.at_future(&f.canonical())?;
    }
    Ok(total)
}
