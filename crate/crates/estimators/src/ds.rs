//! Bellman-error minimization over double-sampled records.
//!
//! Each record carries two conditionally independent successor draws for the
//! same (prefix, action), so the product of the two temporal-difference
//! factors is an unbiased estimate of the squared Bellman residual; the
//! conditional variance that plagues the single-sample squared TD objective
//! cancels in expectation. The fit is an exhaustive argmin over an explicit
//! finite class, true-space (tables keyed by history) or abstract-space
//! (tables keyed by abstraction class).

use abstraction::{AbstractionMap, FunctionTable};
use offline_data::{D1Dataset, D1Record};
use pomdp_core::{belief_of_history, initial_belief, initial_obs_dist, BeliefPolicy, History, TabularPOMDP, UpdateOrder};

use crate::class::{argmin_lowest_index, EstimateMode, EstimateResult, FunctionClass};
use crate::error::{Error, Result};
use crate::reduce::sharded_mean;

/// Which space the candidate functions live in.
///
/// True space keys tables by the canonical plus-history (one key per
/// reachable belief) and scores successor actions with the evaluation
/// policy. Abstract space keys tables by abstraction class and scores with
/// the induced policy rows, one distribution per class.
#[derive(Clone, Copy)]
pub enum DsMode<'a> {
    TrueSpace {
        pi: &'a BeliefPolicy,
    },
    Abstract {
        phi: &'a AbstractionMap,
        pi_phi: &'a [Vec<f64>],
    },
}

impl DsMode<'_> {
    fn estimate_mode(&self) -> EstimateMode {
        match self {
            DsMode::TrueSpace { .. } => EstimateMode::TrueSpace,
            DsMode::Abstract { phi, .. } => EstimateMode::Abstract {
                classes: phi.n_states(),
            },
        }
    }
}

fn slot_of(phi: &AbstractionMap, tau: &History) -> Result<usize> {
    let key = tau.canonical();
    phi.slot_of(&key).ok_or_else(|| {
        Error::Core(pomdp_core::Error::DomainMismatch(format!(
            "history {key:?} has no abstraction class"
        )))
    })
}

/// f(b', pi) for one successor: the action-averaged table value at the
/// successor history (true space) or its class (abstract space).
fn successor_value(
    f: &FunctionTable,
    mode: &DsMode,
    model: &TabularPOMDP,
    order: UpdateOrder,
    next: &History,
) -> Result<f64> {
    match mode {
        DsMode::TrueSpace { pi } => {
            let b = belief_of_history(model, next, order)?;
            let probs = pi.action_probs(next, &b)?;
            let key = next.canonical();
            let mut v = 0.0;
            for (a, &pa) in probs.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                v += pa * f.at_history_action(&key, a)?;
            }
            Ok(v)
        }
        DsMode::Abstract { phi, pi_phi } => {
            let x = slot_of(phi, next)?;
            let row = pi_phi.get(x).ok_or_else(|| {
                Error::Invalid(format!("induced policy has no row for class {x}"))
            })?;
            let mut v = 0.0;
            for (a, &pa) in row.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                v += pa * f.at_state_action(x, a)?;
            }
            Ok(v)
        }
    }
}

fn record_product(
    f: &FunctionTable,
    mode: &DsMode,
    model: &TabularPOMDP,
    order: UpdateOrder,
    gamma: f64,
    rec: &D1Record,
) -> Result<f64> {
    let fa = match mode {
        DsMode::TrueSpace { .. } => f.at_history_action(&rec.prefix.canonical(), rec.action)?,
        DsMode::Abstract { phi, .. } => {
            f.at_state_action(slot_of(phi, &rec.prefix)?, rec.action)?
        }
    };
    let va = successor_value(f, mode, model, order, &rec.next_a()?)?;
    let vb = successor_value(f, mode, model, order, &rec.next_b()?)?;
    let side_a = fa - (rec.reward_a + gamma * va);
    let side_b = fa - (rec.reward_b + gamma * vb);
    Ok(side_a * side_b)
}

/// Empirical paired Bellman loss of one candidate over the dataset.
pub fn ds_loss(
    f: &FunctionTable,
    mode: &DsMode,
    model: &TabularPOMDP,
    data: &D1Dataset,
) -> Result<f64> {
    data.meta.check_model(model)?;
    if data.records.is_empty() {
        return Err(Error::Invalid("double-sampled dataset is empty".into()));
    }
    let order = data.meta.order;
    let gamma = model.discount();
    sharded_mean(&data.records, |rec| {
        record_product(f, mode, model, order, gamma, rec)
    })
}

/// Plug-in value of `f` under o1: average over the initial observation of
/// the action-averaged table value at the one-step history (or its class).
/// The one-observation belief is the d0 posterior in both generative
/// stories, so no story argument is needed here.
pub fn estimate_j(f: &FunctionTable, mode: &DsMode, model: &TabularPOMDP) -> Result<f64> {
    let mut j = 0.0;
    for (o1, &po) in initial_obs_dist(model).iter().enumerate() {
        if po == 0.0 {
            continue;
        }
        let tau = History::new(vec![o1], vec![])?;
        let v = match mode {
            DsMode::TrueSpace { pi } => {
                let b = initial_belief(model, o1)?;
                let probs = pi.action_probs(&tau, &b)?;
                let key = tau.canonical();
                let mut v = 0.0;
                for (a, &pa) in probs.iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    v += pa * f.at_history_action(&key, a)?;
                }
                v
            }
            DsMode::Abstract { phi, pi_phi } => {
                let x = slot_of(phi, &tau)?;
                let row = pi_phi.get(x).ok_or_else(|| {
                    Error::Invalid(format!("induced policy has no row for class {x}"))
                })?;
                let mut v = 0.0;
                for (a, &pa) in row.iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    v += pa * f.at_state_action(x, a)?;
                }
                v
            }
        };
        j += po * v;
    }
    Ok(j)
}

/// Exhaustive fit: score every member, keep the lowest loss (ties to the
/// lowest index), and read the value estimate off the winner.
pub fn ds_fit(
    class: &FunctionClass,
    mode: &DsMode,
    model: &TabularPOMDP,
    data: &D1Dataset,
) -> Result<EstimateResult> {
    let losses = class
        .members
        .iter()
        .map(|f| ds_loss(f, mode, model, data))
        .collect::<Result<Vec<f64>>>()?;
    let chosen = argmin_lowest_index(&losses)?;
    let j_hat = estimate_j(&class.members[chosen], mode, model)?;
    Ok(EstimateResult {
        j_hat,
        chosen_index: chosen,
        empirical_loss: losses[chosen],
        n_used: data.records.len(),
        mode: mode.estimate_mode(),
        member_losses: losses,
    })
}
