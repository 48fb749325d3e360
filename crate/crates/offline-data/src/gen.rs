//! Dataset generators. Every record draws from its own RNG stream named by
//! (seed, label, index), so generation parallelizes over records without the
//! worker count or scheduling order ever changing the output.

use pomdp_core::{
    continue_from_belief, sample_prefix, sample_trajectory, stream, BeliefPolicy, TabularPOMDP,
    UpdateOrder,
};
use rayon::prelude::*;

use crate::dataset::{D1Dataset, D2Dataset};
use crate::dist::PrefixDist;
use crate::error::Result;
use crate::meta::{DatasetKind, DatasetMeta};
use crate::record::{D1Mode, D1Record, D2Trajectory};

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Draw n double-sampled records under the behavior policy. The prefix
/// length follows `dist`; both successor tuples restart from the prefix
/// belief (the simulator reset), so their laws coincide, and in
/// independent-redraw mode they are conditionally independent as well.
pub fn gen_d1(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    n: usize,
    dist: &PrefixDist,
    mode: D1Mode,
    order: UpdateOrder,
    seed: u64,
) -> Result<D1Dataset> {
    model.validate()?;
    dist.validate()?;
    let records = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "d1-record", i as u64);
            let h = dist.sample(&mut rng);
            let (prefix, belief, _) = sample_prefix(model, policy, h, order, &mut rng)?;
            let probs = policy.action_probs(&prefix, &belief)?;
            let action = pomdp_core::sample_categorical(&mut rng, &probs);
            let (reward_a, obs_a) = continue_from_belief(model, &belief, action, order, &mut rng);
            let (reward_b, obs_b) = match mode {
                D1Mode::IndependentRedraw => {
                    continue_from_belief(model, &belief, action, order, &mut rng)
                }
                D1Mode::SharedReward => {
                    let (_, o) = continue_from_belief(model, &belief, action, order, &mut rng);
                    (reward_a, o)
                }
            };
            Ok(D1Record {
                h,
                prefix,
                action,
                reward_a,
                obs_a,
                reward_b,
                obs_b,
                mode,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(D1Dataset {
        meta: DatasetMeta {
            kind: DatasetKind::D1,
            model_hash: model.content_hash(),
            policy_hash: policy.content_hash(),
            n,
            seed,
            order,
            prefix_law: Some(dist.clone()),
            mode: Some(mode),
            horizon: None,
            generator_version: GENERATOR_VERSION.to_string(),
        },
        records,
    })
}

/// Roll out n full H-step trajectories under the behavior policy.
pub fn gen_d2(
    model: &TabularPOMDP,
    policy: &BeliefPolicy,
    n: usize,
    horizon: usize,
    order: UpdateOrder,
    seed: u64,
) -> Result<D2Dataset> {
    model.validate()?;
    if horizon == 0 {
        return Err(pomdp_core::Error::DomainMismatch(
            "trajectory horizon must be >= 1".to_string(),
        )
        .into());
    }
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "d2-trajectory", i as u64);
            let steps = sample_trajectory(model, policy, horizon, order, &mut rng)?;
            Ok(D2Trajectory {
                steps: steps.into_iter().map(|s| (s.obs, s.action, s.reward)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(D2Dataset {
        meta: DatasetMeta {
            kind: DatasetKind::D2,
            model_hash: model.content_hash(),
            policy_hash: policy.content_hash(),
            n,
            seed,
            order,
            prefix_law: None,
            mode: None,
            horizon: Some(horizon),
            generator_version: GENERATOR_VERSION.to_string(),
        },
        trajectories,
    })
}
