//! Sampling-law checks against exact enumeration oracles. Bands are 3 sigma
//! on pinned seeds, so failures mean a generator bug, not noise.

use offline_data::{gen_d1, gen_d2, D1Mode, PrefixDist};
use pomdp_core::{belief_of_history, exact_value, BeliefPolicy, History, TabularPOMDP, UpdateOrder};

// two mixing states with distinct rewards and a noisy channel, so prefix
// beliefs stay interior and the reward stays genuinely random given a prefix
fn noisy_model() -> TabularPOMDP {
    TabularPOMDP {
        n_states: 2,
        n_actions: 2,
        n_obs: 2,
        gamma: Some(0.9),
        horizon: None,
        rmax: 1.0,
        d0: vec![0.5, 0.5],
        transition: vec![
            vec![vec![0.6, 0.4], vec![0.3, 0.7]],
            vec![vec![0.4, 0.6], vec![0.8, 0.2]],
        ],
        emission: vec![vec![0.7, 0.3], vec![0.3, 0.7]],
        reward: vec![vec![0.0, 0.1], vec![1.0, 0.8]],
    }
}

fn horizon_model(h: usize) -> TabularPOMDP {
    let mut m = noisy_model();
    m.gamma = None;
    m.horizon = Some(h);
    m
}

#[test]
fn independent_redraws_are_conditionally_independent() {
    let model = noisy_model();
    let policy = BeliefPolicy::uniform(2);
    // fixed prefix length 1 so records stratify on the first observation
    let dist = PrefixDist::discounted(0.0, 1);
    let order = UpdateOrder::UpdateFirst;
    let ds = gen_d1(
        &model,
        &policy,
        100_000,
        &dist,
        D1Mode::IndependentRedraw,
        order,
        20260814,
    )
    .unwrap();

    let stratum = History::parse("o0").unwrap();
    let belief = belief_of_history(&model, &stratum, order).unwrap();
    for action in 0..model.n_actions {
        let rewards: Vec<(f64, f64)> = ds
            .records
            .iter()
            .filter(|r| r.prefix == stratum && r.action == action)
            .map(|r| (r.reward_a, r.reward_b))
            .collect();
        let m = rewards.len() as f64;
        assert!(m > 10_000.0, "stratum too small: {m}");

        // sample correlation is ~ N(0, 1/m) under conditional independence
        let mean_a = rewards.iter().map(|p| p.0).sum::<f64>() / m;
        let mean_b = rewards.iter().map(|p| p.1).sum::<f64>() / m;
        let mut cov = 0.0;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        for (a, b) in &rewards {
            cov += (a - mean_a) * (b - mean_b);
            var_a += (a - mean_a) * (a - mean_a);
            var_b += (b - mean_b) * (b - mean_b);
        }
        let corr = cov / (var_a.sqrt() * var_b.sqrt());
        assert!(corr.abs() < 3.0 / m.sqrt(), "corr {corr} at m {m}");

        // joint hit rate of (rA = r(s1), rB = r(s1)) against the exact
        // product of the stratum belief with itself
        let p1 = belief.probs()[1];
        let target = model.reward[1][action];
        let joint = rewards
            .iter()
            .filter(|(a, b)| *a == target && *b == target)
            .count() as f64
            / m;
        let expect = p1 * p1;
        let sigma = (expect * (1.0 - expect) / m).sqrt();
        assert!(
            (joint - expect).abs() < 3.0 * sigma,
            "joint {joint} vs {expect} at m {m}"
        );
    }
}

#[test]
fn the_two_draws_share_one_law() {
    let model = noisy_model();
    let policy = BeliefPolicy::uniform(2);
    let dist = PrefixDist::discounted(0.9, 4);
    let ds = gen_d1(
        &model,
        &policy,
        100_000,
        &dist,
        D1Mode::IndependentRedraw,
        UpdateOrder::PredictFirst,
        7,
    )
    .unwrap();

    // paired swap statistics: every D_i has mean 0 when (rA, oA) and
    // (rB, oB) are exchangeable, whatever the prefix correlation is
    let assert_centered = |diffs: &[f64], what: &str| {
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
        let sigma = (var / n).sqrt().max(1e-12);
        assert!(mean.abs() < 3.0 * sigma, "{what}: mean {mean}, sigma {sigma}");
    };

    let reward_diffs: Vec<f64> = ds.records.iter().map(|r| r.reward_a - r.reward_b).collect();
    assert_centered(&reward_diffs, "reward swap");
    for k in 0..model.n_obs {
        let obs_diffs: Vec<f64> = ds
            .records
            .iter()
            .map(|r| (r.obs_a == k) as i32 as f64 - (r.obs_b == k) as i32 as f64)
            .collect();
        assert_centered(&obs_diffs, &format!("obs {k} swap"));
    }
}

#[test]
fn first_observations_match_the_exact_marginal() {
    let model = horizon_model(1);
    let policy = BeliefPolicy::uniform(2);
    let n = 100_000;
    let ds = gen_d2(&model, &policy, n, 1, UpdateOrder::UpdateFirst, 11).unwrap();

    // o1 is emitted by s1 ~ d0 under both stories
    let mut marginal = vec![0.0; model.n_obs];
    for s in 0..model.n_states {
        for o in 0..model.n_obs {
            marginal[o] += model.d0[s] * model.emission[s][o];
        }
    }
    let mut counts = vec![0usize; model.n_obs];
    for t in &ds.trajectories {
        assert_eq!(t.len(), 1);
        counts[t.steps[0].0] += 1;
    }
    for (c, p) in counts.iter().zip(marginal.iter()) {
        let freq = *c as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} vs {p}");
    }
}

#[test]
fn mean_return_matches_exact_evaluation() {
    let horizon = 3;
    let model = horizon_model(horizon);
    let policy = BeliefPolicy::uniform(2);
    let n = 100_000;
    for (order, seed) in [
        (UpdateOrder::UpdateFirst, 13u64),
        (UpdateOrder::PredictFirst, 17u64),
    ] {
        let report = exact_value(&model, &policy, horizon, order, 1 << 20).unwrap();
        assert!(report.tail_bound == 0.0);
        let ds = gen_d2(&model, &policy, n, horizon, order, seed).unwrap();
        let returns: Vec<f64> = ds.trajectories.iter().map(|t| t.return_sum()).collect();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sigma = (var / n as f64).sqrt();
        assert!(
            (mean - report.j).abs() < 3.0 * sigma,
            "{order:?}: mean {mean} vs exact {}",
            report.j
        );
    }
}
