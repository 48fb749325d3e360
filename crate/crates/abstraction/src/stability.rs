use rand::Rng;
use rayon::prelude::*;

use pomdp_core::{obs_predictive, posterior, predict, stream, BeliefPolicy, History, TabularPOMDP};

use crate::error::Result;
use crate::graph::BeliefGraph;

/// Largest statistic gap among node pairs sharing a memory window, for every
/// window length. Windows refine as they grow, so exhaustively measured gaps
/// are non-increasing in the window length.
#[derive(Debug, Clone)]
pub struct ForgettingCurve {
    /// `sup_gap[t - 1]` is the measured supremum at window length `t`.
    pub sup_gap: Vec<f64>,
    /// A window length counts as forgetting at resolution `eps` when its gap
    /// is at most `scale * eps`.
    pub scale: f64,
}

impl ForgettingCurve {
    /// Smallest window length that forgets at resolution `eps`, if any.
    pub fn min_t(&self, eps: f64) -> Option<usize> {
        self.sup_gap
            .iter()
            .position(|&gap| gap <= self.scale * eps)
            .map(|i| i + 1)
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Supremum of policy distance over belief distance among probed pairs.
    pub l_pi_hat: f64,
    /// Supremum of value-oracle distance over belief distance.
    pub l_v_hat: f64,
    /// Supremum of one-step action-value distance over belief distance,
    /// measured on interior nodes.
    pub l_q_hat: f64,
    /// Worst one-step filter expansion `|b1' - b2'| / |b1 - b2|` over probed
    /// pairs and shared action-observation branches.
    pub update_ratio_max: f64,
    /// Belief gaps within shared windows; threshold scale 1.
    pub t0_curve: ForgettingCurve,
    /// Policy gaps within shared windows; threshold scale is the policy's
    /// Lipschitz constant (measured if not certified).
    pub t1_curve: ForgettingCurve,
    /// Value gaps within shared windows; threshold scale is the measured
    /// sup-norm of the value oracle.
    pub t2_curve: ForgettingCurve,
    pub sample_count: usize,
}

/// Beliefs closer than this are treated as the same point; statistic gaps
/// across such pairs make the ratio infinite rather than ill-conditioned.
const SAME_POINT_TOL: f64 = 1e-14;
const STAT_TOL: f64 = 1e-12;

/// Pairs of nodes among the first `EXHAUSTIVE_PREFIX` are always probed, so
/// small fixtures are measured exactly.
const EXHAUSTIVE_PREFIX: usize = 64;

/// Ratio statistic for one pair: beliefs closer than the same-point
/// tolerance with a visible statistic gap count as an infinite ratio.
fn ratio(num: f64, den: f64) -> f64 {
    if den > SAME_POINT_TOL {
        num / den
    } else if num > STAT_TOL {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Probes pairwise smoothness and forgetting statistics of `policy` and
/// `value_oracle` over the graph's beliefs. All randomness is drawn from
/// `seed`; pairs among the first nodes are scanned exhaustively and `probes`
/// extra pairs are sampled uniformly.
pub fn measure_stability(
    model: &TabularPOMDP,
    graph: &BeliefGraph,
    policy: &BeliefPolicy,
    value_oracle: &(dyn Fn(&History, &pomdp_core::Belief) -> f64 + Sync),
    probes: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let n = graph.len();
    let disc = model.discount();

    let values: Vec<f64> = graph
        .nodes
        .par_iter()
        .map(|node| value_oracle(&node.history, &node.belief))
        .collect();
    let mut action_rows = Vec::with_capacity(n);
    for node in &graph.nodes {
        action_rows.push(policy.action_probs(&node.history, &node.belief)?);
    }
    // One-step action values from the enumerated children; frontier nodes
    // have no continuation and are skipped.
    let q_rows: Vec<Option<Vec<f64>>> = graph
        .nodes
        .iter()
        .map(|node| {
            if node.is_frontier() {
                return None;
            }
            let mut q = (0..model.n_actions)
                .map(|a| model.reward_belief(node.belief.probs(), a))
                .collect::<Vec<f64>>();
            for &(a, _o, child, p) in &node.edges {
                q[a] += disc * p * values[child];
            }
            Some(q)
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let prefix = n.min(EXHAUSTIVE_PREFIX);
    for i in 0..prefix {
        for j in (i + 1)..prefix {
            pairs.push((i, j));
        }
    }
    let mut rng = stream(seed, "stability-pairs", 0);
    for _ in 0..probes {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            pairs.push((i.min(j), i.max(j)));
        }
    }

    let per_pair: Vec<[f64; 4]> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<[f64; 4]> {
            let db = graph.nodes[i].belief.l1(&graph.nodes[j].belief);
            let dpi = action_rows[i]
                .iter()
                .zip(&action_rows[j])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
            let r_pi = ratio(dpi, db);
            let r_v = ratio((values[i] - values[j]).abs(), db);
            let r_q = match (&q_rows[i], &q_rows[j]) {
                (Some(qi), Some(qj)) => {
                    let dq = qi
                        .iter()
                        .zip(qj)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    ratio(dq, db)
                }
                _ => 0.0,
            };
            let mut r_u = 0.0f64;
            if db > SAME_POINT_TOL {
                let bi = graph.nodes[i].belief.probs();
                let bj = graph.nodes[j].belief.probs();
                for a in 0..model.n_actions {
                    let pi_o = obs_predictive(model, &graph.nodes[i].belief, a, graph.order);
                    let pj_o = obs_predictive(model, &graph.nodes[j].belief, a, graph.order);
                    for o in 0..model.n_obs {
                        if pi_o[o] <= 0.0 || pj_o[o] <= 0.0 {
                            continue;
                        }
                        let ui = one_step(model, bi, a, o, graph.order)?;
                        let uj = one_step(model, bj, a, o, graph.order)?;
                        let du = ui
                            .iter()
                            .zip(&uj)
                            .map(|(a, b)| (a - b).abs())
                            .sum::<f64>();
                        r_u = r_u.max(du / db);
                    }
                }
            }
            Ok([r_pi, r_v, r_q, r_u])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sups = [0.0f64; 4];
    for row in &per_pair {
        for (s, v) in sups.iter_mut().zip(row) {
            *s = s.max(*v);
        }
    }
    let [l_pi_hat, l_v_hat, l_q_hat, update_ratio_max] = sups;

    let depth = graph.depth;
    let mut d_belief = vec![0.0f64; depth];
    let mut d_pi = vec![0.0f64; depth];
    let mut d_v = vec![0.0f64; depth];
    for t in 1..=depth {
        let mut groups: std::collections::BTreeMap<String, Vec<usize>> =
            std::collections::BTreeMap::new();
        for i in 0..n {
            groups
                .entry(graph.nodes[i].history.window(t).canonical())
                .or_default()
                .push(i);
        }
        let mut wrng = stream(seed, "stability-window", t as u64);
        for members in groups.values() {
            let g = members.len();
            if g < 2 {
                continue;
            }
            let mut probe = |i: usize, j: usize| {
                d_belief[t - 1] =
                    d_belief[t - 1].max(graph.nodes[i].belief.l1(&graph.nodes[j].belief));
                let dpi = action_rows[i]
                    .iter()
                    .zip(&action_rows[j])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
                d_pi[t - 1] = d_pi[t - 1].max(dpi);
                d_v[t - 1] = d_v[t - 1].max((values[i] - values[j]).abs());
            };
            if g * (g - 1) / 2 <= 4096 {
                for x in 0..g {
                    for y in (x + 1)..g {
                        probe(members[x], members[y]);
                    }
                }
            } else {
                for _ in 0..probes.max(4096) {
                    let x = wrng.gen_range(0..g);
                    let y = wrng.gen_range(0..g);
                    if x != y {
                        probe(members[x], members[y]);
                    }
                }
            }
        }
    }

    let pi_scale = match policy.l_pi() {
        Some(l) if l > 0.0 && l.is_finite() => l,
        _ => {
            if l_pi_hat.is_finite() && l_pi_hat > 0.0 {
                l_pi_hat
            } else {
                1.0
            }
        }
    };
    let v_scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-12);

    Ok(StabilityReport {
        l_pi_hat,
        l_v_hat,
        l_q_hat,
        update_ratio_max,
        t0_curve: ForgettingCurve {
            sup_gap: d_belief,
            scale: 1.0,
        },
        t1_curve: ForgettingCurve {
            sup_gap: d_pi,
            scale: pi_scale,
        },
        t2_curve: ForgettingCurve {
            sup_gap: d_v,
            scale: v_scale,
        },
        sample_count: pairs.len(),
    })
}

fn one_step(
    model: &TabularPOMDP,
    probs: &[f64],
    a: usize,
    o: usize,
    order: pomdp_core::UpdateOrder,
) -> Result<Vec<f64>> {
    Ok(match order {
        pomdp_core::UpdateOrder::UpdateFirst => {
            predict(model, &posterior(model, probs, o, "stability probe")?, a)
        }
        pomdp_core::UpdateOrder::PredictFirst => {
            posterior(model, &predict(model, probs, a), o, "stability probe")?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_reachable;
    use pomdp_core::{counter_example_model, exact_value, UpdateOrder};

    fn oracle_from_value_map(
        report: &pomdp_core::ValueReport,
    ) -> impl Fn(&History, &pomdp_core::Belief) -> f64 + '_ {
        |h: &History, _b: &pomdp_core::Belief| {
            report.v.get(&h.canonical()).copied().unwrap_or(0.0)
        }
    }

    #[test]
    fn constant_policies_measure_zero_policy_lipschitz() {
        let model = counter_example_model(0.05, 2).unwrap();
        let graph =
            enumerate_reachable(&model, 3, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let policy = BeliefPolicy::constant(vec![0.5, 0.5]);
        let report = exact_value(&model, &policy, 3, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let oracle = oracle_from_value_map(&report);
        let stats =
            measure_stability(&model, &graph, &policy, &oracle, 500, 7).unwrap();
        assert_eq!(stats.l_pi_hat, 0.0);
        assert!(stats.sample_count > 0);
        assert_eq!(stats.t1_curve.min_t(1e-9), Some(1));
    }

    #[test]
    fn last_observation_policies_forget_in_one_window() {
        let model = counter_example_model(0.05, 2).unwrap();
        let graph =
            enumerate_reachable(&model, 3, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let policy = BeliefPolicy::memoryless(vec![
            vec![0.9, 0.1],
            vec![0.1, 0.9],
            vec![0.5, 0.5],
            vec![0.2, 0.8],
        ]);
        let report = exact_value(&model, &policy, 3, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let oracle = oracle_from_value_map(&report);
        let stats = measure_stability(&model, &graph, &policy, &oracle, 500, 3).unwrap();
        assert_eq!(stats.t1_curve.sup_gap[0], 0.0);
        assert_eq!(stats.t1_curve.min_t(0.0), Some(1));
    }

    #[test]
    fn counter_example_filter_expansion_reaches_the_known_ratio() {
        let xi = 0.05f64;
        let model = counter_example_model(xi, 2).unwrap();
        let graph =
            enumerate_reachable(&model, 1, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let policy = BeliefPolicy::uniform(2);
        let oracle = |_: &History, _: &pomdp_core::Belief| 0.0;
        let stats = measure_stability(&model, &graph, &policy, &oracle, 0, 1).unwrap();
        let want = 1.0 / (4.0 * xi);
        assert!(
            (stats.update_ratio_max - want).abs() < 1e-9,
            "expansion {} vs {want}",
            stats.update_ratio_max
        );
    }

    #[test]
    fn forgetting_curves_are_monotone_on_small_graphs() {
        let model = counter_example_model(0.1, 2).unwrap();
        let graph =
            enumerate_reachable(&model, 3, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let policy = BeliefPolicy::uniform(2);
        let report = exact_value(&model, &policy, 3, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let oracle = oracle_from_value_map(&report);
        let stats = measure_stability(&model, &graph, &policy, &oracle, 200, 11).unwrap();
        for curve in [&stats.t0_curve, &stats.t1_curve, &stats.t2_curve] {
            for t in 1..curve.sup_gap.len() {
                assert!(curve.sup_gap[t] <= curve.sup_gap[t - 1] + 1e-12);
            }
        }
        assert_eq!(stats.t0_curve.min_t(2.0), Some(1));
    }
}
