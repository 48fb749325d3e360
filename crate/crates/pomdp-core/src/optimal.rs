//! Exact optimal values for two-state models.
//!
//! Over beliefs (1-t, t) every finite-depth optimal value function is the
//! upper envelope of finitely many lines, and the backup preserves that form:
//! per-(action, observation) transforms act linearly on alpha vectors, sums of
//! envelopes are cross-sums, and the max over actions is a union. Pruning
//! after every operation keeps the line sets small.

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::model::{TabularPOMDP, UpdateOrder};

const PRUNE_TOL: f64 = 1e-12;

/// v(t) = a + b t where t is the mass on state 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
}

impl Line {
    fn from_alpha(alpha0: f64, alpha1: f64) -> Line {
        Line {
            a: alpha0,
            b: alpha1 - alpha0,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.a + self.b * t
    }
}

/// Convex piecewise-linear function on [0, 1], stored as its active lines.
#[derive(Clone, Debug)]
pub struct Pwlc {
    pub lines: Vec<Line>,
}

impl Pwlc {
    pub fn eval_t(&self, t: f64) -> f64 {
        self.lines
            .iter()
            .map(|l| l.eval(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at a two-dimensional belief.
    pub fn eval(&self, b: &Belief) -> Result<f64> {
        let p = b.probs();
        if p.len() != 2 {
            return Err(Error::DomainMismatch(format!(
                "two-state value function evaluated at a {}-dim belief",
                p.len()
            )));
        }
        Ok(self.eval_t(p[1]))
    }
}

/// Keep only the lines on the upper envelope over [0, 1].
fn prune(mut lines: Vec<Line>) -> Vec<Line> {
    if lines.len() <= 1 {
        return lines;
    }
    lines.sort_by(|x, y| {
        x.b.partial_cmp(&y.b)
            .unwrap()
            .then(x.a.partial_cmp(&y.a).unwrap())
    });
    // equal slopes: the sort put the highest intercept last
    let mut merged: Vec<Line> = Vec::new();
    for l in lines {
        match merged.last_mut() {
            Some(last) if (l.b - last.b).abs() <= PRUNE_TOL => {
                if l.a > last.a {
                    *last = l;
                }
            }
            _ => merged.push(l),
        }
    }
    // hull walk over ascending slopes; start marks where a line becomes active
    struct Seg {
        line: Line,
        start: f64,
    }
    let mut stack: Vec<Seg> = Vec::new();
    for l in merged {
        let start = loop {
            match stack.last() {
                None => break 0.0,
                Some(top) => {
                    // l overtakes top at x; slopes are distinct after merging
                    let x = (top.line.a - l.a) / (l.b - top.line.b);
                    if x <= top.start + PRUNE_TOL {
                        stack.pop();
                    } else {
                        break x;
                    }
                }
            }
        };
        if start < 1.0 {
            stack.push(Seg { line: l, start });
        }
    }
    stack.into_iter().map(|s| s.line).collect()
}

fn cross_sum(xs: &[Line], ys: &[Line]) -> Vec<Line> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            out.push(Line {
                a: x.a + y.a,
                b: x.b + y.b,
            });
        }
    }
    out
}

/// Alpha-vector transform for one (action, observation) branch.
fn transform(m: &TabularPOMDP, a: usize, o: usize, l: Line, order: UpdateOrder) -> Line {
    let alpha = [l.a, l.a + l.b];
    let mut g = [0.0f64; 2];
    for (s, gs) in g.iter_mut().enumerate() {
        *gs = match order {
            UpdateOrder::UpdateFirst => {
                m.emission[s][o]
                    * (0..2).map(|s2| m.transition[s][a][s2] * alpha[s2]).sum::<f64>()
            }
            UpdateOrder::PredictFirst => (0..2)
                .map(|s2| m.transition[s][a][s2] * m.emission[s2][o] * alpha[s2])
                .sum::<f64>(),
        };
    }
    Line::from_alpha(g[0], g[1])
}

fn backup(m: &TabularPOMDP, v: &[Line], order: UpdateOrder) -> Vec<Line> {
    let disc = m.discount();
    let mut all: Vec<Line> = Vec::new();
    for a in 0..m.n_actions {
        let mut q = vec![Line::from_alpha(m.reward[0][a], m.reward[1][a])];
        for o in 0..m.n_obs {
            let transformed: Vec<Line> =
                v.iter().map(|l| transform(m, a, o, *l, order)).collect();
            let env = prune(transformed);
            let scaled: Vec<Line> = env
                .iter()
                .map(|l| Line {
                    a: disc * l.a,
                    b: disc * l.b,
                })
                .collect();
            q = prune(cross_sum(&q, &scaled));
        }
        all.extend(q);
    }
    prune(all)
}

/// Optimal value of the depth-truncated problem, exact up to float rounding.
/// The sup-norm gap to the infinite-horizon optimum is at most
/// `model.value_tail_bound(depth)`.
pub fn optimal_value_2state(
    model: &TabularPOMDP,
    depth: usize,
    order: UpdateOrder,
) -> Result<Pwlc> {
    if model.n_states != 2 {
        return Err(Error::DomainMismatch(format!(
            "exact envelope iteration needs 2 states, got {}",
            model.n_states
        )));
    }
    let mut v = vec![Line { a: 0.0, b: 0.0 }];
    for _ in 0..depth {
        v = backup(model, &v, order);
    }
    Ok(Pwlc { lines: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{belief_update, counter_example_model, obs_predictive};
    use crate::rng::{random_simplex, stream};
    use rand::Rng;

    fn brute(m: &TabularPOMDP, b: &Belief, depth: usize, order: UpdateOrder) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        (0..m.n_actions)
            .map(|a| {
                let mut q = m.reward_belief(b.probs(), a);
                let obs_p = obs_predictive(m, b, a, order);
                for (o, &po) in obs_p.iter().enumerate() {
                    if po > 0.0 {
                        let bn = belief_update(m, b, a, o, order).unwrap();
                        q += m.discount() * po * brute(m, &bn, depth - 1, order);
                    }
                }
                q
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn random_two_state(seed: u64) -> TabularPOMDP {
        let mut rng = stream(seed, "optimal-fixture", 0);
        let transition = (0..2)
            .map(|_| (0..2).map(|_| random_simplex(&mut rng, 2)).collect())
            .collect();
        let emission = (0..2).map(|_| random_simplex(&mut rng, 3)).collect();
        let d0 = random_simplex(&mut rng, 2);
        let reward = (0..2)
            .map(|_| (0..2).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let m = TabularPOMDP {
            n_states: 2,
            n_actions: 2,
            n_obs: 3,
            gamma: Some(0.8),
            horizon: None,
            rmax: 1.0,
            d0,
            transition,
            emission,
            reward,
        };
        m.validate().unwrap();
        m
    }

    #[test]
    fn constant_reward_gives_geometric_series() {
        let mut m = random_two_state(11);
        m.reward = vec![vec![0.25, 0.25]; 2];
        let depth = 12;
        let expect = 0.25 * (1.0 - 0.8f64.powi(depth as i32)) / (1.0 - 0.8);
        for order in [UpdateOrder::UpdateFirst, UpdateOrder::PredictFirst] {
            let v = optimal_value_2state(&m, depth, order).unwrap();
            for t in [0.0, 0.3, 0.5, 0.9, 1.0] {
                assert!((v.eval_t(t) - expect).abs() <= 1e-10, "t={t} ({order:?})");
            }
        }
    }

    #[test]
    fn matches_brute_force_recursion() {
        for seed in [3, 17] {
            let m = random_two_state(seed);
            for order in [UpdateOrder::UpdateFirst, UpdateOrder::PredictFirst] {
                let v = optimal_value_2state(&m, 7, order).unwrap();
                for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
                    let b = Belief::new(vec![1.0 - t, t]).unwrap();
                    let direct = brute(&m, &b, 7, order);
                    assert!(
                        (v.eval(&b).unwrap() - direct).abs() <= 1e-9,
                        "seed {seed} t {t} ({order:?}): {} vs {direct}",
                        v.eval(&b).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn deeper_truncation_only_raises_values() {
        let m = random_two_state(5);
        let v6 = optimal_value_2state(&m, 6, UpdateOrder::UpdateFirst).unwrap();
        let v9 = optimal_value_2state(&m, 9, UpdateOrder::UpdateFirst).unwrap();
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!(v9.eval_t(t) >= v6.eval_t(t) - 1e-12);
            assert!(v9.eval_t(t) - v6.eval_t(t) <= m.value_tail_bound(6) + 1e-12);
        }
    }

    #[test]
    fn zero_reward_model_has_zero_value() {
        let m = counter_example_model(0.05, 2).unwrap();
        let v = optimal_value_2state(&m, 30, UpdateOrder::UpdateFirst).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!(v.eval_t(t).abs() <= 1e-12);
        }
    }

    #[test]
    fn depth_thirty_stays_small_and_finite() {
        let m = random_two_state(23);
        let v = optimal_value_2state(&m, 30, UpdateOrder::PredictFirst).unwrap();
        assert!(!v.lines.is_empty());
        assert!(v.lines.len() < 5_000, "envelope blew up: {}", v.lines.len());
        assert!(v.eval_t(0.42).is_finite());
    }

    #[test]
    fn rejects_larger_state_spaces() {
        let mut m = random_two_state(1);
        m.n_states = 3;
        assert!(optimal_value_2state(&m, 3, UpdateOrder::UpdateFirst).is_err());
    }
}
