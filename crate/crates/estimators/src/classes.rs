//! Constructors for the function classes the fitters search over: exact
//! solutions of small models, shifted copies, random smoothness-restricted
//! tables, and residual tables paired with a value class.

use std::collections::BTreeMap;

use abstraction::{AbstractMDP, FunctionTable, TableValues};
use pomdp_core::{
    bellman_residual_h, enumerate_action_histories, stream, BeliefPolicy, Future, History,
    TabularPOMDP, UpdateOrder,
};
use rand::Rng;

use crate::class::FunctionClass;
use crate::error::{Error, Result};
use crate::exact::{
    futures_given_state, require_horizon, require_predict_first, state_history_law, value_to_go,
};

/// Exact Q^pi of an abstract model as a table over (class, action), with the
/// generic sup-norm bound rmax / (1 - gamma) attached.
pub fn exact_abstract_q(abs: &AbstractMDP, pi_phi: &[Vec<f64>]) -> Result<FunctionTable> {
    let mdp = abs.to_finite_mdp()?;
    if pi_phi.len() != mdp.n_states {
        return Err(Error::Invalid(format!(
            "policy has {} rows for {} classes",
            pi_phi.len(),
            mdp.n_states
        )));
    }
    let q = mdp.policy_q(pi_phi);
    Ok(FunctionTable::abstract_state_action(
        q,
        abs.rmax / (1.0 - mdp.gamma),
    ))
}

/// One copy of `f` per entry of `shifts`, each shifted entrywise by that
/// amount. The declared bound grows by the shift magnitude so the copies
/// remain valid tables; a zero shift reproduces `f`.
pub fn perturbed_copies(f: &FunctionTable, shifts: &[f64]) -> Vec<FunctionTable> {
    shifts
        .iter()
        .map(|&delta| {
            let mut g = f.clone();
            g.bound = f.bound + delta.abs();
            match &mut g.values {
                TableValues::AbstractStateAction { rows } => {
                    rows.iter_mut().flatten().for_each(|v| *v += delta)
                }
                TableValues::HistoryAction { rows } => {
                    rows.values_mut().flatten().for_each(|v| *v += delta)
                }
                TableValues::HistoryScalar { rows } => {
                    rows.values_mut().for_each(|v| *v += delta)
                }
                TableValues::FuturePair { rows } => {
                    rows.values_mut().for_each(|v| *v += delta)
                }
            }
            g
        })
        .collect()
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Random (class, action) tables that are `l_q`-Lipschitz in the
/// representative beliefs under the L1 metric. Each table is the lower
/// McShane extension of uniform noise drawn at the representatives, which
/// keeps the values inside the noise range, so the sup bound holds without
/// clamping. Reproducible per (seed, index).
pub fn lipschitz_state_action_tables(
    reps: &[Vec<f64>],
    n_actions: usize,
    l_q: f64,
    bound: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<FunctionTable>> {
    if reps.is_empty() || n_actions == 0 {
        return Err(Error::Invalid(
            "need at least one representative and one action".into(),
        ));
    }
    if l_q < 0.0 || bound <= 0.0 {
        return Err(Error::Invalid(
            "Lipschitz constant must be nonnegative and the bound positive".into(),
        ));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = stream(seed, "lipschitz-table", i as u64);
        let g: Vec<Vec<f64>> = (0..reps.len())
            .map(|_| (0..n_actions).map(|_| rng.gen_range(-bound..=bound)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = reps
            .iter()
            .map(|bx| {
                (0..n_actions)
                    .map(|a| {
                        reps.iter()
                            .enumerate()
                            .map(|(y, by)| g[y][a] + l_q * l1(bx, by))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect()
            })
            .collect();
        let mut table = FunctionTable::abstract_state_action(rows, bound);
        table.lipschitz_lq = Some(l_q);
        out.push(table);
    }
    Ok(out)
}

/// Minimum-norm solution of `m v = y` through the Gram system
/// `(m m^T) alpha = y`, `v = m^T alpha`. Gauss-Jordan with partial pivoting;
/// rows that eliminate to zero contribute nothing, so the caller must check
/// the residual of the returned solution.
fn solve_least_norm(m: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a = vec![vec![0.0; rows + 1]; rows];
    let mut scale = 0.0f64;
    for i in 0..rows {
        for j in 0..rows {
            let dot: f64 = m[i].iter().zip(&m[j]).map(|(x, y)| x * y).sum();
            a[i][j] = dot;
            scale = scale.max(dot.abs());
        }
        a[i][rows] = y[i];
    }
    let tol = 1e-12 * scale.max(1.0);
    let mut used = vec![false; rows];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    for col in 0..rows {
        let mut best: Option<usize> = None;
        let mut best_abs = tol;
        for (r, &done) in used.iter().enumerate() {
            if !done && a[r][col].abs() > best_abs {
                best_abs = a[r][col].abs();
                best = Some(r);
            }
        }
        let Some(p) = best else { continue };
        used[p] = true;
        pivots.push((p, col));
        for r in 0..rows {
            if r != p && a[r][col] != 0.0 {
                let factor = a[r][col] / a[p][col];
                for c in col..=rows {
                    a[r][c] -= factor * a[p][c];
                }
                a[r][col] = 0.0;
            }
        }
    }
    let mut alpha = vec![0.0; rows];
    for (p, col) in pivots {
        alpha[col] = a[p][rows] / a[p][col];
    }
    let mut v = vec![0.0; cols];
    for (row, &al) in m.iter().zip(&alpha) {
        if al != 0.0 {
            for (vc, &mc) in v.iter_mut().zip(row) {
                *vc += al * mc;
            }
        }
    }
    v
}

const FDVF_SOLVE_TOL: f64 = 1e-9;

/// A future-keyed value table whose conditional expectation under the
/// behavior policy equals the evaluation policy's value to go at every
/// (state, history) cell reachable in the model. Such a table makes every
/// one-step residual vanish and evaluates the target policy exactly from the
/// initial future law; the minimum-norm table satisfying the cell
/// constraints is returned. Predict-first only, since the cells condition on
/// the latent state.
pub fn exact_fdvf(
    model: &TabularPOMDP,
    pi_e: &BeliefPolicy,
    pi_b: &BeliefPolicy,
    order: UpdateOrder,
) -> Result<FunctionTable> {
    require_predict_first(order, "exact_fdvf")?;
    let horizon = require_horizon(model)?;
    let uniform = BeliefPolicy::constant(vec![1.0 / model.n_actions as f64; model.n_actions]);
    let upaths = crate::exact::enumerate_paths(model, &uniform, order)?;

    let mut col_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    for h in 1..=horizon {
        // reach under the uniform policy covers reach under any policy
        for (s, key) in state_history_law(&upaths, h).keys() {
            let tau = History::parse(key)?;
            let law = futures_given_state(model, pi_b, *s, &tau, order)?;
            let mut row = Vec::with_capacity(law.len());
            for (f, p) in law {
                let next = col_index.len();
                let idx = *col_index.entry(f.canonical()).or_insert(next);
                row.push((idx, p));
            }
            rows.push(row);
            targets.push(value_to_go(model, pi_e, *s, &tau, order)?);
        }
    }

    let n_cols = col_index.len();
    let dense: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let mut out = vec![0.0; n_cols];
            for &(idx, p) in row {
                out[idx] += p;
            }
            out
        })
        .collect();
    let v = solve_least_norm(&dense, &targets);

    let worst = dense
        .iter()
        .zip(&targets)
        .map(|(row, t)| {
            let got: f64 = row.iter().zip(&v).map(|(p, vv)| p * vv).sum();
            (got - t).abs()
        })
        .fold(0.0f64, f64::max);
    if worst > FDVF_SOLVE_TOL {
        return Err(Error::Invalid(format!(
            "cell constraints admit no value table (residual {worst:.3e})"
        )));
    }

    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let table: BTreeMap<String, f64> = col_index
        .into_iter()
        .map(|(key, idx)| (key, v[idx]))
        .collect();
    Ok(FunctionTable::future_pair(table, bound))
}

/// One residual table per member of `v_class`: theta_V(tau) is the one-step
/// residual of V at every boundary history reachable under the uniform
/// policy, so reach again covers any policy pair. A future V does not cover
/// is an error rather than a silent zero.
pub fn residual_theta_class(
    model: &TabularPOMDP,
    pi_e: &BeliefPolicy,
    pi_b: &BeliefPolicy,
    v_class: &FunctionClass,
    order: UpdateOrder,
) -> Result<FunctionClass> {
    let horizon = require_horizon(model)?;
    let uniform = BeliefPolicy::constant(vec![1.0 / model.n_actions as f64; model.n_actions]);
    let mut keys: Vec<History> = Vec::new();
    for h in 1..=horizon {
        for (tau, _) in enumerate_action_histories(model, &uniform, h, order)? {
            keys.push(tau);
        }
    }
    let mut tables = Vec::with_capacity(v_class.members.len());
    for v in &v_class.members {
        let lookup = |f: &Future| v.at_future(&f.canonical()).unwrap_or(f64::NAN);
        let mut rows = BTreeMap::new();
        let mut bound = 0.0f64;
        for tau in &keys {
            let resid = bellman_residual_h(model, pi_e, pi_b, &lookup, tau, order)?;
            if !resid.is_finite() {
                return Err(Error::Invalid(format!(
                    "value table does not cover the futures reachable from '{}'",
                    tau.canonical()
                )));
            }
            bound = bound.max(resid.abs());
            rows.insert(tau.canonical(), resid);
        }
        tables.push(FunctionTable::history_scalar(rows, bound));
    }
    FunctionClass::new(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdvf::fdvf_estimate_exact;
    use pomdp_core::exact_value;

    fn abstract_fixture() -> AbstractMDP {
        AbstractMDP {
            n_states: 2,
            n_actions: 2,
            r_phi: vec![vec![1.0, 0.0], vec![0.5, 2.0]],
            p_phi: vec![
                vec![vec![0.7, 0.3], vec![0.2, 0.8]],
                vec![vec![0.4, 0.6], vec![0.9, 0.1]],
            ],
            d0_phi: vec![0.6, 0.4],
            gamma: Some(0.5),
            horizon: None,
            rmax: 2.0,
            rep_keys: vec!["".into(), "0".into()],
            frontier_bias: 0.0,
        }
    }

    fn pomdp_fixture() -> TabularPOMDP {
        TabularPOMDP {
            n_states: 2,
            n_actions: 2,
            n_obs: 2,
            gamma: None,
            horizon: Some(2),
            rmax: 2.0,
            d0: vec![0.6, 0.4],
            transition: vec![
                vec![vec![0.7, 0.3], vec![0.2, 0.8]],
                vec![vec![0.4, 0.6], vec![0.9, 0.1]],
            ],
            emission: vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            reward: vec![vec![1.0, 0.0], vec![0.5, 2.0]],
        }
    }

    #[test]
    fn exact_abstract_q_is_bellman_fixed_point() {
        let abs = abstract_fixture();
        let pi = vec![vec![0.3, 0.7], vec![0.8, 0.2]];
        let table = exact_abstract_q(&abs, &pi).unwrap();
        let TableValues::AbstractStateAction { rows } = &table.values else {
            panic!("wrong domain");
        };
        let mdp = abs.to_finite_mdp().unwrap();
        let backed = mdp.bellman_backup(rows, &pi);
        for (qr, br) in rows.iter().zip(&backed) {
            for (q, b) in qr.iter().zip(br) {
                assert!((q - b).abs() < 1e-11);
            }
        }
        assert_eq!(table.bound, 2.0 / 0.5);
        table.check_bound().unwrap();
    }

    #[test]
    fn perturbed_copies_shift_values_and_bounds() {
        let mut rows = BTreeMap::new();
        rows.insert("0;1|".to_string(), 1.0);
        let f = FunctionTable::future_pair(rows, 1.0);
        let copies = perturbed_copies(&f, &[0.0, 0.5, -0.25]);
        let vals: Vec<f64> = copies
            .iter()
            .map(|c| c.at_future("0;1|").unwrap())
            .collect();
        assert_eq!(vals, vec![1.0, 1.5, 0.75]);
        assert_eq!(copies[1].bound, 1.5);
        assert_eq!(copies[2].bound, 1.25);

        let q = FunctionTable::abstract_state_action(vec![vec![2.0, -1.0]], 2.0);
        let shifted = perturbed_copies(&q, &[-0.5]);
        assert_eq!(shifted[0].at_state_action(0, 0).unwrap(), 1.5);
        assert_eq!(shifted[0].at_state_action(0, 1).unwrap(), -1.5);
    }

    #[test]
    fn lipschitz_tables_are_smooth_bounded_and_reproducible() {
        let reps = vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.1, 0.9]];
        let tables = lipschitz_state_action_tables(&reps, 2, 0.7, 2.0, 5, 9).unwrap();
        assert_eq!(tables.len(), 5);
        for t in &tables {
            assert_eq!(t.lipschitz_lq, Some(0.7));
            t.check_bound().unwrap();
            for x in 0..reps.len() {
                for y in 0..reps.len() {
                    let d = l1(&reps[x], &reps[y]);
                    for a in 0..2 {
                        let fx = t.at_state_action(x, a).unwrap();
                        let fy = t.at_state_action(y, a).unwrap();
                        assert!((fx - fy).abs() <= 0.7 * d + 1e-12);
                    }
                }
            }
        }
        let again = lipschitz_state_action_tables(&reps, 2, 0.7, 2.0, 5, 9).unwrap();
        for (a, b) in tables.iter().zip(&again) {
            assert_eq!(
                serde_json::to_string(&a.values).unwrap(),
                serde_json::to_string(&b.values).unwrap()
            );
        }
        // distinct draws across indices
        let t0 = serde_json::to_string(&tables[0].values).unwrap();
        let t1 = serde_json::to_string(&tables[1].values).unwrap();
        assert_ne!(t0, t1);
    }

    #[test]
    fn min_norm_solver_prefers_small_solutions() {
        // single constraint v0 + v1 = 2 has min-norm solution (1, 1)
        let m = vec![vec![1.0, 1.0]];
        let v = solve_least_norm(&m, &[2.0]);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        // redundant rows stay consistent
        let m2 = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        let v2 = solve_least_norm(&m2, &[3.0, 3.0, 4.0]);
        assert!((v2[0] - 3.0).abs() < 1e-10 && (v2[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exact_fdvf_recovers_value_and_kills_residuals() {
        let model = pomdp_fixture();
        let order = UpdateOrder::PredictFirst;
        let pi_e = BeliefPolicy::constant(vec![0.25, 0.75]);
        let pi_b = BeliefPolicy::memoryless(vec![vec![0.6, 0.4], vec![0.35, 0.65]]);
        let v = exact_fdvf(&model, &pi_e, &pi_b, order).unwrap();

        let j = exact_value(&model, &pi_e, 2, order, pomdp_core::DEFAULT_NODE_CAP)
            .unwrap()
            .j;
        let j_hat = fdvf_estimate_exact(&v, &model, &pi_b, order).unwrap();
        assert!((j_hat - j).abs() < 1e-9, "{j_hat} vs {j}");

        let uniform = BeliefPolicy::constant(vec![0.5, 0.5]);
        let lookup = |f: &Future| v.at_future(&f.canonical()).unwrap();
        for h in 1..=2 {
            for (tau, _) in enumerate_action_histories(&model, &uniform, h, order).unwrap() {
                let resid = bellman_residual_h(&model, &pi_e, &pi_b, &lookup, &tau, order).unwrap();
                assert!(resid.abs() < 1e-9, "residual {resid} at '{}'", tau.canonical());
            }
        }
    }

    #[test]
    fn exact_fdvf_requires_predict_first() {
        let model = pomdp_fixture();
        let pi = BeliefPolicy::constant(vec![0.5, 0.5]);
        let err = exact_fdvf(&model, &pi, &pi, UpdateOrder::UpdateFirst).unwrap_err();
        assert!(err.to_string().contains("predict-first"));
    }

    #[test]
    fn residual_class_vanishes_only_for_the_exact_table() {
        let model = pomdp_fixture();
        let order = UpdateOrder::PredictFirst;
        let pi_e = BeliefPolicy::constant(vec![0.25, 0.75]);
        let pi_b = BeliefPolicy::memoryless(vec![vec![0.6, 0.4], vec![0.35, 0.65]]);
        let v = exact_fdvf(&model, &pi_e, &pi_b, order).unwrap();
        let mut members = vec![v.clone()];
        members.extend(perturbed_copies(&v, &[0.3]));
        let v_class = FunctionClass::new(members).unwrap();

        let thetas = residual_theta_class(&model, &pi_e, &pi_b, &v_class, order).unwrap();
        assert!(thetas.members[0].bound < 1e-9);
        assert!(thetas.members[1].bound > 1e-3);
        // the shifted table's step-1 residual is reported at the root
        assert!(thetas.members[1].at_history("").is_ok());
    }
}
