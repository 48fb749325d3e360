use std::collections::BTreeMap;

use pomdp_core::{History, TabularPOMDP, UpdateOrder};

use crate::error::{Error, Result};
use crate::graph::enumerate_reachable;
use crate::induce::{induce_abstract_mdp, FrontierClosure};
use crate::truncation::build_truncation;

/// A finite-horizon model whose latent state is the length-`t` memory window
/// of the source model. Observations keep the source alphabet; each latent
/// state deterministically re-emits the last observation of its window, so
/// the textbook filter on this model stays one-hot.
#[derive(Debug, Clone)]
pub struct ShortMemory {
    pub pomdp: TabularPOMDP,
    pub t: usize,
    /// Latent state, indexed by slot, described as the window it stands for.
    pub windows: Vec<History>,
    /// Full-length history whose belief summarizes each window class.
    pub rep_keys: Vec<String>,
    window_slots: BTreeMap<String, usize>,
}

impl ShortMemory {
    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn slot_of_window(&self, canonical: &str) -> Option<usize> {
        self.window_slots.get(canonical).copied()
    }
}

/// Collapses `model` onto length-`t` memory windows. The source belief graph
/// is enumerated to the full horizon, windows become latent states, and each
/// class adopts the dynamics of its first-discovered member. `order` selects
/// the filter convention used for the source beliefs.
pub fn build_short_memory_pomdp(
    model: &TabularPOMDP,
    t: usize,
    order: UpdateOrder,
    node_cap: usize,
) -> Result<ShortMemory> {
    let horizon = match model.horizon {
        Some(h) => h,
        None => {
            return Err(Error::Core(pomdp_core::Error::BadDiscount {
                gamma: model.gamma,
                horizon: None,
            }))
        }
    };
    let graph = enumerate_reachable(model, horizon, None, order, node_cap)?;
    let phi = build_truncation(&graph, t)?;
    let abs = induce_abstract_mdp(model, &graph, &phi, None, FrontierClosure::SelfLoop)?;

    let reps = phi.rep_nodes(&graph)?;
    let windows: Vec<History> = reps
        .iter()
        .map(|&i| graph.nodes[i].history.window(t))
        .collect();
    let emission = windows
        .iter()
        .map(|w| {
            let last = w.last_obs().expect("windows end in an observation");
            (0..model.n_obs)
                .map(|o| if o == last { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();

    let pomdp = TabularPOMDP {
        n_states: abs.n_states,
        n_actions: abs.n_actions,
        n_obs: model.n_obs,
        gamma: None,
        horizon: Some(horizon),
        rmax: model.rmax,
        d0: abs.d0_phi.clone(),
        transition: abs.p_phi.clone(),
        emission,
        reward: abs.r_phi.clone(),
    };
    pomdp.validate()?;

    let window_slots = windows
        .iter()
        .enumerate()
        .map(|(i, w)| (w.canonical(), i))
        .collect();
    Ok(ShortMemory {
        pomdp,
        t,
        windows,
        rep_keys: phi.representatives.clone(),
        window_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pomdp_core::{exact_value, stream, BeliefPolicy};

    fn finite_model(seed: u64, n_states: usize, n_obs: usize, horizon: usize) -> TabularPOMDP {
        let mut rng = stream(seed, "short-memory-test-model", 0);
        let n_actions = 2;
        let model = TabularPOMDP {
            n_states,
            n_actions,
            n_obs,
            gamma: None,
            horizon: Some(horizon),
            rmax: 1.0,
            d0: pomdp_core::random_simplex(&mut rng, n_states),
            transition: (0..n_states)
                .map(|_| {
                    (0..n_actions)
                        .map(|_| pomdp_core::random_simplex(&mut rng, n_states))
                        .collect()
                })
                .collect(),
            emission: (0..n_states)
                .map(|_| pomdp_core::random_simplex(&mut rng, n_obs))
                .collect(),
            reward: (0..n_states)
                .map(|s| {
                    (0..n_actions)
                        .map(|a| ((s + a) % 3) as f64 * 0.3)
                        .collect()
                })
                .collect(),
        };
        model.validate().unwrap();
        model
    }

    fn revealing_model(seed: u64, n_states: usize, horizon: usize) -> TabularPOMDP {
        let mut model = finite_model(seed, n_states, n_states, horizon);
        model.emission = (0..n_states)
            .map(|s| (0..n_states).map(|o| if s == o { 1.0 } else { 0.0 }).collect())
            .collect();
        model.validate().unwrap();
        model
    }

    #[test]
    fn full_window_reproduces_the_observation_process() {
        let model = finite_model(3, 3, 2, 4);
        let sm = build_short_memory_pomdp(&model, 4, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        let policy = BeliefPolicy::memoryless(vec![vec![0.3, 0.7], vec![0.8, 0.2]]);
        let original = exact_value(&model, &policy, 4, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        let collapsed = exact_value(&sm.pomdp, &policy, 4, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        assert!(
            (original.j - collapsed.j).abs() < 1e-9,
            "{} vs {}",
            original.j,
            collapsed.j
        );
    }

    #[test]
    fn revealing_model_collapses_to_its_observations_at_window_one() {
        let model = revealing_model(5, 3, 3);
        let sm = build_short_memory_pomdp(&model, 1, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        assert_eq!(sm.n_windows(), model.n_obs);
        let policy = BeliefPolicy::uniform(model.n_actions);
        let original = exact_value(&model, &policy, 3, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        let collapsed = exact_value(&sm.pomdp, &policy, 3, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        assert!((original.j - collapsed.j).abs() < 1e-9);
    }

    #[test]
    fn collapsed_filter_is_one_hot_on_window_states() {
        let model = finite_model(11, 3, 2, 4);
        let t = 2;
        let sm = build_short_memory_pomdp(&model, t, UpdateOrder::PredictFirst, 1 << 22)
            .unwrap();
        let graph = enumerate_reachable(
            &sm.pomdp,
            4,
            None,
            UpdateOrder::PredictFirst,
            1 << 22,
        )
        .unwrap();
        for node in &graph.nodes {
            assert!(node.belief.is_one_hot(1e-9));
            let (x, _) = node
                .belief
                .probs()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let window = node.history.window(t).canonical();
            assert_eq!(sm.windows[x].canonical(), window);
            for &(a, _o, child, p) in &node.edges {
                let (xc, _) = graph.nodes[child]
                    .belief
                    .probs()
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                assert!((sm.pomdp.transition[x][a][xc] - p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn infinite_horizon_models_are_rejected() {
        let mut model = finite_model(7, 2, 2, 3);
        model.gamma = Some(0.9);
        model.horizon = None;
        assert!(build_short_memory_pomdp(&model, 2, UpdateOrder::PredictFirst, 1 << 20).is_err());
    }
}
