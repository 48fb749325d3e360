use std::collections::BTreeMap;

use pomdp_core::{
    belief_update, initial_belief, initial_obs_dist, obs_predictive, Belief, BeliefPolicy,
    History, Normalization, TabularPOMDP, UpdateOrder,
};

use crate::error::Result;

/// One reachable post-observation history together with its filtering belief.
#[derive(Debug, Clone)]
pub struct BeliefNode {
    pub history: History,
    pub belief: Belief,
    pub parent: Option<usize>,
    /// Outgoing edges `(action, observation, child index, prob)` where `prob`
    /// is the observation predictive given the node's belief and the action.
    pub edges: Vec<(usize, usize, usize, f64)>,
}

impl BeliefNode {
    pub fn step(&self) -> usize {
        self.history.step()
    }

    pub fn is_frontier(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Breadth-first enumeration of every positive-probability history up to a
/// fixed depth. Nodes are indexed in discovery order, so parents always
/// precede children and the first `n_roots` nodes are the depth-1 histories.
#[derive(Debug, Clone)]
pub struct BeliefGraph {
    pub nodes: Vec<BeliefNode>,
    pub depth: usize,
    pub order: UpdateOrder,
    pub n_actions: usize,
    pub n_roots: usize,
    /// `root_probs[i]` is the probability of the first observation at node `i`
    /// for `i < n_roots`.
    pub root_probs: Vec<f64>,
    index: BTreeMap<String, usize>,
}

impl BeliefGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, canonical: &str) -> Option<usize> {
        self.index.get(canonical).copied()
    }

    pub fn canonical_of(&self, i: usize) -> String {
        self.nodes[i].history.canonical()
    }

    /// Probability mass of each node under `policy`, weighted per step by
    /// `norm`. Masses at a fixed step sum to that step's weight, so the grand
    /// total equals `norm.mass(self.depth)`.
    pub fn node_occupancy(
        &self,
        policy: &BeliefPolicy,
        norm: &Normalization,
    ) -> Result<Vec<f64>> {
        let mut reach = vec![0.0; self.nodes.len()];
        for (i, p) in self.root_probs.iter().enumerate() {
            reach[i] = *p;
        }
        let mut mass = vec![0.0; self.nodes.len()];
        for i in 0..self.nodes.len() {
            mass[i] = norm.step_weight(self.nodes[i].step()) * reach[i];
            if self.nodes[i].edges.is_empty() {
                continue;
            }
            let probs = policy.action_probs(&self.nodes[i].history, &self.nodes[i].belief)?;
            for &(a, _o, child, p) in &self.nodes[i].edges {
                reach[child] += reach[i] * probs[a] * p;
            }
        }
        Ok(mass)
    }
}

/// Enumerates the belief graph of `model` to `depth` steps. When
/// `policy_support` is given, actions with zero probability under that policy
/// are not expanded; observation branches are never pruned.
pub fn enumerate_reachable(
    model: &TabularPOMDP,
    depth: usize,
    policy_support: Option<&BeliefPolicy>,
    order: UpdateOrder,
    node_cap: usize,
) -> Result<BeliefGraph> {
    if depth == 0 {
        return Err(pomdp_core::Error::DomainMismatch(
            "belief graph depth must be at least 1".to_string(),
        )
        .into());
    }
    let mut nodes: Vec<BeliefNode> = Vec::new();
    let mut index = BTreeMap::new();
    let mut root_probs = Vec::new();

    let o1_dist = initial_obs_dist(model);
    for (o, &p) in o1_dist.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let history = History::new(vec![o], vec![])?;
        let belief = initial_belief(model, o)?;
        index.insert(history.canonical(), nodes.len());
        nodes.push(BeliefNode {
            history,
            belief,
            parent: None,
            edges: Vec::new(),
        });
        root_probs.push(p);
    }
    let n_roots = nodes.len();

    let mut i = 0;
    while i < nodes.len() {
        if nodes[i].step() >= depth {
            i += 1;
            continue;
        }
        let support = match policy_support {
            Some(policy) => {
                Some(policy.action_probs(&nodes[i].history, &nodes[i].belief)?)
            }
            None => None,
        };
        for a in 0..model.n_actions {
            if let Some(probs) = &support {
                if probs[a] <= 0.0 {
                    continue;
                }
            }
            let predictive = obs_predictive(model, &nodes[i].belief, a, order);
            for (o, &p) in predictive.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let history = nodes[i].history.child_plus(a, o)?;
                let belief = belief_update(model, &nodes[i].belief, a, o, order)?;
                if nodes.len() >= node_cap {
                    return Err(pomdp_core::Error::TreeTooLarge { cap: node_cap }.into());
                }
                let child = nodes.len();
                index.insert(history.canonical(), child);
                nodes.push(BeliefNode {
                    history,
                    belief,
                    parent: Some(i),
                    edges: Vec::new(),
                });
                nodes[i].edges.push((a, o, child, p));
            }
        }
        i += 1;
    }

    Ok(BeliefGraph {
        nodes,
        depth,
        order,
        n_actions: model.n_actions,
        n_roots,
        root_probs,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pomdp_core::{belief_of_history, counter_example_model, stream, Normalization};

    fn random_model(seed: u64) -> TabularPOMDP {
        let mut rng = stream(seed, "graph-test-model", 0);
        let n_states = 3;
        let n_actions = 2;
        let n_obs = 2;
        let d0 = pomdp_core::random_simplex(&mut rng, n_states);
        let transition = (0..n_states)
            .map(|_| {
                (0..n_actions)
                    .map(|_| pomdp_core::random_simplex(&mut rng, n_states))
                    .collect()
            })
            .collect();
        let emission = (0..n_states)
            .map(|_| pomdp_core::random_simplex(&mut rng, n_obs))
            .collect();
        let reward = (0..n_states)
            .map(|_| (0..n_actions).map(|_| 0.5).collect())
            .collect();
        let model = TabularPOMDP {
            n_states,
            n_actions,
            n_obs,
            gamma: Some(0.9),
            horizon: None,
            rmax: 1.0,
            d0,
            transition,
            emission,
            reward,
        };
        model.validate().unwrap();
        model
    }

    #[test]
    fn counter_example_roots_match_hand_bayes() {
        let model = counter_example_model(0.05, 2).unwrap();
        let graph = enumerate_reachable(&model, 1, None, UpdateOrder::UpdateFirst, 1 << 20)
            .unwrap();
        assert_eq!(graph.n_roots, 4);
        assert_eq!(graph.len(), 4);
        let expect = [
            [1.0, 0.0],
            [0.0, 1.0],
            [0.9, 0.1],
            [0.1, 0.9],
        ];
        for (i, want) in expect.iter().enumerate() {
            let got = graph.nodes[i].belief.probs();
            for s in 0..2 {
                assert!((got[s] - want[s]).abs() < 1e-12, "root {i}: {got:?}");
            }
        }
        assert!((graph.root_probs[0] - 0.25).abs() < 1e-12);
        assert!((graph.root_probs[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn edges_are_stochastic_and_beliefs_match_filter() {
        for order in [UpdateOrder::UpdateFirst, UpdateOrder::PredictFirst] {
            let model = random_model(11);
            let graph = enumerate_reachable(&model, 3, None, order, 1 << 20).unwrap();
            for node in &graph.nodes {
                if node.is_frontier() {
                    assert_eq!(node.step(), 3);
                    continue;
                }
                for a in 0..model.n_actions {
                    let sum: f64 = node
                        .edges
                        .iter()
                        .filter(|e| e.0 == a)
                        .map(|e| e.3)
                        .sum();
                    assert!((sum - 1.0).abs() < 1e-10);
                }
                let recomputed = belief_of_history(&model, &node.history, order).unwrap();
                let d = node.belief.l1(&recomputed);
                assert!(d < 1e-12);
            }
            for (i, node) in graph.nodes.iter().enumerate() {
                for &(_, _, child, _) in &node.edges {
                    assert!(child > i);
                    assert_eq!(graph.nodes[child].parent, Some(i));
                }
            }
        }
    }

    #[test]
    fn node_lookup_round_trips() {
        let model = random_model(7);
        let graph =
            enumerate_reachable(&model, 3, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        for (i, node) in graph.nodes.iter().enumerate() {
            assert_eq!(graph.node_index(&node.history.canonical()), Some(i));
        }
        assert_eq!(graph.node_index("o9-a9-o9"), None);
    }

    #[test]
    fn policy_support_prunes_actions() {
        let model = random_model(3);
        let policy = BeliefPolicy::constant(vec![1.0, 0.0]);
        let graph =
            enumerate_reachable(&model, 3, Some(&policy), UpdateOrder::UpdateFirst, 1 << 20)
                .unwrap();
        for node in &graph.nodes {
            for &(a, _, _, _) in &node.edges {
                assert_eq!(a, 0);
            }
        }
        let full =
            enumerate_reachable(&model, 3, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        assert!(graph.len() < full.len());
    }

    #[test]
    fn node_cap_is_enforced() {
        let model = random_model(5);
        let err = enumerate_reachable(&model, 4, None, UpdateOrder::UpdateFirst, 10)
            .err()
            .expect("cap should trip");
        match err {
            crate::error::Error::Core(pomdp_core::Error::TreeTooLarge { cap }) => {
                assert_eq!(cap, 10)
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn occupancy_totals_match_normalization() {
        let model = random_model(19);
        let graph =
            enumerate_reachable(&model, 4, None, UpdateOrder::UpdateFirst, 1 << 20).unwrap();
        let policy = BeliefPolicy::uniform(model.n_actions);
        let norm = Normalization::Discounted { gamma: 0.9 };
        let mass = graph.node_occupancy(&policy, &norm).unwrap();
        let total: f64 = mass.iter().sum();
        assert!((total - norm.mass(4)).abs() < 1e-12);
        for (i, node) in graph.nodes.iter().enumerate() {
            assert!(mass[i] >= 0.0);
            let step = node.step();
            assert!(mass[i] <= norm.step_weight(step) + 1e-12);
        }
    }
}
