use pomdp_core::{BeliefPolicy, FiniteMDP, Normalization, TabularPOMDP};

use crate::error::{Error, Result};
use crate::graph::BeliefGraph;
use crate::map::{AbstractionMap, PFamily};

/// What to do with classes whose summary puts mass on nodes at the
/// enumeration frontier, which have no expanded successors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierClosure {
    /// Route the missing successor mass back to the class itself. The value
    /// bias this introduces is bounded by the enumeration tail.
    SelfLoop,
    /// Refuse to build the model.
    Forbid,
}

/// Tabular MDP over abstraction classes. Rewards and transitions average the
/// member nodes according to the map's summary family.
#[derive(Debug, Clone)]
pub struct AbstractMDP {
    pub n_states: usize,
    pub n_actions: usize,
    pub r_phi: Vec<Vec<f64>>,
    pub p_phi: Vec<Vec<Vec<f64>>>,
    pub d0_phi: Vec<f64>,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
    pub rmax: f64,
    pub rep_keys: Vec<String>,
    /// Worst-case value error introduced by the frontier closure, equal to
    /// the enumeration tail of the source model at the graph depth.
    pub frontier_bias: f64,
}

impl AbstractMDP {
    pub fn validate(&self) -> Result<()> {
        for (x, per_a) in self.p_phi.iter().enumerate() {
            for row in per_a {
                let sum: f64 = row.iter().sum();
                let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
                if min < -1e-12 || (sum - 1.0).abs() > 1e-10 {
                    return Err(Error::Invalid(format!(
                        "abstract transition row for class {x} sums to {sum}"
                    )));
                }
            }
        }
        let d0_sum: f64 = self.d0_phi.iter().sum();
        if (d0_sum - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!(
                "abstract initial distribution sums to {d0_sum}"
            )));
        }
        for row in &self.r_phi {
            for &r in row {
                if !(-1e-12..=self.rmax + 1e-12).contains(&r) {
                    return Err(Error::Invalid(format!(
                        "abstract reward {r} outside [0, {}]",
                        self.rmax
                    )));
                }
            }
        }
        Ok(())
    }

    /// Discounted view for exact policy evaluation.
    pub fn to_finite_mdp(&self) -> Result<FiniteMDP> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => {
                return Err(Error::Core(pomdp_core::Error::BadDiscount {
                    gamma: self.gamma,
                    horizon: self.horizon,
                }))
            }
        };
        let mdp = FiniteMDP {
            n_states: self.n_states,
            n_actions: self.n_actions,
            p: normalized_rows3(&self.p_phi),
            r: clamped_rewards(&self.r_phi, self.rmax),
            d0: normalized_row(&self.d0_phi),
            gamma,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Wraps the abstract chain as a fully observed model: the observation
    /// alphabet is the class set and the emission is the identity, so the
    /// filtering belief under the textbook update stays one-hot.
    pub fn to_pomdp(&self) -> Result<TabularPOMDP> {
        let n = self.n_states;
        let emission = (0..n)
            .map(|x| (0..n).map(|o| if o == x { 1.0 } else { 0.0 }).collect())
            .collect();
        let model = TabularPOMDP {
            n_states: n,
            n_actions: self.n_actions,
            n_obs: n,
            gamma: self.gamma,
            horizon: self.horizon,
            rmax: self.rmax,
            d0: normalized_row(&self.d0_phi),
            transition: normalized_rows3(&self.p_phi),
            emission,
            reward: clamped_rewards(&self.r_phi, self.rmax),
        };
        model.validate()?;
        Ok(model)
    }
}

fn normalized_row(row: &[f64]) -> Vec<f64> {
    let sum: f64 = row.iter().sum();
    row.iter().map(|&p| (p / sum).max(0.0)).collect()
}

fn normalized_rows3(p: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    p.iter()
        .map(|per_a| per_a.iter().map(|row| normalized_row(row)).collect())
        .collect()
}

fn clamped_rewards(r: &[Vec<f64>], rmax: f64) -> Vec<Vec<f64>> {
    r.iter()
        .map(|row| row.iter().map(|&v| v.clamp(0.0, rmax)).collect())
        .collect()
}

fn summary_normalization(model: &TabularPOMDP) -> Normalization {
    match model.horizon {
        Some(h) => Normalization::PerStepUniform { horizon: h },
        None => Normalization::Discounted {
            gamma: model.discount(),
        },
    }
}

/// Per-class node weights, resolved from the map's summary family. Weights in
/// each class are nonnegative and sum to one; occupancy-weighted classes that
/// carry no mass under the weighting policy fall back to their representative.
pub fn class_weights(
    model: &TabularPOMDP,
    graph: &BeliefGraph,
    phi: &AbstractionMap,
    policy_for_weights: Option<&BeliefPolicy>,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let reps = phi.rep_nodes(graph)?;
    match &phi.p_family {
        PFamily::PointMassAtRepresentative => {
            Ok(reps.iter().map(|&r| vec![(r, 1.0)]).collect())
        }
        PFamily::OccupancyWeighted { policy_hash } => {
            let policy = policy_for_weights.ok_or_else(|| {
                Error::Invalid(
                    "occupancy-weighted summaries need the weighting policy".to_string(),
                )
            })?;
            if policy.content_hash() != *policy_hash {
                return Err(Error::MapMismatch(
                    "weighting policy does not match the hash in the map".to_string(),
                ));
            }
            let mass = graph.node_occupancy(policy, &summary_normalization(model))?;
            let members = phi.members_by_slot(graph)?;
            let mut out = Vec::with_capacity(members.len());
            for (slot, nodes) in members.iter().enumerate() {
                let total: f64 = nodes.iter().map(|&i| mass[i]).sum();
                if total > 0.0 {
                    out.push(
                        nodes
                            .iter()
                            .map(|&i| (i, mass[i] / total))
                            .filter(|&(_, w)| w > 0.0)
                            .collect(),
                    );
                } else {
                    out.push(vec![(reps[slot], 1.0)]);
                }
            }
            Ok(out)
        }
    }
}

/// Builds the abstract model induced by `phi` on `graph`: rewards and
/// successor-class distributions are averaged over each class summary, and
/// the initial distribution pushes the first-observation law through the map.
pub fn induce_abstract_mdp(
    model: &TabularPOMDP,
    graph: &BeliefGraph,
    phi: &AbstractionMap,
    policy_for_weights: Option<&BeliefPolicy>,
    frontier: FrontierClosure,
) -> Result<AbstractMDP> {
    let n = phi.n_states();
    let weights = class_weights(model, graph, phi, policy_for_weights)?;

    let mut r_phi = vec![vec![0.0; model.n_actions]; n];
    let mut p_phi = vec![vec![vec![0.0; n]; model.n_actions]; n];
    for (x, nodes) in weights.iter().enumerate() {
        for &(i, w) in nodes {
            let node = &graph.nodes[i];
            for a in 0..model.n_actions {
                r_phi[x][a] += w * model.reward_belief(node.belief.probs(), a);
            }
            if node.is_frontier() {
                match frontier {
                    FrontierClosure::SelfLoop => {
                        for a in 0..model.n_actions {
                            p_phi[x][a][x] += w;
                        }
                    }
                    FrontierClosure::Forbid => {
                        return Err(Error::DanglingFrontier {
                            node: graph.canonical_of(i),
                        })
                    }
                }
            } else {
                for &(a, _o, child, p) in &node.edges {
                    let dest = phi
                        .slot_of(&graph.canonical_of(child))
                        .ok_or_else(|| {
                            Error::MapMismatch(format!(
                                "successor {:?} unassigned",
                                graph.canonical_of(child)
                            ))
                        })?;
                    p_phi[x][a][dest] += w * p;
                }
            }
        }
    }

    let mut d0_phi = vec![0.0; n];
    for root in 0..graph.n_roots {
        let slot = phi.slot_of(&graph.canonical_of(root)).ok_or_else(|| {
            Error::MapMismatch(format!("root {:?} unassigned", graph.canonical_of(root)))
        })?;
        d0_phi[slot] += graph.root_probs[root];
    }

    let abstract_mdp = AbstractMDP {
        n_states: n,
        n_actions: model.n_actions,
        r_phi,
        p_phi,
        d0_phi,
        gamma: model.gamma,
        horizon: model.horizon,
        rmax: model.rmax,
        rep_keys: phi.representatives.clone(),
        frontier_bias: model.value_tail_bound(graph.depth),
    };
    abstract_mdp.validate()?;
    Ok(abstract_mdp)
}

/// Averages `policy` over each class summary, giving one action distribution
/// per abstract state.
pub fn induce_abstract_policy(
    model: &TabularPOMDP,
    graph: &BeliefGraph,
    phi: &AbstractionMap,
    policy: &BeliefPolicy,
    policy_for_weights: Option<&BeliefPolicy>,
) -> Result<Vec<Vec<f64>>> {
    let weights = class_weights(model, graph, phi, policy_for_weights)?;
    let mut rows = vec![vec![0.0; model.n_actions]; phi.n_states()];
    for (x, nodes) in weights.iter().enumerate() {
        for &(i, w) in nodes {
            let node = &graph.nodes[i];
            let probs = policy.action_probs(&node.history, &node.belief)?;
            for a in 0..model.n_actions {
                rows[x][a] += w * probs[a];
            }
        }
    }
    Ok(rows)
}
