use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BeliefGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbstractionKind {
    EpsilonCover,
    Truncation { t: usize },
}

/// How a class is summarized when inducing abstract dynamics: either all mass
/// on the representative node, or the class members weighted by their
/// occupancy under a fixed behavior policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PFamily {
    PointMassAtRepresentative,
    OccupancyWeighted { policy_hash: String },
}

impl Default for PFamily {
    fn default() -> Self {
        PFamily::PointMassAtRepresentative
    }
}

/// A partition of belief-graph nodes into classes, each owned by a
/// representative node. Keys are canonical history strings so the map can be
/// stored and reloaded independently of node indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbstractionMap {
    #[serde(flatten)]
    pub kind: AbstractionKind,
    /// Guaranteed supremum of the distance from any node's belief to its
    /// representative's belief.
    pub eps: f64,
    pub representatives: Vec<String>,
    pub assignment: BTreeMap<String, String>,
    #[serde(default)]
    pub p_family: PFamily,
    #[serde(skip)]
    slots: BTreeMap<String, usize>,
}

impl AbstractionMap {
    pub fn new(
        kind: AbstractionKind,
        eps: f64,
        representatives: Vec<String>,
        assignment: BTreeMap<String, String>,
        p_family: PFamily,
    ) -> Self {
        let mut map = AbstractionMap {
            kind,
            eps,
            representatives,
            assignment,
            p_family,
            slots: BTreeMap::new(),
        };
        map.reindex();
        map
    }

    fn reindex(&mut self) {
        self.slots = self
            .representatives
            .iter()
            .enumerate()
            .map(|(i, key)| (key.clone(), i))
            .collect();
    }

    pub fn n_states(&self) -> usize {
        self.representatives.len()
    }

    pub fn rep_key_of(&self, canonical: &str) -> Option<&str> {
        self.assignment.get(canonical).map(String::as_str)
    }

    /// Slot of the class that owns `canonical`, which may itself be any node.
    pub fn slot_of(&self, canonical: &str) -> Option<usize> {
        let rep = self.assignment.get(canonical)?;
        self.slots.get(rep.as_str()).copied()
    }

    pub fn slot_of_rep(&self, rep: &str) -> Option<usize> {
        self.slots.get(rep).copied()
    }

    /// Class members, indexed by slot, as node indices into `graph`.
    pub fn members_by_slot(&self, graph: &BeliefGraph) -> Result<Vec<Vec<usize>>> {
        let mut members = vec![Vec::new(); self.n_states()];
        for (node_key, rep_key) in &self.assignment {
            let node = graph.node_index(node_key).ok_or_else(|| {
                Error::MapMismatch(format!("assigned node {node_key:?} not in graph"))
            })?;
            let slot = self.slot_of_rep(rep_key).ok_or_else(|| {
                Error::MapMismatch(format!("representative {rep_key:?} not listed"))
            })?;
            members[slot].push(node);
        }
        for list in &mut members {
            list.sort_unstable();
        }
        Ok(members)
    }

    pub fn rep_nodes(&self, graph: &BeliefGraph) -> Result<Vec<usize>> {
        self.representatives
            .iter()
            .map(|key| {
                graph.node_index(key).ok_or_else(|| {
                    Error::MapMismatch(format!("representative {key:?} not in graph"))
                })
            })
            .collect()
    }

    /// Checks the structural invariants against the graph the map was built
    /// from: full coverage, self-assigned representatives, and the distance
    /// guarantee.
    pub fn validate_against(&self, graph: &BeliefGraph) -> Result<()> {
        if self.assignment.len() != graph.len() {
            return Err(Error::MapMismatch(format!(
                "assignment covers {} nodes, graph has {}",
                self.assignment.len(),
                graph.len()
            )));
        }
        for rep in &self.representatives {
            if self.rep_key_of(rep) != Some(rep.as_str()) {
                return Err(Error::MapMismatch(format!(
                    "representative {rep:?} is not assigned to itself"
                )));
            }
        }
        let reps = self.rep_nodes(graph)?;
        for node in 0..graph.len() {
            let key = graph.canonical_of(node);
            let slot = self
                .slot_of(&key)
                .ok_or_else(|| Error::MapMismatch(format!("node {key:?} unassigned")))?;
            let rep = reps[slot];
            let d = graph.nodes[node].belief.l1(&graph.nodes[rep].belief);
            if d > self.eps + 1e-12 {
                return Err(Error::MapMismatch(format!(
                    "node {key:?} is {d} from its representative, eps = {}",
                    self.eps
                )));
            }
            if let AbstractionKind::Truncation { t } = self.kind {
                let want = graph.nodes[node].history.window(t).canonical();
                let got = graph.nodes[rep].history.window(t).canonical();
                if want != got {
                    return Err(Error::MapMismatch(format!(
                        "node {key:?} grouped across windows {want:?} vs {got:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Core(pomdp_core::Error::from(e)))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut map: AbstractionMap =
            serde_json::from_str(text).map_err(|e| Error::Core(pomdp_core::Error::from(e)))?;
        map.reindex();
        for (node, rep) in &map.assignment {
            if !map.slots.contains_key(rep.as_str()) {
                return Err(Error::MapMismatch(format!(
                    "node {node:?} assigned to unlisted representative {rep:?}"
                )));
            }
        }
        Ok(map)
    }
}
