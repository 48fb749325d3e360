use std::collections::BTreeMap;

use crate::error::Result;
use crate::graph::BeliefGraph;
use crate::map::{AbstractionKind, AbstractionMap, PFamily};

/// Groups nodes whose histories agree on the last `t` observations and the
/// `t - 1` actions between them. The representative of each class is its
/// first node in discovery order; `eps` reports the measured largest distance
/// from a member belief to its representative's belief.
pub fn build_truncation(graph: &BeliefGraph, t: usize) -> Result<AbstractionMap> {
    if t == 0 {
        return Err(pomdp_core::Error::DomainMismatch(
            "memory window must be at least 1".to_string(),
        )
        .into());
    }
    let mut rep_of_window: BTreeMap<String, usize> = BTreeMap::new();
    let mut reps: Vec<usize> = Vec::new();
    let mut assignment = BTreeMap::new();
    let mut radius = 0.0f64;
    for i in 0..graph.len() {
        let window = graph.nodes[i].history.window(t).canonical();
        let rep = *rep_of_window.entry(window).or_insert_with(|| {
            reps.push(i);
            i
        });
        assignment.insert(graph.canonical_of(i), graph.canonical_of(rep));
        let d = graph.nodes[i].belief.l1(&graph.nodes[rep].belief);
        if d > radius {
            radius = d;
        }
    }
    let representatives = reps.iter().map(|&i| graph.canonical_of(i)).collect();
    Ok(AbstractionMap::new(
        AbstractionKind::Truncation { t },
        radius,
        representatives,
        assignment,
        PFamily::PointMassAtRepresentative,
    ))
}
