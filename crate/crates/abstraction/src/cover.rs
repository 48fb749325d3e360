use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::BeliefGraph;
use crate::map::{AbstractionKind, AbstractionMap, PFamily};

/// Greedy farthest-point cover of the graph's beliefs at resolution `eps`.
///
/// Seeding starts from the depth-1 node with the largest first-observation
/// probability (ties broken toward the lower index); each round promotes the
/// node farthest from the chosen representatives until everything lies within
/// `eps`. Every node is then assigned to its nearest representative, ties
/// broken toward the representative chosen earliest.
pub fn build_eps_cover(graph: &BeliefGraph, eps: f64) -> Result<AbstractionMap> {
    if !(eps > 0.0) {
        return Err(pomdp_core::Error::DomainMismatch(format!(
            "cover resolution must be positive, got {eps}"
        ))
        .into());
    }
    let n = graph.len();
    let seed = (0..graph.n_roots)
        .max_by(|&i, &j| {
            graph.root_probs[i]
                .partial_cmp(&graph.root_probs[j])
                .unwrap()
                .then(j.cmp(&i))
        })
        .expect("graph has at least one root");

    let mut reps = vec![seed];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| graph.nodes[i].belief.l1(&graph.nodes[seed].belief))
        .collect();
    loop {
        let mut far = 0;
        for i in 1..n {
            if dist[i] > dist[far] {
                far = i;
            }
        }
        if dist[far] <= eps {
            break;
        }
        reps.push(far);
        for i in 0..n {
            let d = graph.nodes[i].belief.l1(&graph.nodes[far].belief);
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }

    let nearest: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (slot, &rep) in reps.iter().enumerate() {
                let d = graph.nodes[i].belief.l1(&graph.nodes[rep].belief);
                if d < best_d {
                    best_d = d;
                    best = slot;
                }
            }
            best
        })
        .collect();
    let mut assignment = BTreeMap::new();
    for (i, &slot) in nearest.iter().enumerate() {
        assignment.insert(graph.canonical_of(i), graph.canonical_of(reps[slot]));
    }

    let representatives = reps.iter().map(|&i| graph.canonical_of(i)).collect();
    Ok(AbstractionMap::new(
        AbstractionKind::EpsilonCover,
        eps,
        representatives,
        assignment,
        PFamily::PointMassAtRepresentative,
    ))
}
