use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BeliefGraph;
use crate::map::AbstractionMap;

fn domain_err(wanted: &str) -> Error {
    Error::Core(pomdp_core::Error::DomainMismatch(format!(
        "function table does not have a {wanted} domain"
    )))
}

/// Backing storage for a tabular function, keyed by the kind of argument it
/// accepts. History and future keys are canonical strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "kebab-case")]
pub enum TableValues {
    AbstractStateAction { rows: Vec<Vec<f64>> },
    HistoryAction { rows: BTreeMap<String, Vec<f64>> },
    HistoryScalar { rows: BTreeMap<String, f64> },
    FuturePair { rows: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionTable {
    pub values: TableValues,
    /// Declared sup-norm bound on the entries.
    pub bound: f64,
    /// Declared Lipschitz constant in the belief argument, when the table is
    /// drawn from a smoothness-restricted class.
    pub lipschitz_lq: Option<f64>,
}

impl FunctionTable {
    pub fn abstract_state_action(rows: Vec<Vec<f64>>, bound: f64) -> Self {
        FunctionTable {
            values: TableValues::AbstractStateAction { rows },
            bound,
            lipschitz_lq: None,
        }
    }

    pub fn history_action(rows: BTreeMap<String, Vec<f64>>, bound: f64) -> Self {
        FunctionTable {
            values: TableValues::HistoryAction { rows },
            bound,
            lipschitz_lq: None,
        }
    }

    pub fn history_scalar(rows: BTreeMap<String, f64>, bound: f64) -> Self {
        FunctionTable {
            values: TableValues::HistoryScalar { rows },
            bound,
            lipschitz_lq: None,
        }
    }

    pub fn future_pair(rows: BTreeMap<String, f64>, bound: f64) -> Self {
        FunctionTable {
            values: TableValues::FuturePair { rows },
            bound,
            lipschitz_lq: None,
        }
    }

    pub fn at_state_action(&self, x: usize, a: usize) -> Result<f64> {
        match &self.values {
            TableValues::AbstractStateAction { rows } => rows
                .get(x)
                .and_then(|row| row.get(a))
                .copied()
                .ok_or_else(|| {
                    Error::Core(pomdp_core::Error::IndexOutOfRange {
                        what: "abstract state-action",
                        index: x,
                        size: rows.len(),
                    })
                }),
            _ => Err(domain_err("state-action")),
        }
    }

    pub fn at_history_action(&self, key: &str, a: usize) -> Result<f64> {
        match &self.values {
            TableValues::HistoryAction { rows } => rows
                .get(key)
                .and_then(|row| row.get(a))
                .copied()
                .ok_or_else(|| {
                    Error::Core(pomdp_core::Error::DomainMismatch(format!(
                        "history {key:?} action {a} not in table"
                    )))
                }),
            _ => Err(domain_err("history-action")),
        }
    }

    pub fn at_history(&self, key: &str) -> Result<f64> {
        match &self.values {
            TableValues::HistoryScalar { rows } => rows.get(key).copied().ok_or_else(|| {
                Error::Core(pomdp_core::Error::DomainMismatch(format!(
                    "history {key:?} not in table"
                )))
            }),
            _ => Err(domain_err("history-scalar")),
        }
    }

    pub fn at_future(&self, key: &str) -> Result<f64> {
        match &self.values {
            TableValues::FuturePair { rows } => rows.get(key).copied().ok_or_else(|| {
                Error::Core(pomdp_core::Error::DomainMismatch(format!(
                    "future {key:?} not in table"
                )))
            }),
            _ => Err(domain_err("future-pair")),
        }
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        let fold = |acc: f64, v: &f64| acc.max(v.abs());
        match &self.values {
            TableValues::AbstractStateAction { rows } => rows
                .iter()
                .flat_map(|row| row.iter())
                .fold(0.0, |acc, v| fold(acc, v)),
            TableValues::HistoryAction { rows } => rows
                .values()
                .flat_map(|row| row.iter())
                .fold(0.0, |acc, v| fold(acc, v)),
            TableValues::HistoryScalar { rows } => rows.values().fold(0.0, fold),
            TableValues::FuturePair { rows } => rows.values().fold(0.0, fold),
        }
    }

    pub fn check_bound(&self) -> Result<()> {
        let sup = self.sup_norm();
        if sup > self.bound + 1e-12 {
            return Err(Error::Invalid(format!(
                "table entries reach {sup}, declared bound {}",
                self.bound
            )));
        }
        Ok(())
    }
}

/// Pulls an abstract-state table back to the full graph: the lifted function
/// assigns each node the value of its class.
pub fn lift(
    f: &FunctionTable,
    graph: &BeliefGraph,
    phi: &AbstractionMap,
) -> Result<FunctionTable> {
    let rows = match &f.values {
        TableValues::AbstractStateAction { rows } => rows,
        _ => return Err(domain_err("state-action")),
    };
    let mut lifted = BTreeMap::new();
    for i in 0..graph.len() {
        let key = graph.canonical_of(i);
        let slot = phi
            .slot_of(&key)
            .ok_or_else(|| Error::MapMismatch(format!("node {key:?} unassigned")))?;
        lifted.insert(key, rows[slot].clone());
    }
    Ok(FunctionTable {
        values: TableValues::HistoryAction { rows: lifted },
        bound: f.bound,
        lipschitz_lq: f.lipschitz_lq,
    })
}

/// Restricts a history-keyed table to the representatives of `phi`, producing
/// an abstract-state table. Together with `lift` this is the identity on
/// representative rows.
pub fn restrict(f: &FunctionTable, phi: &AbstractionMap) -> Result<FunctionTable> {
    let rows = match &f.values {
        TableValues::HistoryAction { rows } => rows,
        _ => return Err(domain_err("history-action")),
    };
    let mut out = Vec::with_capacity(phi.n_states());
    for rep in &phi.representatives {
        let row = rows.get(rep.as_str()).ok_or_else(|| {
            Error::MapMismatch(format!("representative {rep:?} missing from table"))
        })?;
        out.push(row.clone());
    }
    Ok(FunctionTable {
        values: TableValues::AbstractStateAction { rows: out },
        bound: f.bound,
        lipschitz_lq: f.lipschitz_lq,
    })
}
