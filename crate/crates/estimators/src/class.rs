use abstraction::{FunctionTable, TableValues};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the argument kind a table accepts, used to keep classes
/// homogeneous and error messages readable.
pub fn domain_kind(table: &FunctionTable) -> &'static str {
    match &table.values {
        TableValues::AbstractStateAction { .. } => "abstract-state-action",
        TableValues::HistoryAction { .. } => "history-action",
        TableValues::HistoryScalar { .. } => "history-scalar",
        TableValues::FuturePair { .. } => "future-pair",
    }
}

/// An ordered, explicitly finite hypothesis class. Fit routines search it
/// exhaustively and break ties toward the lowest index, so the order is part
/// of the contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionClass {
    pub members: Vec<FunctionTable>,
}

impl FunctionClass {
    pub fn new(members: Vec<FunctionTable>) -> Result<Self> {
        let class = FunctionClass { members };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        let first = match self.members.first() {
            Some(f) => domain_kind(f),
            None => return Err(Error::Invalid("function class is empty".into())),
        };
        for (i, f) in self.members.iter().enumerate() {
            let kind = domain_kind(f);
            if kind != first {
                return Err(Error::Invalid(format!(
                    "member {i} has domain {kind}, class is {first}"
                )));
            }
            f.check_bound().map_err(|e| {
                Error::Invalid(format!("member {i} violates its declared bound: {e}"))
            })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Largest declared sup-norm bound across members.
    pub fn class_bound(&self) -> f64 {
        self.members.iter().fold(0.0, |acc, f| acc.max(f.bound))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Core(e.into()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let class: FunctionClass =
            serde_json::from_str(text).map_err(|e| Error::Core(e.into()))?;
        class.validate()?;
        Ok(class)
    }
}

/// Which system the estimate was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimateMode {
    /// Beliefs and policies on the original model.
    TrueSpace,
    /// Histories collapsed through a state abstraction with this many classes.
    Abstract { classes: usize },
    /// Histories collapsed onto their last-`t` memory window.
    Windowed { t: usize },
}

/// Outcome of an exhaustive fit: the selected member, its loss, and the full
/// per-member loss column for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub j_hat: f64,
    pub chosen_index: usize,
    pub empirical_loss: f64,
    pub n_used: usize,
    pub mode: EstimateMode,
    /// Loss (or inner-max value) per class member, index-aligned.
    pub member_losses: Vec<f64>,
}

impl EstimateResult {
    /// chosen_index must point at the first minimum of member_losses.
    pub fn check_argmin(&self) -> Result<()> {
        let chosen = self
            .member_losses
            .get(self.chosen_index)
            .copied()
            .ok_or_else(|| Error::Invalid("chosen_index outside member_losses".into()))?;
        for (i, &l) in self.member_losses.iter().enumerate() {
            if l < chosen || (l == chosen && i < self.chosen_index) {
                return Err(Error::Invalid(format!(
                    "member {i} (loss {l}) beats chosen {} (loss {chosen})",
                    self.chosen_index
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Core(e.into()))
    }
}

/// First index attaining the minimum. NaN losses are rejected rather than
/// silently ordered.
pub(crate) fn argmin_lowest_index(losses: &[f64]) -> Result<usize> {
    if losses.is_empty() {
        return Err(Error::Invalid("no losses to minimize".into()));
    }
    if losses.iter().any(|l| l.is_nan()) {
        return Err(Error::Invalid("loss evaluated to NaN".into()));
    }
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate().skip(1) {
        if l < losses[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table(v: f64) -> FunctionTable {
        FunctionTable::abstract_state_action(vec![vec![v, v]], v.abs() + 1.0)
    }

    #[test]
    fn classes_must_be_nonempty_and_homogeneous() {
        assert!(FunctionClass::new(vec![]).is_err());
        let mut rows = BTreeMap::new();
        rows.insert("o0".to_string(), vec![0.0]);
        let mixed = FunctionClass::new(vec![
            table(1.0),
            FunctionTable::history_action(rows, 1.0),
        ]);
        assert!(mixed.is_err());
        let ok = FunctionClass::new(vec![table(1.0), table(2.0)]).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.class_bound(), 3.0);
    }

    #[test]
    fn bound_violations_are_rejected_at_construction() {
        let mut bad = table(1.0);
        bad.bound = 0.5;
        assert!(FunctionClass::new(vec![bad]).is_err());
    }

    #[test]
    fn json_round_trip_preserves_the_class() {
        let class = FunctionClass::new(vec![table(0.25), table(1.5)]).unwrap();
        let text = class.to_json_string().unwrap();
        let back = FunctionClass::from_json_str(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.to_json_string().unwrap(), text);
    }

    #[test]
    fn argmin_takes_the_lowest_index_on_ties() {
        assert_eq!(argmin_lowest_index(&[2.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(argmin_lowest_index(&[0.0, 0.0]).unwrap(), 0);
        assert!(argmin_lowest_index(&[f64::NAN]).is_err());
    }

    #[test]
    fn argmin_check_flags_violations() {
        let ok = EstimateResult {
            j_hat: 0.0,
            chosen_index: 1,
            empirical_loss: 1.0,
            n_used: 10,
            mode: EstimateMode::TrueSpace,
            member_losses: vec![2.0, 1.0, 1.0],
        };
        ok.check_argmin().unwrap();
        let bad = EstimateResult {
            chosen_index: 2,
            ..ok
        };
        assert!(bad.check_argmin().is_err());
    }
}
