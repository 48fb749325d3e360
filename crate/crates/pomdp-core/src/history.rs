//! Histories and futures as integer-coded observation/action sequences.
//!
//! Two history shapes appear throughout: tau_h ends at an action boundary
//! (h-1 observations, h-1 actions, including the empty tau_1) and tau_h-plus
//! additionally carries the step-h observation. Beliefs are defined on the
//! plus shape only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// tau_h: ends after an action (or is empty).
    ActionBoundary,
    /// tau_h-plus: ends after an observation.
    Plus,
}

/// Alternating observation/action sequence o1 a1 o2 a2 ...
///
/// Invariant: obs.len() == acts.len() (action boundary) or
/// obs.len() == acts.len() + 1 (plus shape).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct History {
    pub obs: Vec<usize>,
    pub acts: Vec<usize>,
}

impl History {
    pub fn empty() -> Self {
        History::default()
    }

    pub fn new(obs: Vec<usize>, acts: Vec<usize>) -> Result<Self> {
        let h = History { obs, acts };
        h.check()?;
        Ok(h)
    }

    fn check(&self) -> Result<()> {
        let (no, na) = (self.obs.len(), self.acts.len());
        if no != na && no != na + 1 {
            return Err(Error::DomainMismatch(format!(
                "history with {no} observations and {na} actions violates alternation"
            )));
        }
        Ok(())
    }

    pub fn phase(&self) -> Phase {
        if self.obs.len() == self.acts.len() + 1 {
            Phase::Plus
        } else {
            Phase::ActionBoundary
        }
    }

    /// Timestep index: tau_h-plus has h observations; tau_h has h-1 actions.
    pub fn step(&self) -> usize {
        match self.phase() {
            Phase::Plus => self.obs.len(),
            Phase::ActionBoundary => self.acts.len() + 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty() && self.acts.is_empty()
    }

    pub fn last_obs(&self) -> Option<usize> {
        match self.phase() {
            Phase::Plus => self.obs.last().copied(),
            Phase::ActionBoundary => None,
        }
    }

    pub fn last_act(&self) -> Option<usize> {
        match self.phase() {
            Phase::ActionBoundary => self.acts.last().copied(),
            Phase::Plus => None,
        }
    }

    pub fn push_obs(&mut self, o: usize) -> Result<()> {
        if self.phase() == Phase::Plus {
            return Err(Error::DomainMismatch(
                "cannot append an observation to a plus-shaped history".into(),
            ));
        }
        self.obs.push(o);
        Ok(())
    }

    pub fn push_act(&mut self, a: usize) -> Result<()> {
        if self.phase() == Phase::ActionBoundary {
            return Err(Error::DomainMismatch(
                "cannot append an action at an action boundary".into(),
            ));
        }
        self.acts.push(a);
        Ok(())
    }

    pub fn child_plus(&self, a: usize, o: usize) -> Result<History> {
        let mut h = self.clone();
        h.push_act(a)?;
        h.push_obs(o)?;
        Ok(h)
    }

    /// Keep only the last-T window. A plus history keeps its last T
    /// observations with the T-1 interleaved actions; an action-boundary
    /// history keeps its last T-1 (observation, action) pairs, so that
    /// window(tau_h) extended by o_h equals window(tau_h-plus).
    pub fn window(&self, t: usize) -> History {
        assert!(t >= 1, "window size must be >= 1");
        match self.phase() {
            Phase::Plus => {
                let h = self.obs.len();
                if h <= t {
                    return self.clone();
                }
                let drop = h - t;
                History {
                    obs: self.obs[drop..].to_vec(),
                    acts: self.acts[drop..].to_vec(),
                }
            }
            Phase::ActionBoundary => {
                let pairs = self.acts.len();
                if pairs <= t - 1 {
                    return self.clone();
                }
                let drop = pairs - (t - 1);
                History {
                    obs: self.obs[drop..].to_vec(),
                    acts: self.acts[drop..].to_vec(),
                }
            }
        }
    }

    /// Canonical string key: "o0-a1-o2" style tokens; empty history is "".
    pub fn canonical(&self) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(self.obs.len() + self.acts.len());
        for i in 0..self.obs.len() {
            parts.push(format!("o{}", self.obs[i]));
            if i < self.acts.len() {
                parts.push(format!("a{}", self.acts[i]));
            }
        }
        parts.join("-")
    }

    pub fn parse(text: &str) -> Result<History> {
        if text.is_empty() {
            return Ok(History::empty());
        }
        let mut h = History::empty();
        for tok in text.split('-') {
            let (kind, num) = tok.split_at(1);
            let idx: usize = num
                .parse()
                .map_err(|_| Error::SchemaMismatch(format!("bad history token {tok:?}")))?;
            match kind {
                "o" => h.push_obs(idx).map_err(|_| bad_alternation(text))?,
                "a" => h.push_act(idx).map_err(|_| bad_alternation(text))?,
                _ => return Err(Error::SchemaMismatch(format!("bad history token {tok:?}"))),
            }
        }
        Ok(h)
    }
}

fn bad_alternation(text: &str) -> Error {
    Error::SchemaMismatch(format!("history {text:?} violates alternation"))
}

/// A future pair f_h: the forward segment (o_h, a_h, ..., o_H, a_H) together
/// with the history tau_h it is attached to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Future {
    /// Forward observations o_h..o_H.
    pub obs: Vec<usize>,
    /// Forward actions a_h..a_H; always the same length as obs.
    pub acts: Vec<usize>,
    /// The attached tau_h (action boundary).
    pub attached: History,
}

impl Future {
    pub fn new(obs: Vec<usize>, acts: Vec<usize>, attached: History) -> Result<Self> {
        if obs.len() != acts.len() {
            return Err(Error::DomainMismatch(format!(
                "future with {} observations and {} actions",
                obs.len(),
                acts.len()
            )));
        }
        if attached.phase() != Phase::ActionBoundary {
            return Err(Error::DomainMismatch(
                "future must attach to an action-boundary history".into(),
            ));
        }
        Ok(Future { obs, acts, attached })
    }

    /// Steps covered by the forward segment.
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Canonical key "o0-a1-o1-a0|o2-a1": forward segment, pipe, attached history.
    pub fn canonical(&self) -> String {
        let fwd = History {
            obs: self.obs.clone(),
            acts: self.acts.clone(),
        };
        // the forward segment serializes with the same token scheme
        format!("{}|{}", fwd.canonical(), self.attached.canonical())
    }

    /// Truncate the attached history to its last-T window (the forward
    /// segment is untouched).
    pub fn with_windowed_history(&self, t: usize) -> Future {
        Future {
            obs: self.obs.clone(),
            acts: self.acts.clone(),
            attached: self.attached.window(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternation_is_enforced() {
        assert!(History::new(vec![0, 1], vec![0]).is_ok());
        assert!(History::new(vec![0, 1], vec![0, 1]).is_ok());
        assert!(History::new(vec![0, 1, 2], vec![0]).is_err());
        let mut h = History::new(vec![0], vec![]).unwrap();
        assert!(h.push_obs(1).is_err());
        h.push_act(0).unwrap();
        assert!(h.push_act(0).is_err());
    }

    #[test]
    fn step_counts_follow_the_two_shapes() {
        let tau1 = History::empty();
        assert_eq!(tau1.phase(), Phase::ActionBoundary);
        assert_eq!(tau1.step(), 1);
        let tau1_plus = History::new(vec![2], vec![]).unwrap();
        assert_eq!(tau1_plus.phase(), Phase::Plus);
        assert_eq!(tau1_plus.step(), 1);
        let tau2 = History::new(vec![2], vec![0]).unwrap();
        assert_eq!(tau2.step(), 2);
        let tau2_plus = History::new(vec![2, 1], vec![0]).unwrap();
        assert_eq!(tau2_plus.step(), 2);
    }

    #[test]
    fn canonical_round_trips() {
        let h = History::new(vec![1, 0, 3], vec![2, 1]).unwrap();
        assert_eq!(h.canonical(), "o1-a2-o0-a1-o3");
        assert_eq!(History::parse(&h.canonical()).unwrap(), h);
        assert_eq!(History::parse("").unwrap(), History::empty());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(History::parse("o1-x2").is_err());
        assert!(History::parse("o1-o2").is_err());
        assert!(History::parse("a0").is_err());
    }

    #[test]
    fn window_keeps_last_t_and_aligns_across_shapes() {
        // tau_4-plus = o9 a1 o8 a0 o7 a1 o6
        let plus = History::new(vec![9, 8, 7, 6], vec![1, 0, 1]).unwrap();
        let w2 = plus.window(2);
        assert_eq!(w2, History::new(vec![7, 6], vec![1]).unwrap());
        assert_eq!(plus.window(9), plus);

        // tau_4 = o9 a1 o8 a0 o7 a1; window(tau_4) + o6 must equal window(tau_4-plus)
        let tau = History::new(vec![9, 8, 7], vec![1, 0, 1]).unwrap();
        let mut wt = tau.window(2);
        wt.push_obs(6).unwrap();
        assert_eq!(wt, w2);
    }

    #[test]
    fn future_pair_keys_are_stable() {
        let tau = History::new(vec![1], vec![0]).unwrap();
        let f = Future::new(vec![2, 0], vec![1, 1], tau).unwrap();
        assert_eq!(f.canonical(), "o2-a1-o0-a1|o1-a0");
        let f1 = Future::new(vec![2], vec![1], History::empty()).unwrap();
        assert_eq!(f1.canonical(), "o2-a1|");
    }

    #[test]
    fn future_requires_action_boundary_attachment() {
        let plus = History::new(vec![1], vec![]).unwrap();
        assert!(Future::new(vec![0], vec![0], plus).is_err());
        assert!(Future::new(vec![0, 1], vec![0], History::empty()).is_err());
    }
}
