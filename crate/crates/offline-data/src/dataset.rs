//! JSONL persistence. One record per line next to a sidecar meta file;
//! writes are byte-deterministic so files can be content-hashed and
//! regenerated bit for bit.

use std::path::{Path, PathBuf};

use pomdp_core::{BeliefPolicy, History, TabularPOMDP};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::meta::{DatasetKind, DatasetMeta};
use crate::record::{D1Mode, D1Record, D2Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct D1Dataset {
    pub meta: DatasetMeta,
    pub records: Vec<D1Record>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct D2Dataset {
    pub meta: DatasetMeta,
    pub trajectories: Vec<D2Trajectory>,
}

/// Sidecar path: data at `x.jsonl` keeps its meta at `x.meta.json`.
pub fn meta_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("meta.json")
}

fn schema(msg: String) -> crate::error::Error {
    pomdp_core::Error::SchemaMismatch(msg).into()
}

// Wire shape of one record: the prefix is the interleaved integer coding
// [o_1, a_1, o_2, ..., o_h].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineD1 {
    h: usize,
    prefix: Vec<usize>,
    a: usize,
    #[serde(rename = "rA")]
    r_a: f64,
    #[serde(rename = "oA")]
    o_a: usize,
    #[serde(rename = "rB")]
    r_b: f64,
    #[serde(rename = "oB")]
    o_b: usize,
    mode: D1Mode,
}

fn code_history(h: &History) -> Vec<usize> {
    h.canonical()
        .split('-')
        .filter(|tok| !tok.is_empty())
        .map(|tok| tok[1..].parse::<usize>().expect("canonical token"))
        .collect()
}

fn decode_history(seq: &[usize]) -> Result<History> {
    let mut h = History::empty();
    for (i, &x) in seq.iter().enumerate() {
        if i % 2 == 0 {
            h.push_obs(x)?;
        } else {
            h.push_act(x)?;
        }
    }
    Ok(h)
}

impl From<&D1Record> for LineD1 {
    fn from(r: &D1Record) -> Self {
        LineD1 {
            h: r.h,
            prefix: code_history(&r.prefix),
            a: r.action,
            r_a: r.reward_a,
            o_a: r.obs_a,
            r_b: r.reward_b,
            o_b: r.obs_b,
            mode: r.mode,
        }
    }
}

impl TryFrom<LineD1> for D1Record {
    type Error = crate::error::Error;

    fn try_from(line: LineD1) -> Result<D1Record> {
        let record = D1Record {
            h: line.h,
            prefix: decode_history(&line.prefix)?,
            action: line.a,
            reward_a: line.r_a,
            obs_a: line.o_a,
            reward_b: line.r_b,
            obs_b: line.o_b,
            mode: line.mode,
        };
        record.validate()?;
        Ok(record)
    }
}

fn write_pair(path: &Path, meta: &DatasetMeta, lines: String) -> Result<()> {
    let mut meta_text = serde_json::to_string_pretty(meta)?;
    meta_text.push('\n');
    std::fs::write(meta_path(path), meta_text)?;
    std::fs::write(path, lines)?;
    Ok(())
}

fn read_pair(path: &Path, kind: DatasetKind) -> Result<(DatasetMeta, Vec<String>)> {
    let meta: DatasetMeta = serde_json::from_str(&std::fs::read_to_string(meta_path(path))?)?;
    if meta.kind != kind {
        return Err(schema(format!(
            "expected a {kind:?} dataset, meta declares {:?}",
            meta.kind
        )));
    }
    let body = std::fs::read_to_string(path)?;
    let lines: Vec<String> = body.lines().map(str::to_string).collect();
    if lines.len() != meta.n {
        return Err(schema(format!(
            "meta declares {} records, file holds {}; truncated or corrupt",
            meta.n,
            lines.len()
        )));
    }
    Ok((meta, lines))
}

impl D1Dataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&LineD1::from(r))?);
            out.push('\n');
        }
        write_pair(path, &self.meta, out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, lines) = read_pair(path, DatasetKind::D1)?;
        let declared = meta
            .mode
            .ok_or_else(|| schema("D1 meta must declare the sampling mode".to_string()))?;
        let mut records = Vec::with_capacity(lines.len());
        for line in &lines {
            let parsed: LineD1 = serde_json::from_str(line)?;
            let record = D1Record::try_from(parsed)?;
            if record.mode != declared {
                return Err(schema(format!(
                    "record mode {:?} disagrees with meta mode {declared:?}",
                    record.mode
                )));
            }
            records.push(record);
        }
        Ok(D1Dataset { meta, records })
    }

    /// Refuse to pair the dataset with artifacts other than the ones it was
    /// generated from.
    pub fn check_pairing(&self, model: &TabularPOMDP, policy: &BeliefPolicy) -> Result<()> {
        self.meta.check_model(model)?;
        self.meta.check_policy(policy)
    }
}

impl D2Dataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for t in &self.trajectories {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        write_pair(path, &self.meta, out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, lines) = read_pair(path, DatasetKind::D2)?;
        let horizon = meta
            .horizon
            .ok_or_else(|| schema("D2 meta must declare the horizon".to_string()))?;
        let mut trajectories = Vec::with_capacity(lines.len());
        for line in &lines {
            let t: D2Trajectory = serde_json::from_str(line)?;
            t.validate(horizon)?;
            trajectories.push(t);
        }
        Ok(D2Dataset { meta, trajectories })
    }

    pub fn check_pairing(&self, model: &TabularPOMDP, policy: &BeliefPolicy) -> Result<()> {
        self.meta.check_model(model)?;
        self.meta.check_policy(policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_coding_round_trips() {
        for text in ["o0", "o2-a1-o0", "o1-a0-o1-a0-o1"] {
            let h = History::parse(text).unwrap();
            let coded = code_history(&h);
            assert_eq!(decode_history(&coded).unwrap(), h);
        }
        assert_eq!(code_history(&History::parse("o2-a1-o0").unwrap()), vec![2, 1, 0]);
        assert_eq!(decode_history(&[]).unwrap(), History::empty());
    }

    #[test]
    fn boundary_coded_prefixes_fail_record_validation() {
        let line = LineD1 {
            h: 1,
            prefix: vec![0, 1],
            a: 1,
            r_a: 0.0,
            o_a: 0,
            r_b: 0.0,
            o_b: 0,
            mode: D1Mode::IndependentRedraw,
        };
        assert!(D1Record::try_from(line).is_err());
    }
}
