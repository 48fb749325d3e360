//! Sidecar metadata pinning a dataset to the inputs that generated it.

use pomdp_core::{BeliefPolicy, TabularPOMDP, UpdateOrder};
use serde::{Deserialize, Serialize};

use crate::dist::PrefixDist;
use crate::error::{Error, Result};
use crate::record::D1Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    D1,
    D2,
}

/// Everything needed to regenerate or audit a dataset: content hashes of the
/// model and behavior policy, the sample count, the RNG seed, the generative
/// story, and the length law (prefix distribution for double-sampled data,
/// horizon for trajectories).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub kind: DatasetKind,
    pub model_hash: String,
    pub policy_hash: String,
    pub n: usize,
    pub seed: u64,
    pub order: UpdateOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_law: Option<PrefixDist>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<D1Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub generator_version: String,
}

impl DatasetMeta {
    pub fn check_model(&self, model: &TabularPOMDP) -> Result<()> {
        let supplied = model.content_hash();
        if supplied != self.model_hash {
            return Err(Error::HashMismatch {
                artifact: "model",
                recorded: self.model_hash.clone(),
                supplied,
            });
        }
        Ok(())
    }

    pub fn check_policy(&self, policy: &BeliefPolicy) -> Result<()> {
        let supplied = policy.content_hash();
        if supplied != self.policy_hash {
            return Err(Error::HashMismatch {
                artifact: "behavior policy",
                recorded: self.policy_hash.clone(),
                supplied,
            });
        }
        Ok(())
    }
}
