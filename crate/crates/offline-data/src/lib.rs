//! Offline data for history-based off-policy evaluation.
//!
//! Two dataset shapes: double-sampled records (a behavior-policy prefix, one
//! probed action, and two successor draws restarted from the prefix belief)
//! and full fixed-horizon trajectories. Generation is deterministic given
//! (model, policy, n, seed) through per-record RNG streams, and persistence
//! is byte-stable JSONL with a sidecar meta file carrying content hashes of
//! the generating artifacts.

pub mod dataset;
pub mod dist;
pub mod error;
pub mod gen;
pub mod meta;
pub mod record;

pub use dataset::{meta_path, D1Dataset, D2Dataset};
pub use dist::PrefixDist;
pub use error::{Error, Result};
pub use gen::{gen_d1, gen_d2, GENERATOR_VERSION};
pub use meta::{DatasetKind, DatasetMeta};
pub use record::{D1Mode, D1Record, D2Trajectory};
