//! Belief-state abstractions for partially observed models.
//!
//! The entry point is a breadth-first enumeration of every reachable
//! positive-probability history together with its filtering belief. Two
//! partitions of that graph are supported: metric covers at a chosen
//! resolution and truncations onto fixed-length memory windows. A partition
//! induces a small tabular model over its classes, which can be evaluated
//! exactly, re-wrapped as a fully observed model, or compared against the
//! source system. The stability probes quantify how quickly the source model
//! forgets its history, which governs how much a truncation costs.

pub mod cover;
pub mod error;
pub mod graph;
pub mod induce;
pub mod lphi;
pub mod map;
pub mod short_memory;
pub mod stability;
pub mod table;
pub mod truncation;

pub use cover::build_eps_cover;
pub use error::{Error, Result};
pub use graph::{enumerate_reachable, BeliefGraph, BeliefNode};
pub use induce::{
    class_weights, induce_abstract_mdp, induce_abstract_policy, AbstractMDP, FrontierClosure,
};
pub use lphi::{compute_lphi1, compute_lphi1_finite};
pub use map::{AbstractionKind, AbstractionMap, PFamily};
pub use short_memory::{build_short_memory_pomdp, ShortMemory};
pub use stability::{measure_stability, ForgettingCurve, StabilityReport};
pub use table::{lift, restrict, FunctionTable, TableValues};
pub use truncation::build_truncation;
