//! Tabular partially observed decision processes: filtering under both
//! update orders, history-indexed beliefs, policies, exact and sampled
//! evaluation, occupancy measures, and finite-horizon residuals.

pub mod belief;
pub mod error;
pub mod history;
pub mod mdp;
pub mod model;
pub mod occupancy;
pub mod optimal;
pub mod policy;
pub mod residual;
pub mod rng;
pub mod sim;
pub mod value;

pub use belief::{
    belief_of_history, belief_update, counter_example_model, initial_belief, initial_obs_dist,
    obs_predictive, obs_prob_given_tau, posterior, predict, Belief,
};
pub use error::{Error, Result};
pub use history::{Future, History, Phase};
pub use mdp::FiniteMDP;
pub use model::{TabularPOMDP, UpdateOrder};
pub use occupancy::{occupancy, Normalization, OccupancyTable};
pub use optimal::{optimal_value_2state, Pwlc};
pub use policy::{BeliefPolicy, PolicyKind};
pub use residual::{
    bellman_residual_h, enumerate_action_histories, enumerate_futures, FutureValueFn,
};
pub use rng::{random_simplex, sample_categorical, stream};
pub use sim::{continue_from_belief, sample_prefix, sample_trajectory, SampledStep};
pub use value::{exact_value, mc_value, ValueReport, DEFAULT_NODE_CAP};
