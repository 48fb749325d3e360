//! Off-policy value estimators over offline datasets, their exact-enumeration
//! oracles, and the finite-sample error bounds that go with them.

mod bounds;
mod class;
mod classes;
mod ds;
mod error;
pub mod exact;
mod fdvf;
mod reduce;
mod weights;

pub use bounds::{
    compute_bound_ds, compute_bound_ds_rate, compute_bound_fdvf, ds_l_e, ds_l_phi,
    fdvf_default_c, fdvf_l_e_main, fdvf_l_e_tighter, fdvf_l_phi_main, fdvf_l_phi_tighter,
    DsBoundParams, DsRateBound, FdvfBoundParams,
};
pub use class::{EstimateMode, EstimateResult, FunctionClass};
pub use classes::{
    exact_abstract_q, exact_fdvf, lipschitz_state_action_tables, perturbed_copies,
    residual_theta_class,
};
pub use ds::{ds_fit, ds_loss, estimate_j, DsMode};
pub use error::{Error, Result};
pub use fdvf::{
    fdvf_estimate_data, fdvf_estimate_exact, fdvf_fit, fdvf_inner, fdvf_inner_exact, MuSpec,
};
pub use weights::{importance_weight_wphi_t, importance_weights_wphi_t};
