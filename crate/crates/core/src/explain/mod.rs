//! Shapley-value attributions over state features.

pub mod coalition;
pub mod normalize;
pub mod rollout;
pub mod shapley;
pub mod synthetic;

pub use coalition::{mask_state, Coalition};
pub use normalize::{normalize_importance, NORMALIZE_EPS};
pub use rollout::{characteristic_value, BatchPolicy, RolloutEnv, RolloutGame, RolloutSettings};
pub use shapley::{
    shapley_exact, shapley_mc, shapley_weights, CoalitionGame, EstimatorKind, FnGame, RolloutInfo, ShapleyReport,
    MAX_EXACT_FEATURES,
};
