//! QoS-satisfaction and explanation-fidelity evaluation.

pub mod fidelity;
pub mod metrics;
pub mod policy;

pub use fidelity::{feature_std, fidelity_pearson, pearson, perturbation_response, FidelityReport};
pub use metrics::{qos_satisfaction, EpisodeMetrics, QosTally, SlotRecord};
pub use policy::{
    collect_states, eval_seeds, evaluate_policy, random_action, run_comparison, ActorPolicy, ComparisonRow, Policy,
    RandomPolicy,
};
