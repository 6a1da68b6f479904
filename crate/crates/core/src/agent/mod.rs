//! Attention-augmented DDPG.

pub mod actor;
pub mod config;
pub mod ddpg;
pub mod replay;
pub mod train;

pub use actor::{ActorCache, ActorGradients, AttentionActor, AttentionMode};
pub use config::{TrainConfig, Variant};
pub use ddpg::{Agent, BatchLosses, ExplainTargets};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use train::{run_training, train, train_with, EpisodeLog, TrainingRun};
