//! Twin-actor soft actor-critic agent and training loop.

mod bundle;
mod checkpoint;
mod hyper;
pub mod losses;
mod strategy;
mod train;

pub use bundle::{ActorStep, AgentBundle, CriticStep, SelectionDiagnostics};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use hyper::Hyperparameters;
pub use strategy::{Aggregate, SelectionStrategy};
pub use train::{
    evaluate_policy, random_policy_run, train, train_sac_baseline, write_metrics_csv, Algorithm,
    EpisodeLog, Trainer, TrainingLog, INIT_STREAM,
};
