//! Desk-scale bench: Gaussian-mixture target and reference data, linear
//! softmax teacher and student, and the duplicate check between image sets.

mod config;
mod dedup;
mod generate;
mod pipeline;
mod train;

pub use config::{Loss, Resample, SimConfig};
pub use dedup::{bucket, find_duplicates, mean_l1};
pub use generate::{generate, rng_for, Dataset, SimData};
pub use pipeline::{run_configured, run_sim, Bench, SimReport};
pub use train::{
    loss_and_grad, sample_dirichlet, train_softmax, Gradient, LinearModel, Targets, TrainParams,
    Trained,
};
