//! The forecaster: configuration, parameters, forward/backward pass, training and checkpoints.

pub mod check;
pub mod checkpoint;
pub mod config;
pub mod forecast;
pub mod params;
pub mod train;

pub use check::{gradient_suite, GradCheckCase, GRADCHECK_TOLERANCE};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{ModelConfig, Variant};
pub use forecast::{forecast_scene, joint_loss, scene_loss, scene_loss_and_grad, Forecaster};
pub use params::ModelParams;
pub use train::{early_stopping_outcome, history_csv, mean_eval_loss, train, train_with, EpochRecord, Trainer};
