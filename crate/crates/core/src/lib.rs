//! Joint forecasting of human global motion and skeleton pose for every person in a scene.
//!
//! A GRU encoder summarizes each person's observed joint offsets into an embedding; the
//! embeddings are pooled into a permutation-invariant social feature, a scene descriptor is
//! projected to a context feature, and a GRU decoder conditioned on all three rolls out
//! future offsets. Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the scalar to `f64`, which the training and
//! gradient-check paths assume.

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod optim;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod seq2seq;
pub mod social;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = tensor::Tensor<f64>;
pub type ParamSet64 = params::ParamSet<f64>;
pub type Pose64 = data::Pose<f64>;
pub type PoseSequence64 = data::PoseSequence<f64>;
pub type Scene64 = data::Scene<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type Forecaster64 = model::Forecaster<f64>;
pub type Checkpoint64 = model::Checkpoint<f64>;
pub type ScenePrediction64 = eval::ScenePrediction<f64>;
pub type ContextProvider64 = social::ContextProvider<f64>;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Scene32 = data::Scene<f32>;
pub type Forecaster32 = model::Forecaster<f32>;
