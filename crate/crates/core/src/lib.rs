//! Pose-skeleton compositing, a from-scratch vision transformer, and
//! multi-view action fusion for distracted-driver recognition.
//!
//! The numeric core ([`autodiff`], [`vit`], [`training`]) is generic over the
//! scalar type; the aliases below pin the double-precision instantiation used
//! by the command-line tool.

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod distribution;
pub mod error;
pub mod fusion;
pub mod imaging;
pub mod labels;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod training;
pub mod vit;

pub use error::{CheckpointError, Error, Result};
pub use distribution::ClassDistribution;
pub use scalar::Scalar;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tape64 = autodiff::Tape<f64>;
pub type ModelParams64 = vit::ModelParams<f64>;
pub type ModelParams32 = vit::ModelParams<f32>;
pub type ClassDistribution64 = distribution::ClassDistribution<f64>;
