//! Self-supervised optimization of grasp, spin and catch primitives for
//! in-hand pen spinning.
//!
//! The numeric core ([`action_space`], [`cma`], [`perception`], [`reward`],
//! [`simulator`]) is generic over the scalar type through [`Scalar`]; the
//! aliases below pin the common `f64` and `f32` instantiations. The
//! [`campaign`] layer drives full optimization runs and file I/O in `f64`.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action_space;
pub mod campaign;
pub mod cma;
pub mod error;
pub mod perception;
pub mod reward;
pub mod scalar;
pub mod simulator;
pub mod trajectory_io;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ActionParams64 = action_space::ActionParams<f64>;
pub type ActionParams32 = action_space::ActionParams<f32>;
pub type PhysicalAction64 = action_space::PhysicalAction<f64>;
pub type PhysicalAction32 = action_space::PhysicalAction<f32>;
pub type ScalingConfig64 = action_space::ScalingConfig<f64>;
pub type ScalingConfig32 = action_space::ScalingConfig<f32>;

pub type Optimizer64 = cma::OptimizerState<f64>;
pub type Optimizer32 = cma::OptimizerState<f32>;
pub type Candidate64 = cma::Candidate<f64>;
pub type Candidate32 = cma::Candidate<f32>;

pub type TrajectoryFrame64 = perception::TrajectoryFrame<f64>;
pub type TrajectoryFrame32 = perception::TrajectoryFrame<f32>;
pub type PenObservation64 = perception::PenObservation<f64>;
pub type PenObservation32 = perception::PenObservation<f32>;
pub type FilterConfig64 = perception::FilterConfig<f64>;
pub type FilterConfig32 = perception::FilterConfig<f32>;

pub type RewardConfig64 = reward::RewardConfig<f64>;
pub type RewardConfig32 = reward::RewardConfig<f32>;
pub type RewardBreakdown64 = reward::RewardBreakdown<f64>;
pub type RewardBreakdown32 = reward::RewardBreakdown<f32>;

pub type ObjectModel64 = simulator::ObjectModel<f64>;
pub type ObjectModel32 = simulator::ObjectModel<f32>;
pub type SimConfig64 = simulator::SimConfig<f64>;
pub type SimConfig32 = simulator::SimConfig<f32>;
pub type EpisodeResult64 = simulator::EpisodeResult<f64>;
pub type EpisodeResult32 = simulator::EpisodeResult<f32>;
