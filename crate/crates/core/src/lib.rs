//! Experience grafting for off-policy reinforcement learning.
//!
//! A DDPG agent's own trajectories are cut into segments and stored in a
//! grid-binned library. Later trajectories are joined ("grafted") onto stored
//! tails whose start state lies within a distance threshold of the junction,
//! and the resulting higher-return synthetic trajectories are added to the
//! replay buffer. In AutoEG mode a second DDPG agent picks the threshold each
//! episode.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// `!(x >= lo)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoeg;
pub mod distance;
pub mod envs;
pub mod error;
pub mod experience;
pub mod fixtures;
pub mod grafting;
pub mod harness;
pub mod library;
pub mod neural;
pub mod scalar;

pub use autoeg::{EpisodeRecord, Mode, RunConfig, RunFailure};
pub use envs::{make_env, EnvKind, EnvParams, Environment};
pub use error::{Error, Result};
pub use experience::Provenance;
pub use grafting::{GraftOutput, GraftStats};
pub use harness::{ExperimentConfig, ModeName};
pub use neural::{Activation, DdpgConfig, NoiseConfig};
pub use scalar::Scalar;

pub type Distribution = distance::Distribution<f64>;
pub type Transition = experience::Transition<f64>;
pub type Segment = experience::Segment<f64>;
pub type Trajectory = experience::Trajectory<f64>;
pub type ReplayBuffer = experience::ReplayBuffer<f64>;
pub type SegmentLibrary = library::SegmentLibrary<f64>;
pub type GraftConfig = grafting::GraftConfig<f64>;
pub type SyntheticTrajectory = grafting::SyntheticTrajectory<f64>;
pub type Mlp = neural::Mlp<f64>;
pub type DdpgAgent = neural::DdpgAgent<f64>;
pub type Runner = autoeg::Runner<f64>;
pub type RunLog = autoeg::RunLog<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type Transition = crate::experience::Transition<f32>;
    pub type ReplayBuffer = crate::experience::ReplayBuffer<f32>;
    pub type SegmentLibrary = crate::library::SegmentLibrary<f32>;
    pub type Mlp = crate::neural::Mlp<f32>;
    pub type DdpgAgent = crate::neural::DdpgAgent<f32>;
    pub type Runner = crate::autoeg::Runner<f32>;
}
