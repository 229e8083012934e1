//! Actor-critic networks and the DDPG learner shared by the grafting agent
//! and the threshold tutor.

pub mod adam;
pub mod checkpoint;
pub mod ddpg;
mod linalg;
pub mod mlp;

pub use adam::Adam;
pub use ddpg::{DdpgAgent, DdpgConfig, NoiseConfig};
pub use mlp::{Activation, Mlp, Trace};
