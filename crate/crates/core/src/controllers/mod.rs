//! Policy structures and the controllers they drive.

pub mod bounds;
pub mod gait;
pub mod impedance;
pub mod observation;
pub mod policy;
pub mod runtime;
pub mod trajectory;

pub use bounds::{GainBounds, Range, ScalingBounds, StructuredBounds};
pub use gait::{gait_modulator, GaitPhase};
pub use impedance::{impedance_torques, ImpedanceGains};
pub use observation::{Observation, OBSERVATION_DIM};
pub use policy::{
    direct_policy, highly_structured_policy, normalized_speed, structured_policy, PolicyKind,
};
pub use runtime::{FootTargetController, TrotController};
pub use trajectory::{apply_scaling, leg_trajectory, LegMode, ScalingParams, TrajectoryParams};
