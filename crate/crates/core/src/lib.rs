//! Planar quadruped locomotion with policies of increasing structure.

pub mod controllers;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod experiment;
pub mod kinematics;
pub mod model;
pub mod nn;
pub mod rl;

pub use error::{Error, Result};
