//! Dense networks, Adam and target-network averaging.

pub mod adam;
pub mod checkpoint;
pub mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{Activation, Batch, ForwardCache, LayerShape, Mlp};
