//! Replay storage and the two trainers.

pub mod buffer;
pub mod config;
pub mod explore;
pub mod one_step;
pub mod td3;

pub use buffer::{EpisodeRecord, ReplayBuffer, Transition};
pub use config::TrainerConfig;
pub use explore::explore_action;
pub use one_step::{OneStepDdpg, OneStepStats, RecordBatch};
pub use td3::{bellman_target, Td3, Td3Stats};
