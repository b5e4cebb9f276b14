use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::bounds::{ScalingBounds, StructuredBounds};
use crate::controllers::policy::PolicyKind;
use crate::controllers::trajectory::TrajectoryParams;
use crate::env::{EnvSetup, EpisodeConfig};
use crate::error::{Error, Result};
use crate::model::{RobotModel, RobotParams, SimConfig};
use crate::rl::TrainerConfig;

/// Periodic noise-free evaluation during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalProtocol {
    /// Environment steps between evaluations.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Evaluate the actor without exploration noise.
    pub noise_free: bool,
    /// Mean evaluation return that counts as having learned the task.
    pub reward_threshold: f64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        Self {
            eval_interval: 5000,
            eval_episodes: 10,
            noise_free: true,
            reward_threshold: 700.0,
        }
    }
}

/// Desired-speed changes and horizontal pushes applied to a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceScript {
    /// `[time s, v_d m/s]`, starting at time 0.
    pub schedule: Vec<[f64; 2]>,
    /// `[onset s, force N]` along the forward axis.
    pub forces: Vec<[f64; 2]>,
    /// How long each force is held (s).
    pub force_duration: f64,
    pub total_time: f64,
    /// Number of initial-perturbation seeds.
    pub seeds: usize,
    /// Tolerance on the speed error, relative to `v_d`, for recovery.
    pub recovery_tolerance: f64,
    /// Recovery is judged this long after each force onset (s).
    pub recovery_time: f64,
    /// Width of the averaging window ending at the recovery time (s).
    pub recovery_window: f64,
}

impl Default for DisturbanceScript {
    fn default() -> Self {
        Self {
            schedule: vec![[0.0, 2.0], [4.0, 4.0], [8.0, 3.0]],
            forces: vec![[12.0, 10.0], [16.0, -10.0]],
            force_duration: 0.5,
            total_time: 20.0,
            seeds: 5,
            recovery_tolerance: 0.2,
            recovery_time: 2.0,
            recovery_window: 0.5,
        }
    }
}

impl DisturbanceScript {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule[0][0] != 0.0 {
            return Err(Error::Config("speed schedule must start at time 0".into()));
        }
        let increasing = |pts: &[[f64; 2]]| pts.windows(2).all(|w| w[1][0] > w[0][0]);
        if !increasing(&self.schedule) || !increasing(&self.forces) {
            return Err(Error::Config(
                "script times must be strictly increasing".into(),
            ));
        }
        if self.schedule.iter().any(|p| !(p[1] > 0.0)) {
            return Err(Error::Config("scheduled speeds must be positive".into()));
        }
        if !(self.total_time > 0.0) || self.force_duration < 0.0 || self.seeds == 0 {
            return Err(Error::Config(
                "total_time, force_duration and seeds must be positive".into(),
            ));
        }
        if !(self.recovery_window > 0.0 && self.recovery_window <= self.recovery_time) {
            return Err(Error::Config(
                "recovery window must lie within the recovery time".into(),
            ));
        }
        Ok(())
    }

    /// Scheduled desired speed at time `t`.
    pub fn speed_at(&self, t: f64) -> f64 {
        self.schedule
            .iter()
            .take_while(|p| p[0] <= t)
            .last()
            .map_or(self.schedule[0][1], |p| p[1])
    }

    /// External forward force at time `t`.
    pub fn force_at(&self, t: f64) -> f64 {
        self.forces
            .iter()
            .filter(|f| t >= f[0] && t < f[0] + self.force_duration)
            .map(|f| f[1])
            .sum()
    }

    /// Same script with every force removed.
    pub fn without_forces(&self) -> Self {
        Self {
            forces: Vec::new(),
            ..self.clone()
        }
    }
}

/// Constant-speed rollout used to inspect joint orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicityConfig {
    pub v_d: f64,
    pub duration: f64,
    /// Samples before this time are discarded as transient (s).
    pub warmup: f64,
    /// A score below this counts as periodic.
    pub threshold: f64,
    /// Candidate periods searched for policies without a clock (s).
    pub search_periods: [f64; 2],
    pub seed: u64,
}

impl Default for PeriodicityConfig {
    fn default() -> Self {
        Self {
            v_d: 2.0,
            duration: 10.0,
            warmup: 2.0,
            threshold: 0.3,
            search_periods: [0.1, 1.5],
            seed: 0,
        }
    }
}

/// Training budget and seeds of the reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptancePlan {
    pub seeds: Vec<u64>,
    pub total_steps: u64,
    /// The highly structured policy must reach the reward threshold by here.
    pub rise_deadline: u64,
}

impl Default for AcceptancePlan {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            total_steps: 150_000,
            rise_deadline: 100_000,
        }
    }
}

/// Everything a run needs, as loaded from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub robot: RobotParams,
    pub sim: SimConfig,
    pub episode: EpisodeConfig,
    pub trainer: TrainerConfig,
    pub eval: EvalProtocol,
    pub structured_bounds: StructuredBounds,
    pub scaling_bounds: ScalingBounds,
    pub nominal: TrajectoryParams,
    pub disturbance: DisturbanceScript,
    pub periodicity: PeriodicityConfig,
    pub acceptance: AcceptancePlan,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            robot: RobotParams::default(),
            sim: SimConfig::default(),
            episode: EpisodeConfig::default(),
            trainer: TrainerConfig::default(),
            eval: EvalProtocol::default(),
            structured_bounds: StructuredBounds::default(),
            scaling_bounds: ScalingBounds::default(),
            nominal: TrajectoryParams::default(),
            disturbance: DisturbanceScript::default(),
            periodicity: PeriodicityConfig::default(),
            acceptance: AcceptancePlan::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        RobotModel::new(self.robot.clone())?;
        self.sim.validate()?;
        self.episode.validate()?;
        self.trainer.validate()?;
        self.structured_bounds.validate()?;
        self.scaling_bounds.validate()?;
        self.nominal.validate()?;
        self.disturbance.validate()?;
        if self.eval.eval_interval == 0 || self.eval.eval_episodes == 0 {
            return Err(Error::Config(
                "eval interval and episode count must be positive".into(),
            ));
        }
        let p = &self.periodicity;
        if !(p.v_d > 0.0 && p.duration > p.warmup && p.warmup >= 0.0) {
            return Err(Error::Config(
                "periodicity rollout needs v_d > 0 and duration > warmup".into(),
            ));
        }
        if !(p.search_periods[0] > 0.0 && p.search_periods[1] >= p.search_periods[0]) {
            return Err(Error::Config(
                "periodicity search range must be positive and ordered".into(),
            ));
        }
        Ok(())
    }

    pub fn env_setup(&self, kind: PolicyKind) -> Result<EnvSetup> {
        Ok(EnvSetup {
            model: RobotModel::new(self.robot.clone())?,
            sim: self.sim.clone(),
            episode: self.episode.clone(),
            kind,
            structured_bounds: self.structured_bounds,
            scaling_bounds: self.scaling_bounds,
            nominal: self.nominal.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ExperimentConfig::from_toml("[trainer]\ntotal_steps = 1000\n").unwrap();
        assert_eq!(cfg.trainer.total_steps, 1000);
        assert_eq!(cfg.eval, EvalProtocol::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("[trainer]\nlearning_rat = 1.0\n").is_err());
    }

    #[test]
    fn script_lookup() {
        let s = DisturbanceScript::default();
        assert_eq!(s.speed_at(0.0), 2.0);
        assert_eq!(s.speed_at(3.99), 2.0);
        assert_eq!(s.speed_at(4.0), 4.0);
        assert_eq!(s.speed_at(19.0), 3.0);
        assert_eq!(s.force_at(11.99), 0.0);
        assert_eq!(s.force_at(12.0), 10.0);
        assert_eq!(s.force_at(12.49), 10.0);
        assert_eq!(s.force_at(12.5), 0.0);
        assert_eq!(s.force_at(16.2), -10.0);
    }

    #[test]
    fn non_increasing_script_rejected() {
        let s = DisturbanceScript {
            schedule: vec![[0.0, 2.0], [4.0, 3.0], [4.0, 1.0]],
            ..DisturbanceScript::default()
        };
        assert!(s.validate().is_err());
    }
}
