//! Velocity-tracking episodes around the simulator and the three policy
//! structures.

mod trace;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::bounds::{ScalingBounds, StructuredBounds};
use crate::controllers::policy::{foot_targets_from_action, torques_from_action, PolicyKind};
use crate::controllers::runtime::{FootTargetController, TrotController};
use crate::controllers::trajectory::{apply_scaling, ScalingParams, TrajectoryParams};
use crate::controllers::Observation;
use crate::dynamics::{clamp_torques, step_with, Frames, SimState, IDX_Z};
use crate::error::{Error, Result};
use crate::model::{RobotModel, SimConfig, NUM_JOINTS, NUM_LEGS};

pub use trace::{TraceRow, TraceWriter, TRACE_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    pub v_d_range: [f64; 2],
    pub early_stop: bool,
    /// Failure when |pitch| exceeds this (rad).
    pub pitch_limit: f64,
    /// Failure when the trunk drops below this height (m).
    pub height_limit: f64,
    pub initial_height: f64,
    /// Half-width of the uniform joint-angle perturbation at reset (rad).
    pub initial_perturbation: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            v_d_range: [1.0, 5.0],
            early_stop: true,
            pitch_limit: 1.0,
            height_limit: 0.3,
            initial_height: 0.45,
            initial_perturbation: 0.02,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        let [lo, hi] = self.v_d_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(
                "v_d_range must be positive and ordered".into(),
            ));
        }
        if self.initial_perturbation < 0.0 {
            return Err(Error::Config(
                "initial_perturbation must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-step tracking reward `1 - |v - v_d| / v_d`.
pub fn reward(v: f64, v_d: f64) -> Result<f64> {
    if !(v_d > 0.0) {
        return Err(Error::InvalidDesiredVelocity(v_d));
    }
    Ok(1.0 - (v - v_d).abs() / v_d)
}

/// Pitch or height outside the limits, regardless of the early-stop switch.
pub fn is_failure(state: &SimState, config: &EpisodeConfig) -> bool {
    state.pitch().abs() > config.pitch_limit || state.com_height() < config.height_limit
}

pub fn check_early_stop(state: &SimState, config: &EpisodeConfig) -> bool {
    config.early_stop && is_failure(state, config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub com_velocity: f64,
    /// Mean `|tau_j * omega_j|` over the physics substeps, per joint.
    pub joint_power: [f64; NUM_JOINTS],
    /// Mean applied torque over the physics substeps.
    pub torques: [f64; NUM_JOINTS],
    pub contact_flags: [bool; NUM_LEGS],
    /// Pitch or height limit exceeded after this step.
    pub failure: bool,
    /// The integrator produced a non-finite state; the step was discarded.
    pub diverged: bool,
}

impl StepInfo {
    pub fn power(&self) -> f64 {
        self.joint_power.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// Everything needed to build an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSetup {
    pub model: RobotModel,
    pub sim: SimConfig,
    pub episode: EpisodeConfig,
    pub kind: PolicyKind,
    pub structured_bounds: StructuredBounds,
    pub scaling_bounds: ScalingBounds,
    pub nominal: TrajectoryParams,
}

impl EnvSetup {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            model: RobotModel::default(),
            sim: SimConfig::default(),
            episode: EpisodeConfig::default(),
            kind,
            structured_bounds: StructuredBounds::default(),
            scaling_bounds: ScalingBounds::default(),
            nominal: TrajectoryParams::default(),
        }
    }
}

/// One simulated robot with a desired speed and an episode clock.
#[derive(Debug, Clone)]
pub struct Env {
    setup: EnvSetup,
    state: SimState,
    v_d: f64,
    steps: usize,
    trot: Option<TrotController>,
    held_action: Option<Vec<f64>>,
    min_reward: Option<f64>,
}

impl Env {
    pub fn new(setup: EnvSetup) -> Result<Self> {
        setup.sim.validate()?;
        setup.episode.validate()?;
        setup.structured_bounds.validate()?;
        setup.scaling_bounds.validate()?;
        setup.nominal.validate()?;
        let state = SimState::standing(&setup.model, &setup.sim, setup.episode.initial_height);
        let v_d = setup.episode.v_d_range[0];
        Ok(Self {
            setup,
            state,
            v_d,
            steps: 0,
            trot: None,
            held_action: None,
            min_reward: None,
        })
    }

    pub fn setup(&self) -> &EnvSetup {
        &self.setup
    }

    pub fn model(&self) -> &RobotModel {
        &self.setup.model
    }

    pub fn kind(&self) -> PolicyKind {
        self.setup.kind
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn v_d(&self) -> f64 {
        self.v_d
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn observation(&self) -> Observation {
        Observation::from_state(&self.state, self.v_d)
    }

    pub fn trot_controller(&self) -> Option<&TrotController> {
        self.trot.as_ref()
    }

    /// Samples a desired speed and restarts from the perturbed stance.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Observation {
        let [lo, hi] = self.setup.episode.v_d_range;
        let v_d = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        self.reset_with(v_d, rng)
    }

    pub fn reset_with<R: Rng + ?Sized>(&mut self, v_d: f64, rng: &mut R) -> Observation {
        let model = &self.setup.model;
        let ep = &self.setup.episode;
        let mut state = SimState::standing(model, &self.setup.sim, ep.initial_height);
        let eps = ep.initial_perturbation;
        if eps > 0.0 {
            for j in 0..NUM_JOINTS {
                state.q[3 + j] += rng.gen_range(-eps..=eps);
            }
        }
        // rest the feet on the ground at their static deflection
        let frames = Frames::new(model, &state.q);
        let mean_foot = frames.legs.iter().map(|l| l.foot.y).sum::<f64>() / NUM_LEGS as f64;
        let sink = model.weight() / (NUM_LEGS as f64 * model.params.ground_stiffness);
        state.q[IDX_Z] -= mean_foot - self.setup.sim.ground_height + sink;
        state.refresh_contact_flags(model, &self.setup.sim);

        self.state = state;
        self.v_d = v_d;
        self.steps = 0;
        self.trot = None;
        self.held_action = None;
        self.min_reward = None;
        self.observation()
    }

    /// Changes the desired speed mid-episode.
    pub fn set_desired_velocity(&mut self, v_d: f64) -> Result<()> {
        if !(v_d > 0.0) {
            return Err(Error::InvalidDesiredVelocity(v_d));
        }
        self.v_d = v_d;
        Ok(())
    }

    /// Installs new trot scalings, keeping the gait phase if already walking.
    fn hold_scaling(&mut self, action: &[f64]) -> Result<()> {
        if self.held_action.as_deref() == Some(action) {
            return Ok(());
        }
        let scaling = ScalingParams::from_unit(&self.setup.scaling_bounds, action);
        let params = apply_scaling(&self.setup.nominal, &scaling, &self.setup.scaling_bounds)?;
        match &mut self.trot {
            Some(trot) => {
                trot.params = params;
                trot.gains = scaling.gains;
            }
            None => {
                let mut trot =
                    TrotController::new(params, scaling.gains, self.setup.sim.ground_height);
                trot.gait.last_time = Some(self.state.time);
                self.trot = Some(trot);
            }
        }
        self.held_action = Some(action.to_vec());
        Ok(())
    }

    /// Advances one control step with a normalized action in `[-1, 1]`.
    ///
    /// Direct actions are joint torques held over the step. Structured
    /// actions are foot targets and gains tracked at the physics rate.
    /// Highly structured actions are trot scalings, normally held for the
    /// whole episode.
    pub fn step(&mut self, action: &[f64], external_force: [f64; 2]) -> Result<StepResult> {
        let kind = self.setup.kind;
        if action.len() != kind.action_dim() {
            return Err(Error::DimensionMismatch {
                context: "environment action",
                expected: kind.action_dim(),
                got: action.len(),
            });
        }
        if kind == PolicyKind::HighlyStructured {
            self.hold_scaling(action)?;
        }
        let model = &self.setup.model;
        let sim = &self.setup.sim;
        let substeps = sim.substeps as f64;
        let t0 = self.state.time;
        let mut power = [0.0; NUM_JOINTS];
        let mut torque_sum = [0.0; NUM_JOINTS];
        let mut account = |st: &SimState, tau: [f64; NUM_JOINTS]| {
            let tau = clamp_torques(model, &tau);
            let rates = st.joint_rates();
            for j in 0..NUM_JOINTS {
                power[j] += (tau[j] * rates[j]).abs() / substeps;
                torque_sum[j] += tau[j] / substeps;
            }
            tau
        };

        let next = match kind {
            PolicyKind::Direct => {
                let tau = torques_from_action(action, model.params.max_torque);
                step_with(model, sim, &self.state, external_force, |st, _| {
                    account(st, tau)
                })
            }
            PolicyKind::Structured => {
                let (targets, gains) =
                    foot_targets_from_action(action, &self.setup.structured_bounds);
                let ctl = FootTargetController { targets, gains };
                step_with(model, sim, &self.state, external_force, |st, _| {
                    account(st, ctl.torques(model, st))
                })
            }
            PolicyKind::HighlyStructured => {
                let trot = self.trot.as_mut().expect("scalings installed above");
                step_with(model, sim, &self.state, external_force, |st, dt| {
                    account(st, trot.torques(model, st, t0 + dt))
                })
            }
        };
        self.steps += 1;

        let (reward, terminated, diverged) = match next {
            Ok(next) => {
                self.state = next;
                let r = reward(self.state.forward_velocity(), self.v_d)?;
                self.min_reward = Some(self.min_reward.map_or(r, |m| m.min(r)));
                (r, check_early_stop(&self.state, &self.setup.episode), false)
            }
            Err(Error::NonFiniteState { time }) => {
                let r = self.min_reward.unwrap_or(0.0);
                log::warn!("simulation diverged at t = {time:.3} s; episode terminated");
                (r, true, true)
            }
            Err(e) => return Err(e),
        };
        let truncated = !terminated && self.steps >= self.setup.episode.max_steps;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminated,
            truncated,
            info: StepInfo {
                com_velocity: self.state.forward_velocity(),
                joint_power: power,
                torques: torque_sum,
                contact_flags: self.state.contact_flags,
                failure: diverged || is_failure(&self.state, &self.setup.episode),
                diverged,
            },
        })
    }
}
