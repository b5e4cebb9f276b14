//! Low-level controllers evaluated at the physics rate.

use nalgebra::Matrix2;

use crate::controllers::gait::{gait_modulator, GaitPhase, FL};
use crate::controllers::impedance::{impedance_torques, ImpedanceGains};
use crate::controllers::trajectory::{leg_trajectory, LegMode, TrajectoryParams};
use crate::dynamics::{hip_index, knee_index, Frames, SimState};
use crate::kinematics::{
    cart_to_polar, leg_polar_state, polar_jacobian_unchecked, FootTarget, PolarFootState,
};
use crate::model::{RobotModel, NUM_JOINTS, NUM_LEGS};

/// Actual polar foot states and polar Jacobians of all legs.
pub fn leg_polar_states(
    model: &RobotModel,
    state: &SimState,
) -> ([PolarFootState; NUM_LEGS], [Matrix2<f64>; NUM_LEGS]) {
    let polar = std::array::from_fn(|leg| {
        let (h, k) = (hip_index(leg), knee_index(leg));
        leg_polar_state(model, state.q[h], state.q[k], state.qdot[h], state.qdot[k])
    });
    let jac = std::array::from_fn(|leg| {
        polar_jacobian_unchecked(model, state.q[hip_index(leg)], state.q[knee_index(leg)])
    });
    (polar, jac)
}

/// Impedance torques tracking Cartesian foot targets. A target at the hip
/// itself has no polar representation; that leg then holds its current pose.
pub fn track_foot_targets(
    model: &RobotModel,
    state: &SimState,
    targets: &[FootTarget; NUM_LEGS],
    gains: &ImpedanceGains,
) -> [f64; NUM_JOINTS] {
    let (actual, jac) = leg_polar_states(model, state);
    let desired = std::array::from_fn(|leg| cart_to_polar(&targets[leg]).unwrap_or(actual[leg]));
    impedance_torques(gains, &desired, &actual, &jac, model.params.max_torque)
}

/// Foot targets and gains held over a control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootTargetController {
    pub targets: [FootTarget; NUM_LEGS],
    pub gains: ImpedanceGains,
}

impl FootTargetController {
    pub fn torques(&self, model: &RobotModel, state: &SimState) -> [f64; NUM_JOINTS] {
        track_foot_targets(model, state, &self.targets, &self.gains)
    }
}

/// Trot controller: gait modulator, trajectory generator and impedance law.
#[derive(Debug, Clone, PartialEq)]
pub struct TrotController {
    pub params: TrajectoryParams,
    pub gains: ImpedanceGains,
    pub gait: GaitPhase,
    fl_contact: bool,
    ground_height: f64,
}

impl TrotController {
    pub fn new(params: TrajectoryParams, gains: ImpedanceGains, ground_height: f64) -> Self {
        Self {
            params,
            gains,
            gait: GaitPhase::trot(0.0),
            fl_contact: true,
            ground_height,
        }
    }

    pub fn targets(&self) -> [FootTarget; NUM_LEGS] {
        std::array::from_fn(|leg| {
            let (mode, u) = self.gait.leg_mode(leg, &self.params);
            leg_trajectory(&self.params, u, mode)
        })
    }

    /// Advances the gait to `t` and returns the joint torques.
    pub fn torques(&mut self, model: &RobotModel, state: &SimState, t: f64) -> [f64; NUM_JOINTS] {
        let frames = Frames::new(model, &state.q);
        let contact = frames.legs[FL].foot.y <= self.ground_height;
        // a rising edge only counts as touchdown late in the front-left swing
        let (mode, u) = self.gait.leg_mode(FL, &self.params);
        let event = contact && !self.fl_contact && mode == LegMode::Swing && u >= 0.5;
        self.fl_contact = contact;
        self.gait = gait_modulator(&self.gait, t, &self.params, event);
        track_foot_targets(model, state, &self.targets(), &self.gains)
    }
}
