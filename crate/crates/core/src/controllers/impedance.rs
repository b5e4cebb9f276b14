use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::controllers::bounds::GainBounds;
use crate::kinematics::PolarFootState;
use crate::model::{NUM_JOINTS, NUM_LEGS};

/// Polar impedance gains shared by all legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceGains {
    pub k_r: f64,
    pub b_r: f64,
    pub k_theta: f64,
    pub b_theta: f64,
}

impl ImpedanceGains {
    pub fn from_unit(bounds: &GainBounds, a: &[f64]) -> Self {
        Self {
            k_r: bounds.k_r.from_unit(a[0]),
            b_r: bounds.b_r.from_unit(a[1]),
            k_theta: bounds.k_theta.from_unit(a[2]),
            b_theta: bounds.b_theta.from_unit(a[3]),
        }
    }

    pub fn midpoint(bounds: &GainBounds) -> Self {
        Self::from_unit(bounds, &[0.0; 4])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            k_r: self.k_r * factor,
            b_r: self.b_r * factor,
            k_theta: self.k_theta * factor,
            b_theta: self.b_theta * factor,
        }
    }
}

/// Polar-space force on one leg: radial force and angular moment.
pub fn polar_force(
    gains: &ImpedanceGains,
    desired: &PolarFootState,
    actual: &PolarFootState,
) -> Vector2<f64> {
    Vector2::new(
        gains.k_r * (desired.r - actual.r) + gains.b_r * (desired.rdot - actual.rdot),
        gains.k_theta * (desired.theta - actual.theta)
            + gains.b_theta * (desired.thetadot - actual.thetadot),
    )
}

/// Joint torques of the polar impedance law before saturation, ordered
/// FL hip, FL knee, FR hip, ... BR knee.
pub fn impedance_torques_unclamped(
    gains: &ImpedanceGains,
    desired: &[PolarFootState; NUM_LEGS],
    actual: &[PolarFootState; NUM_LEGS],
    jacobians: &[Matrix2<f64>; NUM_LEGS],
) -> [f64; NUM_JOINTS] {
    let mut tau = [0.0; NUM_JOINTS];
    for leg in 0..NUM_LEGS {
        let f = polar_force(gains, &desired[leg], &actual[leg]);
        let t = jacobians[leg].transpose() * f;
        tau[2 * leg] = t[0];
        tau[2 * leg + 1] = t[1];
    }
    tau
}

/// Polar impedance law with torques clamped to `±max_torque`.
pub fn impedance_torques(
    gains: &ImpedanceGains,
    desired: &[PolarFootState; NUM_LEGS],
    actual: &[PolarFootState; NUM_LEGS],
    jacobians: &[Matrix2<f64>; NUM_LEGS],
    max_torque: f64,
) -> [f64; NUM_JOINTS] {
    impedance_torques_unclamped(gains, desired, actual, jacobians)
        .map(|t| t.clamp(-max_torque, max_torque))
}
