//! Robot and simulator parameters.
//!
//! Defaults reproduce the planar quadruped: a 0.6 m cylindrical trunk with
//! two hips at each end, 0.283 m thigh and shank segments, 14 kg in total,
//! with segment masses split in proportion to cylinder volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LEGS: usize = 4;
pub const NUM_JOINTS: usize = 8;
pub const NUM_DOF: usize = 11;

/// Leg order used everywhere: front left, front right, back left, back right.
pub const LEG_NAMES: [&str; NUM_LEGS] = ["FL", "FR", "BL", "BR"];

/// User-facing robot description, as read from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    pub body_length: f64,
    pub body_radius: f64,
    pub thigh_length: f64,
    pub thigh_radius: f64,
    pub shank_length: f64,
    pub shank_radius: f64,
    pub total_mass: f64,
    /// Hip joint range in degrees.
    pub hip_range_deg: [f64; 2],
    /// Knee flexion range in degrees.
    pub knee_range_deg: [f64; 2],
    pub max_torque: f64,
    pub gravity: f64,
    pub ground_stiffness: f64,
    pub ground_damping: f64,
    pub friction_coeff: f64,
    /// Soft joint-limit spring (N·m/rad) and damper (N·m·s/rad) beyond the range.
    pub limit_stiffness: f64,
    pub limit_damping: f64,
    /// Forward offset of each hip from the trunk center, FL/FR/BL/BR.
    pub hip_offsets: [f64; NUM_LEGS],
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            body_length: 0.6,
            body_radius: 0.05,
            thigh_length: 0.283,
            thigh_radius: 0.03,
            shank_length: 0.283,
            shank_radius: 0.03,
            total_mass: 14.0,
            hip_range_deg: [-80.0, 80.0],
            knee_range_deg: [10.0, 170.0],
            max_torque: 100.0,
            gravity: 9.81,
            ground_stiffness: 1.0e5,
            ground_damping: 1.0e3,
            friction_coeff: 0.8,
            limit_stiffness: 1.0e3,
            limit_damping: 10.0,
            hip_offsets: [0.3, 0.3, -0.3, -0.3],
        }
    }
}

/// Validated robot model with derived masses and inertias.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub params: RobotParams,
    pub body_mass: f64,
    pub thigh_mass: f64,
    pub shank_mass: f64,
    /// Pitch-axis inertia about each segment's own center of mass.
    pub body_inertia: f64,
    pub thigh_inertia: f64,
    pub shank_inertia: f64,
    pub hip_range: [f64; 2],
    pub knee_range: [f64; 2],
}

fn cylinder_volume(length: f64, radius: f64) -> f64 {
    std::f64::consts::PI * radius * radius * length
}

/// Solid cylinder inertia about a transverse axis through its center.
fn cylinder_transverse_inertia(mass: f64, length: f64, radius: f64) -> f64 {
    mass * (3.0 * radius * radius + length * length) / 12.0
}

impl RobotModel {
    pub fn new(params: RobotParams) -> Result<Self> {
        let lengths = [
            ("body_length", params.body_length),
            ("body_radius", params.body_radius),
            ("thigh_length", params.thigh_length),
            ("thigh_radius", params.thigh_radius),
            ("shank_length", params.shank_length),
            ("shank_radius", params.shank_radius),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(params.total_mass > 0.0) {
            return Err(Error::Config("total_mass must be positive".into()));
        }
        if params.max_torque < 0.0 || params.friction_coeff < 0.0 {
            return Err(Error::Config(
                "max_torque and friction_coeff must be non-negative".into(),
            ));
        }
        if params.hip_range_deg[0] >= params.hip_range_deg[1]
            || params.knee_range_deg[0] >= params.knee_range_deg[1]
        {
            return Err(Error::Config("joint ranges must be increasing".into()));
        }

        let v_body = cylinder_volume(params.body_length, params.body_radius);
        let v_thigh = cylinder_volume(params.thigh_length, params.thigh_radius);
        let v_shank = cylinder_volume(params.shank_length, params.shank_radius);
        let total_volume = v_body + NUM_LEGS as f64 * (v_thigh + v_shank);
        let density = params.total_mass / total_volume;

        let body_mass = density * v_body;
        let thigh_mass = density * v_thigh;
        let shank_mass = density * v_shank;

        Ok(Self {
            body_inertia: cylinder_transverse_inertia(
                body_mass,
                params.body_length,
                params.body_radius,
            ),
            thigh_inertia: cylinder_transverse_inertia(
                thigh_mass,
                params.thigh_length,
                params.thigh_radius,
            ),
            shank_inertia: cylinder_transverse_inertia(
                shank_mass,
                params.shank_length,
                params.shank_radius,
            ),
            body_mass,
            thigh_mass,
            shank_mass,
            hip_range: params.hip_range_deg.map(f64::to_radians),
            knee_range: params.knee_range_deg.map(f64::to_radians),
            params,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.body_mass + NUM_LEGS as f64 * (self.thigh_mass + self.shank_mass)
    }

    pub fn segment_masses(&self) -> [f64; 9] {
        let mut m = [0.0; 9];
        m[0] = self.body_mass;
        for leg in 0..NUM_LEGS {
            m[1 + 2 * leg] = self.thigh_mass;
            m[2 + 2 * leg] = self.shank_mass;
        }
        m
    }

    pub fn leg_length(&self) -> f64 {
        self.params.thigh_length + self.params.shank_length
    }

    pub fn weight(&self) -> f64 {
        self.total_mass() * self.params.gravity
    }
}

impl Default for RobotModel {
    fn default() -> Self {
        Self::new(RobotParams::default()).expect("default robot parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Control period in seconds.
    pub control_dt: f64,
    /// Physics substeps per control step.
    pub substeps: usize,
    pub ground_height: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            control_dt: 0.01,
            substeps: 10,
            ground_height: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.control_dt > 0.0) {
            return Err(Error::Config("control_dt must be positive".into()));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn physics_dt(&self) -> f64 {
        self.control_dt / self.substeps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_masses_sum_to_total() {
        let m = RobotModel::default();
        assert!((m.total_mass() - 14.0).abs() < 1e-9);
        let sum: f64 = m.segment_masses().iter().sum();
        assert!((sum - 14.0).abs() < 1e-9);
        // thigh and shank share geometry
        assert_eq!(m.thigh_mass, m.shank_mass);
    }

    #[test]
    fn default_limits() {
        let m = RobotModel::default();
        assert!((m.hip_range[0] + 80f64.to_radians()).abs() < 1e-15);
        assert!((m.hip_range[1] - 80f64.to_radians()).abs() < 1e-15);
        assert!((m.knee_range[0] - 10f64.to_radians()).abs() < 1e-15);
        assert!((m.knee_range[1] - 170f64.to_radians()).abs() < 1e-15);
        assert_eq!(m.params.max_torque, 100.0);
    }

    #[test]
    fn rejects_nonpositive_length() {
        let p = RobotParams {
            thigh_length: 0.0,
            ..RobotParams::default()
        };
        assert!(RobotModel::new(p).is_err());
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = SimConfig {
            substeps: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
