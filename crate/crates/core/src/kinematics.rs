//! Leg kinematics in the hip-attached body frame.
//!
//! Conventions: `x` points forward, `y` points up. The hip angle is measured
//! from the downward vertical, positive forward (counter-clockwise). The knee
//! coordinate is the interior flexion from the straight leg; a positive
//! flexion rotates the shank clockwise relative to the thigh, so the knee
//! points forward. The polar angle `theta` of the foot is measured the same
//! way as the hip angle: `theta = atan2(x, -y)`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RobotModel;

const MIN_RADIUS: f64 = 1e-6;
const SINGULAR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarFootState {
    pub r: f64,
    pub theta: f64,
    pub rdot: f64,
    pub thetadot: f64,
}

/// Desired foot position and velocity relative to the hip, body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootTarget {
    pub x: f64,
    pub y: f64,
    pub xdot: f64,
    pub ydot: f64,
}

/// Foot position relative to the hip for the two-link leg.
pub fn foot_fk(model: &RobotModel, hip: f64, knee: f64) -> Vector2<f64> {
    let l1 = model.params.thigh_length;
    let l2 = model.params.shank_length;
    let shank = hip - knee;
    Vector2::new(
        l1 * hip.sin() + l2 * shank.sin(),
        -l1 * hip.cos() - l2 * shank.cos(),
    )
}

/// d(x, y)/d(hip, knee).
pub fn cartesian_jacobian(model: &RobotModel, hip: f64, knee: f64) -> Matrix2<f64> {
    let l1 = model.params.thigh_length;
    let l2 = model.params.shank_length;
    let shank = hip - knee;
    let (s1, c1) = hip.sin_cos();
    let (s2, c2) = shank.sin_cos();
    Matrix2::new(l1 * c1 + l2 * c2, -l2 * c2, l1 * s1 + l2 * s2, -l2 * s2)
}

pub fn cart_to_polar(target: &FootTarget) -> Result<PolarFootState> {
    let FootTarget { x, y, xdot, ydot } = *target;
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    if r < MIN_RADIUS {
        return Err(Error::DegenerateRadius { radius: r });
    }
    Ok(PolarFootState {
        r,
        theta: x.atan2(-y),
        rdot: (x * xdot + y * ydot) / r,
        thetadot: (x * ydot - y * xdot) / r2,
    })
}

pub fn polar_to_cart(polar: &PolarFootState) -> FootTarget {
    let (s, c) = polar.theta.sin_cos();
    let PolarFootState {
        r, rdot, thetadot, ..
    } = *polar;
    FootTarget {
        x: r * s,
        y: -r * c,
        xdot: rdot * s + r * c * thetadot,
        ydot: -rdot * c + r * s * thetadot,
    }
}

/// d(r, theta)/d(hip, knee) without the singularity check. Callers that only
/// need the transpose (torque mapping) can use this near a straight leg.
pub fn polar_jacobian_unchecked(model: &RobotModel, hip: f64, knee: f64) -> Matrix2<f64> {
    let p = foot_fk(model, hip, knee);
    let jc = cartesian_jacobian(model, hip, knee);
    let r2 = p.norm_squared().max(MIN_RADIUS * MIN_RADIUS);
    let r = r2.sqrt();
    let dr = Vector2::new(p.x / r, p.y / r);
    let dtheta = Vector2::new(-p.y / r2, p.x / r2);
    let row_r = dr.transpose() * jc;
    let row_t = dtheta.transpose() * jc;
    Matrix2::new(row_r[0], row_r[1], row_t[0], row_t[1])
}

pub fn polar_jacobian(model: &RobotModel, hip: f64, knee: f64) -> Result<Matrix2<f64>> {
    if knee.abs() < SINGULAR_EPS || (knee - std::f64::consts::PI).abs() < SINGULAR_EPS {
        return Err(Error::SingularConfiguration { knee });
    }
    Ok(polar_jacobian_unchecked(model, hip, knee))
}

/// Polar state of the foot from joint angles and rates.
pub fn leg_polar_state(
    model: &RobotModel,
    hip: f64,
    knee: f64,
    hip_rate: f64,
    knee_rate: f64,
) -> PolarFootState {
    let p = foot_fk(model, hip, knee);
    let j = polar_jacobian_unchecked(model, hip, knee);
    let rates = j * Vector2::new(hip_rate, knee_rate);
    PolarFootState {
        r: p.norm(),
        theta: p.x.atan2(-p.y),
        rdot: rates[0],
        thetadot: rates[1],
    }
}
