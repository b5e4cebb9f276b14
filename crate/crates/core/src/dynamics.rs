//! Planar articulated dynamics of the quadruped.
//!
//! Generalized coordinates: trunk `x`, `z`, pitch, then hip and knee of
//! FL, FR, BL, BR. The equations of motion are `M(q) qdd = tau - h(q, qd)`
//! with `h` collecting velocity-product and gravity terms. Contact is a
//! compliant penalty model at the feet, with extra contact points at the
//! knees and trunk ends so a tumbled robot rests on the ground instead of
//! sinking through it.

use nalgebra::{SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RobotModel, SimConfig, NUM_DOF, NUM_JOINTS, NUM_LEGS};

pub type GenVector = SVector<f64, NUM_DOF>;
pub type MassMatrix = SMatrix<f64, NUM_DOF, NUM_DOF>;
type PointJacobian = SMatrix<f64, 2, NUM_DOF>;

pub const IDX_X: usize = 0;
pub const IDX_Z: usize = 1;
pub const IDX_PITCH: usize = 2;

pub const fn hip_index(leg: usize) -> usize {
    3 + 2 * leg
}

pub const fn knee_index(leg: usize) -> usize {
    4 + 2 * leg
}

/// Knees then front and back trunk ends.
pub const NUM_AUX_CONTACTS: usize = NUM_LEGS + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub q: [f64; NUM_DOF],
    pub qdot: [f64; NUM_DOF],
    pub time: f64,
    /// Ground anchor x for each foot while it is in contact.
    pub foot_anchor: [Option<f64>; NUM_LEGS],
    pub aux_anchor: [Option<f64>; NUM_AUX_CONTACTS],
    pub contact_flags: [bool; NUM_LEGS],
}

impl SimState {
    /// Trunk level at `height`, feet straight below the hips.
    pub fn standing(model: &RobotModel, config: &SimConfig, height: f64) -> Self {
        let r = (height - config.ground_height).clamp(0.05, model.leg_length() - 1e-6);
        let (l1, l2) = (model.params.thigh_length, model.params.shank_length);
        let cos_k = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let knee = cos_k.acos();
        let p = crate::kinematics::foot_fk(model, 0.0, knee);
        let hip = -p.x.atan2(-p.y);

        let mut q = [0.0; NUM_DOF];
        q[IDX_Z] = height;
        for leg in 0..NUM_LEGS {
            q[hip_index(leg)] = hip;
            q[knee_index(leg)] = knee;
        }
        let mut state = Self {
            q,
            qdot: [0.0; NUM_DOF],
            time: 0.0,
            foot_anchor: [None; NUM_LEGS],
            aux_anchor: [None; NUM_AUX_CONTACTS],
            contact_flags: [false; NUM_LEGS],
        };
        state.refresh_contact_flags(model, config);
        state
    }

    pub fn joint_angles(&self) -> [f64; NUM_JOINTS] {
        std::array::from_fn(|j| self.q[3 + j])
    }

    pub fn joint_rates(&self) -> [f64; NUM_JOINTS] {
        std::array::from_fn(|j| self.qdot[3 + j])
    }

    pub fn pitch(&self) -> f64 {
        self.q[IDX_PITCH]
    }

    pub fn com_height(&self) -> f64 {
        self.q[IDX_Z]
    }

    pub fn forward_velocity(&self) -> f64 {
        self.qdot[IDX_X]
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    pub fn refresh_contact_flags(&mut self, model: &RobotModel, config: &SimConfig) {
        let frames = Frames::new(model, &self.q);
        for leg in 0..NUM_LEGS {
            self.contact_flags[leg] = frames.legs[leg].foot.y <= config.ground_height;
        }
    }
}

/// World-frame geometry of one leg.
#[derive(Debug, Clone, Copy)]
pub struct LegFrames {
    pub hip: Vector2<f64>,
    pub knee: Vector2<f64>,
    pub foot: Vector2<f64>,
    pub thigh_com: Vector2<f64>,
    pub shank_com: Vector2<f64>,
}

/// World-frame geometry for a configuration. `y` components are heights.
#[derive(Debug, Clone, Copy)]
pub struct Frames {
    pub base: Vector2<f64>,
    pub legs: [LegFrames; NUM_LEGS],
    pub trunk_ends: [Vector2<f64>; 2],
}

/// Downward unit vector rotated counter-clockwise by `angle`.
fn hanging(angle: f64) -> Vector2<f64> {
    let (s, c) = angle.sin_cos();
    Vector2::new(s, -c)
}

fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

impl Frames {
    pub fn new(model: &RobotModel, q: &[f64; NUM_DOF]) -> Self {
        let base = Vector2::new(q[IDX_X], q[IDX_Z]);
        let pitch = q[IDX_PITCH];
        let (sp, cp) = pitch.sin_cos();
        let axis = Vector2::new(cp, sp);
        let (l1, l2) = (model.params.thigh_length, model.params.shank_length);
        let legs = std::array::from_fn(|leg| {
            let hip = base + axis * model.params.hip_offsets[leg];
            let thigh_angle = pitch + q[hip_index(leg)];
            let shank_angle = thigh_angle - q[knee_index(leg)];
            let d1 = hanging(thigh_angle);
            let d2 = hanging(shank_angle);
            let knee = hip + d1 * l1;
            LegFrames {
                hip,
                knee,
                foot: knee + d2 * l2,
                thigh_com: hip + d1 * (0.5 * l1),
                shank_com: knee + d2 * (0.5 * l2),
            }
        });
        let half = 0.5 * model.params.body_length;
        Self {
            base,
            legs,
            trunk_ends: [base + axis * half, base - axis * half],
        }
    }
}

/// Which rigid body a point is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Link {
    Trunk,
    Thigh(usize),
    Shank(usize),
}

fn point_jacobian(frames: &Frames, link: Link, p: Vector2<f64>) -> PointJacobian {
    let mut j = PointJacobian::zeros();
    j[(0, IDX_X)] = 1.0;
    j[(1, IDX_Z)] = 1.0;
    let c = perp(p - frames.base);
    j[(0, IDX_PITCH)] = c.x;
    j[(1, IDX_PITCH)] = c.y;
    let leg = match link {
        Link::Trunk => return j,
        Link::Thigh(leg) | Link::Shank(leg) => leg,
    };
    let lf = &frames.legs[leg];
    let c = perp(p - lf.hip);
    j[(0, hip_index(leg))] = c.x;
    j[(1, hip_index(leg))] = c.y;
    if let Link::Shank(_) = link {
        let c = perp(p - lf.knee);
        j[(0, knee_index(leg))] = -c.x;
        j[(1, knee_index(leg))] = -c.y;
    }
    j
}

fn angular_jacobian(link: Link) -> GenVector {
    let mut j = GenVector::zeros();
    j[IDX_PITCH] = 1.0;
    match link {
        Link::Trunk => {}
        Link::Thigh(leg) => j[hip_index(leg)] = 1.0,
        Link::Shank(leg) => {
            j[hip_index(leg)] = 1.0;
            j[knee_index(leg)] = -1.0;
        }
    }
    j
}

struct Body {
    link: Link,
    com: Vector2<f64>,
    mass: f64,
    inertia: f64,
}

fn bodies<'a>(model: &'a RobotModel, frames: &'a Frames) -> impl Iterator<Item = Body> + 'a {
    let trunk = Body {
        link: Link::Trunk,
        com: frames.base,
        mass: model.body_mass,
        inertia: model.body_inertia,
    };
    let legs = (0..NUM_LEGS).flat_map(move |leg| {
        let lf = frames.legs[leg];
        [
            Body {
                link: Link::Thigh(leg),
                com: lf.thigh_com,
                mass: model.thigh_mass,
                inertia: model.thigh_inertia,
            },
            Body {
                link: Link::Shank(leg),
                com: lf.shank_com,
                mass: model.shank_mass,
                inertia: model.shank_inertia,
            },
        ]
    });
    std::iter::once(trunk).chain(legs)
}

fn mass_matrix_from_frames(model: &RobotModel, frames: &Frames) -> MassMatrix {
    let mut m = MassMatrix::zeros();
    for body in bodies(model, frames) {
        let jv = point_jacobian(frames, body.link, body.com);
        let jw = angular_jacobian(body.link);
        m += body.mass * jv.transpose() * jv + body.inertia * jw * jw.transpose();
    }
    m
}

/// Joint-space inertia `M(q)`, accumulated body by body.
pub fn mass_matrix(model: &RobotModel, q: &[f64; NUM_DOF]) -> MassMatrix {
    mass_matrix_from_frames(model, &Frames::new(model, q))
}

fn bias_from_frames(model: &RobotModel, frames: &Frames, qdot: &[f64; NUM_DOF]) -> GenVector {
    let g = Vector2::new(0.0, model.params.gravity);
    let pitch_rate = qdot[IDX_PITCH];
    let mut h = GenVector::zeros();
    // trunk COM is the base point: no velocity-product acceleration
    h[IDX_Z] += model.body_mass * model.params.gravity;

    for leg in 0..NUM_LEGS {
        let lf = &frames.legs[leg];
        let w1 = pitch_rate + qdot[hip_index(leg)];
        let w2 = w1 - qdot[knee_index(leg)];
        // velocity-product (centripetal) accelerations along the chain
        let hip = -(pitch_rate * pitch_rate) * (lf.hip - frames.base);
        let knee = hip - (w1 * w1) * (lf.knee - lf.hip);
        let thigh_com = hip - (w1 * w1) * (lf.thigh_com - lf.hip);
        let shank_com = knee - (w2 * w2) * (lf.shank_com - lf.knee);
        let jt = point_jacobian(frames, Link::Thigh(leg), lf.thigh_com);
        h += model.thigh_mass * jt.transpose() * (thigh_com + g);
        let js = point_jacobian(frames, Link::Shank(leg), lf.shank_com);
        h += model.shank_mass * js.transpose() * (shank_com + g);
    }
    h
}

/// Velocity-product and gravity generalized forces `h(q, qd)`.
pub fn bias_forces(model: &RobotModel, q: &[f64; NUM_DOF], qdot: &[f64; NUM_DOF]) -> GenVector {
    bias_from_frames(model, &Frames::new(model, q), qdot)
}

/// Ground reaction at one point from the penalty law. Returns the force
/// (tangential, normal) and the updated anchor.
pub fn penalty_contact(
    model: &RobotModel,
    ground_height: f64,
    position: Vector2<f64>,
    velocity: Vector2<f64>,
    anchor: Option<f64>,
) -> (Vector2<f64>, Option<f64>) {
    let p = &model.params;
    let depth = ground_height - position.y;
    if depth <= 0.0 {
        return (Vector2::zeros(), None);
    }
    let normal = (p.ground_stiffness * depth + p.ground_damping * (-velocity.y).max(0.0)).max(0.0);
    let anchor_x = anchor.unwrap_or(position.x);
    let demand = p.ground_stiffness * (anchor_x - position.x) - p.ground_damping * velocity.x;
    let limit = p.friction_coeff * normal;
    if demand.abs() <= limit {
        (Vector2::new(demand, normal), Some(anchor_x))
    } else {
        let tangential = limit.copysign(demand);
        let slipped = position.x + tangential / p.ground_stiffness;
        (Vector2::new(tangential, normal), Some(slipped))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactForces {
    pub feet: [Vector2<f64>; NUM_LEGS],
    pub foot_anchor: [Option<f64>; NUM_LEGS],
}

/// Penalty forces on the four feet for the current state.
pub fn contact_forces(model: &RobotModel, config: &SimConfig, state: &SimState) -> ContactForces {
    let frames = Frames::new(model, &state.q);
    let qdot = GenVector::from_column_slice(&state.qdot);
    let mut out = ContactForces {
        feet: [Vector2::zeros(); NUM_LEGS],
        foot_anchor: [None; NUM_LEGS],
    };
    for leg in 0..NUM_LEGS {
        let foot = frames.legs[leg].foot;
        let vel = point_jacobian(&frames, Link::Shank(leg), foot) * qdot;
        let (f, a) = penalty_contact(
            model,
            config.ground_height,
            foot,
            vel,
            state.foot_anchor[leg],
        );
        out.feet[leg] = f;
        out.foot_anchor[leg] = a;
    }
    out
}

fn joint_limit_torque(model: &RobotModel, angle: f64, rate: f64, range: [f64; 2]) -> f64 {
    let p = &model.params;
    if angle < range[0] {
        p.limit_stiffness * (range[0] - angle) - p.limit_damping * rate
    } else if angle > range[1] {
        -p.limit_stiffness * (angle - range[1]) - p.limit_damping * rate
    } else {
        0.0
    }
}

fn limit_potential(model: &RobotModel, angle: f64, range: [f64; 2]) -> f64 {
    let excess = if angle < range[0] {
        range[0] - angle
    } else if angle > range[1] {
        angle - range[1]
    } else {
        0.0
    };
    0.5 * model.params.limit_stiffness * excess * excess
}

pub fn clamp_torques(model: &RobotModel, torques: &[f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
    let max = model.params.max_torque;
    torques.map(|t| if t.is_nan() { 0.0 } else { t.clamp(-max, max) })
}

/// Kinetic plus gravitational plus joint-limit spring energy.
pub fn mechanical_energy(model: &RobotModel, state: &SimState) -> f64 {
    let frames = Frames::new(model, &state.q);
    let m = mass_matrix_from_frames(model, &frames);
    let qd = GenVector::from_column_slice(&state.qdot);
    let kinetic = 0.5 * (qd.transpose() * m * qd)[0];
    let g = model.params.gravity;
    let potential: f64 = bodies(model, &frames).map(|b| b.mass * g * b.com.y).sum();
    let limits: f64 = (0..NUM_LEGS)
        .map(|leg| {
            limit_potential(model, state.q[hip_index(leg)], model.hip_range)
                + limit_potential(model, state.q[knee_index(leg)], model.knee_range)
        })
        .sum();
    kinetic + potential + limits
}

/// Integrates one physics substep of length `dt` with semi-implicit Euler.
fn substep(
    model: &RobotModel,
    config: &SimConfig,
    state: &mut SimState,
    joint_torques: &[f64; NUM_JOINTS],
    external_force: Vector2<f64>,
    dt: f64,
) {
    let frames = Frames::new(model, &state.q);
    let qdot = GenVector::from_column_slice(&state.qdot);
    let mass = mass_matrix_from_frames(model, &frames);
    let bias = bias_from_frames(model, &frames, &state.qdot);

    let mut tau = GenVector::zeros();
    let clamped = clamp_torques(model, joint_torques);
    for leg in 0..NUM_LEGS {
        let (hi, ki) = (hip_index(leg), knee_index(leg));
        tau[hi] = clamped[2 * leg]
            + joint_limit_torque(model, state.q[hi], state.qdot[hi], model.hip_range);
        tau[ki] = clamped[2 * leg + 1]
            + joint_limit_torque(model, state.q[ki], state.qdot[ki], model.knee_range);
    }
    tau[IDX_X] += external_force.x;
    tau[IDX_Z] += external_force.y;

    let mut apply = |link: Link, point: Vector2<f64>, anchor: &mut Option<f64>| {
        let j = point_jacobian(&frames, link, point);
        let vel = j * qdot;
        let (f, a) = penalty_contact(model, config.ground_height, point, vel, *anchor);
        *anchor = a;
        if a.is_some() {
            tau += j.transpose() * f;
        }
    };
    for leg in 0..NUM_LEGS {
        apply(
            Link::Shank(leg),
            frames.legs[leg].foot,
            &mut state.foot_anchor[leg],
        );
        apply(
            Link::Thigh(leg),
            frames.legs[leg].knee,
            &mut state.aux_anchor[leg],
        );
    }
    for (end, point) in frames.trunk_ends.iter().enumerate() {
        apply(Link::Trunk, *point, &mut state.aux_anchor[NUM_LEGS + end]);
    }

    let rhs = tau - bias;
    let qddot = match mass.cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => GenVector::from_element(f64::NAN),
    };
    for i in 0..NUM_DOF {
        state.qdot[i] += dt * qddot[i];
        state.q[i] += dt * state.qdot[i];
    }
}

/// Advances one control step with torques held constant.
pub fn step(
    model: &RobotModel,
    config: &SimConfig,
    state: &SimState,
    joint_torques: &[f64; NUM_JOINTS],
    external_force: [f64; 2],
) -> Result<SimState> {
    step_with(model, config, state, external_force, |_, _| *joint_torques)
}

/// Advances one control step, asking `torques` for joint torques at every
/// physics substep. The closure sees the state at the start of the substep
/// and the elapsed time within the control step.
pub fn step_with<F>(
    model: &RobotModel,
    config: &SimConfig,
    state: &SimState,
    external_force: [f64; 2],
    mut torques: F,
) -> Result<SimState>
where
    F: FnMut(&SimState, f64) -> [f64; NUM_JOINTS],
{
    let dt = config.physics_dt();
    let force = Vector2::new(external_force[0], external_force[1]);
    let mut next = state.clone();
    for k in 0..config.substeps {
        let tau = torques(&next, k as f64 * dt);
        substep(model, config, &mut next, &tau, force, dt);
    }
    next.time = state.time + config.control_dt;
    if !next.is_finite() {
        return Err(Error::NonFiniteState { time: next.time });
    }
    next.refresh_contact_flags(model, config);
    Ok(next)
}
