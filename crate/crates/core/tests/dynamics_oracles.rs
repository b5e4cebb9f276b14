use nalgebra::SVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trotlab::dynamics::{
    bias_forces, hip_index, knee_index, mass_matrix, mechanical_energy, step, SimState, IDX_PITCH,
};
use trotlab::model::{RobotModel, RobotParams, SimConfig, NUM_DOF, NUM_JOINTS, NUM_LEGS};

type V = SVector<f64, NUM_DOF>;

fn random_q(rng: &mut impl Rng) -> [f64; NUM_DOF] {
    let mut q = [0.0; NUM_DOF];
    q[0] = rng.gen_range(-1.0..1.0);
    q[1] = rng.gen_range(0.3..1.0);
    q[IDX_PITCH] = rng.gen_range(-1.0..1.0);
    for leg in 0..NUM_LEGS {
        q[hip_index(leg)] = rng.gen_range(-1.3..1.3);
        q[knee_index(leg)] = rng.gen_range(0.2..2.9);
    }
    q
}

fn shifted(q: &[f64; NUM_DOF], i: usize, h: f64) -> [f64; NUM_DOF] {
    let mut out = *q;
    out[i] += h;
    out
}

/// Gravity potential of the configuration (zero velocities, joints in range).
fn potential(model: &RobotModel, q: &[f64; NUM_DOF]) -> f64 {
    let state = SimState {
        q: *q,
        qdot: [0.0; NUM_DOF],
        ..SimState::standing(model, &SimConfig::default(), 0.45)
    };
    mechanical_energy(model, &state)
}

/// `h = dM/dt qd - 1/2 d(qd' M qd)/dq + dV/dq` by central differences.
fn lagrangian_bias(model: &RobotModel, q: &[f64; NUM_DOF], qdot: &[f64; NUM_DOF]) -> V {
    let h = 1e-6;
    let v = V::from_column_slice(qdot);
    let mut mdot = mass_matrix(model, q) * 0.0;
    let mut out = V::zeros();
    for i in 0..NUM_DOF {
        let dm = (mass_matrix(model, &shifted(q, i, h)) - mass_matrix(model, &shifted(q, i, -h)))
            / (2.0 * h);
        mdot += dm * qdot[i];
        let dv = (potential(model, &shifted(q, i, h)) - potential(model, &shifted(q, i, -h)))
            / (2.0 * h);
        out[i] = -0.5 * (v.transpose() * dm * v)[0] + dv;
    }
    out + mdot * v
}

#[test]
fn bias_forces_match_lagrangian_derivatives() {
    let model = RobotModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let q = random_q(&mut rng);
        let qdot: [f64; NUM_DOF] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let analytic = bias_forces(&model, &q, &qdot);
        let oracle = lagrangian_bias(&model, &q, &qdot);
        for i in 0..NUM_DOF {
            let err =
                (analytic[i] - oracle[i]).abs() / analytic[i].abs().max(oracle[i].abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    assert!(worst < 1e-6, "worst relative error {worst:.2e}");
}

#[test]
fn zero_gravity_bias_is_quadratic_in_velocity() {
    let params = RobotParams {
        gravity: 0.0,
        ..RobotParams::default()
    };
    let model = RobotModel::new(params).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let q = random_q(&mut rng);
        let qdot: [f64; NUM_DOF] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let h1 = bias_forces(&model, &q, &qdot);
        let h3 = bias_forces(&model, &q, &qdot.map(|v| 3.0 * v));
        assert!((h3 - 9.0 * h1).abs().max() < 1e-9 * h1.abs().max().max(1.0));
    }
}

#[test]
fn free_fall_keeps_trunk_momentum_without_gravity() {
    let params = RobotParams {
        gravity: 0.0,
        ..RobotParams::default()
    };
    let model = RobotModel::new(params).unwrap();
    let sim = SimConfig {
        ground_height: -100.0,
        ..SimConfig::default()
    };
    // bent knees keep every joint inside its limits, so no limit torque acts
    let mut state = SimState::standing(&model, &SimConfig::default(), 0.45);
    state.q[1] = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for v in state.qdot.iter_mut() {
        *v = rng.gen_range(-0.5..0.5);
    }
    let momentum = |s: &SimState| {
        let m = mass_matrix(&model, &s.q);
        (m * V::from_column_slice(&s.qdot))
            .fixed_rows::<2>(0)
            .into_owned()
    };
    let p0 = momentum(&state);
    for _ in 0..100 {
        state = step(&model, &sim, &state, &[0.0; NUM_JOINTS], [0.0, 0.0]).unwrap();
    }
    // semi-implicit Euler conserves momentum only to first order in the step
    let drift = (momentum(&state) - p0).norm() / p0.norm();
    assert!(drift < 1e-4, "relative momentum drift {drift:.2e}");
    let e = mechanical_energy(&model, &state);
    assert!(e.is_finite());
}
