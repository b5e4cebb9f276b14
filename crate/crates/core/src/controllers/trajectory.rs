//! Foot trajectory generator of the trot controller.
//!
//! Stance is a sinusoid sweeping the foot backwards from `P0 + (l_span, 0)`
//! to `P0 - (l_span, 0)` and dipping by `delta` at mid-stance. Swing is a
//! degree-11 Bézier curve over twelve control points that leaves the rear
//! stance endpoint and lands on the front one.

use serde::{Deserialize, Serialize};

use crate::controllers::bounds::ScalingBounds;
use crate::controllers::impedance::ImpedanceGains;
use crate::error::Result;
use crate::kinematics::FootTarget;

pub const NUM_CONTROL_POINTS: usize = 12;
/// `[k_T, k_C x 12, k_delta, k_r, b_r, k_theta, b_theta]`
pub const SCALING_DIM: usize = 1 + NUM_CONTROL_POINTS + 1 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegMode {
    Stance,
    Swing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryParams {
    pub t_stance: f64,
    pub t_swing: f64,
    /// Swing control points, hip frame (x forward, y up).
    pub control_points: [[f64; 2]; NUM_CONTROL_POINTS],
    pub l_span: f64,
    pub delta: f64,
    pub p0: [f64; 2],
}

/// Horizontal offsets of the swing control points from `P0`, in units of
/// `l_span`, and whether each point sits at the apex height.
const ARC_X: [f64; NUM_CONTROL_POINTS] = [
    -1.0, -1.3, -1.5, -1.5, -1.5, 0.0, 0.0, 0.0, 1.5, 1.5, 1.3, 1.0,
];
const ARC_RAISED: [bool; NUM_CONTROL_POINTS] = [
    false, false, true, true, true, true, true, true, true, true, false, false,
];

impl TrajectoryParams {
    /// Swing arc that clears `apex` metres above the stance line.
    pub fn with_arc(
        t_stance: f64,
        t_swing: f64,
        p0: [f64; 2],
        l_span: f64,
        delta: f64,
        apex: f64,
    ) -> Self {
        // the curve peaks at u = 1/2 where the raised points carry this weight
        let raised_weight: f64 = (0..NUM_CONTROL_POINTS)
            .filter(|&k| ARC_RAISED[k])
            .map(|k| bernstein(NUM_CONTROL_POINTS - 1, k, 0.5))
            .sum();
        let lift = apex / raised_weight;
        let control_points = std::array::from_fn(|k| {
            [
                p0[0] + ARC_X[k] * l_span,
                p0[1] + if ARC_RAISED[k] { lift } else { 0.0 },
            ]
        });
        Self {
            t_stance,
            t_swing,
            control_points,
            l_span,
            delta,
            p0,
        }
    }

    pub fn cycle_period(&self) -> f64 {
        self.t_stance + self.t_swing
    }

    pub fn duty_factor(&self) -> f64 {
        self.t_stance / self.cycle_period()
    }

    pub fn stance_entry(&self) -> [f64; 2] {
        [self.p0[0] + self.l_span, self.p0[1]]
    }

    pub fn stance_exit(&self) -> [f64; 2] {
        [self.p0[0] - self.l_span, self.p0[1]]
    }

    /// Pins the first and last control points to the stance endpoints.
    pub fn pin_endpoints(&mut self) {
        self.control_points[0] = self.stance_exit();
        self.control_points[NUM_CONTROL_POINTS - 1] = self.stance_entry();
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if !(self.t_stance > 0.0 && self.t_swing > 0.0) {
            return Err(Error::Config(
                "stance and swing periods must be positive".into(),
            ));
        }
        if !(self.delta >= 0.0 && self.l_span >= 0.0) {
            return Err(Error::Config(
                "delta and l_span must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self::with_arc(0.25, 0.25, [0.0, -0.45], 0.10, 0.02, 0.10)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn bernstein(n: usize, k: usize, u: f64) -> f64 {
    binomial(n, k) * u.powi(k as i32) * (1.0 - u).powi((n - k) as i32)
}

/// Bézier point and derivative with respect to the curve parameter.
pub fn bezier(points: &[[f64; 2]], u: f64) -> ([f64; 2], [f64; 2]) {
    let n = points.len() - 1;
    let mut p = [0.0; 2];
    for (k, c) in points.iter().enumerate() {
        let b = bernstein(n, k, u);
        p[0] += b * c[0];
        p[1] += b * c[1];
    }
    let mut d = [0.0; 2];
    for k in 0..n {
        let b = n as f64 * bernstein(n - 1, k, u);
        d[0] += b * (points[k + 1][0] - points[k][0]);
        d[1] += b * (points[k + 1][1] - points[k][1]);
    }
    (p, d)
}

/// Desired foot state at local progress `u` in `[0, 1]` of the given mode.
pub fn leg_trajectory(params: &TrajectoryParams, u: f64, mode: LegMode) -> FootTarget {
    let u = u.clamp(0.0, 1.0);
    match mode {
        LegMode::Stance => {
            let pi = std::f64::consts::PI;
            let (s, c) = (pi * u).sin_cos();
            FootTarget {
                x: params.p0[0] + params.l_span * (1.0 - 2.0 * u),
                y: params.p0[1] - params.delta * s,
                xdot: -2.0 * params.l_span / params.t_stance,
                ydot: -params.delta * pi * c / params.t_stance,
            }
        }
        LegMode::Swing => {
            let (p, d) = bezier(&params.control_points, u);
            FootTarget {
                x: p[0],
                y: p[1],
                xdot: d[0] / params.t_swing,
                ydot: d[1] / params.t_swing,
            }
        }
    }
}

/// Learned scalings of the nominal trajectory plus impedance gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub k_t: f64,
    pub k_c: [f64; NUM_CONTROL_POINTS],
    pub k_delta: f64,
    pub gains: ImpedanceGains,
}

impl ScalingParams {
    pub fn identity(gains: ImpedanceGains) -> Self {
        Self {
            k_t: 1.0,
            k_c: [1.0; NUM_CONTROL_POINTS],
            k_delta: 1.0,
            gains,
        }
    }

    /// Maps a `[-1, 1]^18` action into the scaling bounds.
    pub fn from_unit(bounds: &ScalingBounds, a: &[f64]) -> Self {
        assert_eq!(a.len(), SCALING_DIM, "scaling action length");
        Self {
            k_t: bounds.k_t.from_unit(a[0]),
            k_c: std::array::from_fn(|j| bounds.k_c.from_unit(a[1 + j])),
            k_delta: bounds.k_delta.from_unit(a[13]),
            gains: ImpedanceGains::from_unit(&bounds.gains, &a[14..18]),
        }
    }

    pub fn to_unit(&self, bounds: &ScalingBounds) -> [f64; SCALING_DIM] {
        let mut a = [0.0; SCALING_DIM];
        a[0] = bounds.k_t.to_unit(self.k_t);
        for j in 0..NUM_CONTROL_POINTS {
            a[1 + j] = bounds.k_c.to_unit(self.k_c[j]);
        }
        a[13] = bounds.k_delta.to_unit(self.k_delta);
        a[14] = bounds.gains.k_r.to_unit(self.gains.k_r);
        a[15] = bounds.gains.b_r.to_unit(self.gains.b_r);
        a[16] = bounds.gains.k_theta.to_unit(self.gains.k_theta);
        a[17] = bounds.gains.b_theta.to_unit(self.gains.b_theta);
        a
    }

    pub fn check(&self, bounds: &ScalingBounds) -> Result<()> {
        bounds.k_t.check("k_T", self.k_t)?;
        for (j, &k) in self.k_c.iter().enumerate() {
            bounds.k_c.check(&format!("k_C[{j}]"), k)?;
        }
        bounds.k_delta.check("k_delta", self.k_delta)?;
        bounds.gains.k_r.check("k_r", self.gains.k_r)?;
        bounds.gains.b_r.check("b_r", self.gains.b_r)?;
        bounds.gains.k_theta.check("k_theta", self.gains.k_theta)?;
        bounds.gains.b_theta.check("b_theta", self.gains.b_theta)
    }
}

/// Scales the nominal trajectory. Periods scale with `k_T`, each control
/// point's offset from `P0` with its `k_C`, the stance dip with `k_delta`;
/// the swing endpoints stay pinned to the stance endpoints.
pub fn apply_scaling(
    nominal: &TrajectoryParams,
    scaling: &ScalingParams,
    bounds: &ScalingBounds,
) -> Result<TrajectoryParams> {
    scaling.check(bounds)?;
    let p0 = nominal.p0;
    let mut out = TrajectoryParams {
        t_stance: scaling.k_t * nominal.t_stance,
        t_swing: scaling.k_t * nominal.t_swing,
        control_points: std::array::from_fn(|j| {
            let c = nominal.control_points[j];
            [
                p0[0] + scaling.k_c[j] * (c[0] - p0[0]),
                p0[1] + scaling.k_c[j] * (c[1] - p0[1]),
            ]
        }),
        l_span: nominal.l_span,
        delta: scaling.k_delta * nominal.delta,
        p0,
    };
    out.pin_endpoints();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::bounds::GainBounds;

    fn gains() -> ImpedanceGains {
        ImpedanceGains::midpoint(&GainBounds::default())
    }

    #[test]
    fn default_arc_joins_stance() {
        let p = TrajectoryParams::default();
        assert_eq!(p.control_points[0], p.stance_exit());
        assert_eq!(p.control_points[11], p.stance_entry());
        let (apex, _) = bezier(&p.control_points, 0.5);
        assert!((apex[1] - (p.p0[1] + 0.10)).abs() < 1e-12);
    }

    #[test]
    fn stance_keypoints() {
        let p = TrajectoryParams::default();
        let a = leg_trajectory(&p, 0.0, LegMode::Stance);
        let b = leg_trajectory(&p, 0.5, LegMode::Stance);
        let c = leg_trajectory(&p, 1.0, LegMode::Stance);
        assert!((a.x - (p.p0[0] + p.l_span)).abs() < 1e-12 && (a.y - p.p0[1]).abs() < 1e-12);
        assert!((b.x - p.p0[0]).abs() < 1e-12 && (b.y - (p.p0[1] - p.delta)).abs() < 1e-12);
        assert!((c.x - (p.p0[0] - p.l_span)).abs() < 1e-12 && (c.y - p.p0[1]).abs() < 1e-12);
    }

    #[test]
    fn swing_endpoints_and_velocity() {
        let p = TrajectoryParams::default();
        let s = leg_trajectory(&p, 0.0, LegMode::Swing);
        let e = leg_trajectory(&p, 1.0, LegMode::Swing);
        assert_eq!([s.x, s.y], p.control_points[0]);
        assert_eq!([e.x, e.y], p.control_points[11]);
        let c = &p.control_points;
        assert!((s.xdot - 11.0 * (c[1][0] - c[0][0]) / p.t_swing).abs() < 1e-12);
        assert!((s.ydot - 11.0 * (c[1][1] - c[0][1]) / p.t_swing).abs() < 1e-12);
    }

    #[test]
    fn constant_control_points_give_still_foot() {
        let mut p = TrajectoryParams::default();
        p.control_points = [[0.05, -0.4]; NUM_CONTROL_POINTS];
        for i in 0..=10 {
            let f = leg_trajectory(&p, i as f64 / 10.0, LegMode::Swing);
            assert!((f.x - 0.05).abs() < 1e-12 && (f.y + 0.4).abs() < 1e-12);
            assert!(f.xdot.abs() < 1e-12 && f.ydot.abs() < 1e-12);
        }
    }

    #[test]
    fn identity_scaling() {
        let p = TrajectoryParams::default();
        let out = apply_scaling(
            &p,
            &ScalingParams::identity(gains()),
            &ScalingBounds::default(),
        )
        .unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn time_scaling_doubles_period() {
        let p = TrajectoryParams::default();
        let bounds = ScalingBounds {
            k_t: crate::controllers::bounds::Range::new(0.5, 2.0),
            ..ScalingBounds::default()
        };
        let mut s = ScalingParams::identity(gains());
        s.k_t = 2.0;
        let out = apply_scaling(&p, &s, &bounds).unwrap();
        assert!((out.cycle_period() - 2.0 * p.cycle_period()).abs() < 1e-15);
    }

    #[test]
    fn collapsed_control_points() {
        let p = TrajectoryParams::default();
        let bounds = ScalingBounds {
            k_c: crate::controllers::bounds::Range::new(0.0, 1.5),
            ..ScalingBounds::default()
        };
        let mut s = ScalingParams::identity(gains());
        s.k_c = [0.0; NUM_CONTROL_POINTS];
        let out = apply_scaling(&p, &s, &bounds).unwrap();
        for c in &out.control_points[1..11] {
            assert_eq!(*c, p.p0);
        }
        assert_eq!(out.control_points[0], p.stance_exit());
        assert_eq!(out.control_points[11], p.stance_entry());
    }

    #[test]
    fn out_of_bounds_scaling_rejected() {
        let mut s = ScalingParams::identity(gains());
        s.k_delta = 3.0;
        let err = apply_scaling(&TrajectoryParams::default(), &s, &ScalingBounds::default());
        assert!(matches!(err, Err(crate::Error::BoundsViolation { .. })));
    }

    #[test]
    fn unit_round_trip() {
        let bounds = ScalingBounds::default();
        let a: Vec<f64> = (0..SCALING_DIM).map(|i| (i as f64 / 9.0) - 1.0).collect();
        let s = ScalingParams::from_unit(&bounds, &a);
        let back = s.to_unit(&bounds);
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
