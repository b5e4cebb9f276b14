//! Gait pattern modulator for a trot: diagonal pairs FL+BR and FR+BL move
//! together, half a cycle apart, re-synchronized on front-left touchdown.

use serde::{Deserialize, Serialize};

use crate::controllers::trajectory::{LegMode, TrajectoryParams};
use crate::model::NUM_LEGS;

pub const FL: usize = 0;
pub const FR: usize = 1;
pub const BL: usize = 2;
pub const BR: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitPhase {
    /// Per-leg phase in `[0, 1)` over one stance + swing cycle; stance first.
    pub phase: [f64; NUM_LEGS],
    /// Time of the last modulator update.
    pub last_time: Option<f64>,
    /// Time of the last front-left touchdown reset.
    pub touchdown_time: Option<f64>,
}

fn wrap(phase: f64) -> f64 {
    let p = phase.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if p >= 1.0 {
        0.0
    } else {
        p
    }
}

impl GaitPhase {
    /// Front-left and back-right at stance start, the other pair mid-cycle.
    pub fn trot(reference_phase: f64) -> Self {
        let mut g = Self {
            phase: [0.0; NUM_LEGS],
            last_time: None,
            touchdown_time: None,
        };
        g.set_reference(reference_phase);
        g
    }

    fn set_reference(&mut self, fl_phase: f64) {
        let fl = wrap(fl_phase);
        let other = wrap(fl + 0.5);
        self.phase[FL] = fl;
        self.phase[BR] = fl;
        self.phase[FR] = other;
        self.phase[BL] = other;
    }

    /// Stance or swing, and progress within that mode in `[0, 1]`.
    pub fn leg_mode(&self, leg: usize, params: &TrajectoryParams) -> (LegMode, f64) {
        let duty = params.duty_factor();
        let phi = self.phase[leg];
        if phi < duty {
            (LegMode::Stance, phi / duty)
        } else {
            (LegMode::Swing, (phi - duty) / (1.0 - duty))
        }
    }

    pub fn is_trot_paired(&self, tol: f64) -> bool {
        let offset = (self.phase[FR] - self.phase[FL]).rem_euclid(1.0);
        self.phase[FL] == self.phase[BR]
            && self.phase[FR] == self.phase[BL]
            && (offset - 0.5).abs() <= tol
    }
}

/// Advances the gait to time `t`. A front-left touchdown event restarts the
/// front-left stance and re-aligns the other legs to the trot offsets.
pub fn gait_modulator(
    phase: &GaitPhase,
    t: f64,
    params: &TrajectoryParams,
    fl_touchdown_event: bool,
) -> GaitPhase {
    let mut next = *phase;
    let dt = phase.last_time.map_or(0.0, |last| (t - last).max(0.0));
    next.last_time = Some(t);
    if fl_touchdown_event {
        next.set_reference(0.0);
        next.touchdown_time = Some(t);
    } else {
        next.set_reference(phase.phase[FL] + dt / params.cycle_period());
    }
    next
}
