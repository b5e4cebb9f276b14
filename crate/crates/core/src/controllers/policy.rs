//! The three policy structures: network outputs to torques, foot targets,
//! or trajectory scalings.

use serde::{Deserialize, Serialize};

use crate::controllers::bounds::{ScalingBounds, StructuredBounds};
use crate::controllers::impedance::ImpedanceGains;
use crate::controllers::observation::{Observation, OBSERVATION_DIM};
use crate::controllers::trajectory::{ScalingParams, SCALING_DIM};
use crate::error::{Error, Result};
use crate::kinematics::FootTarget;
use crate::model::{NUM_JOINTS, NUM_LEGS};
use crate::nn::Mlp;

pub const DIRECT_ACTION_DIM: usize = NUM_JOINTS;
/// Eight foot positions, eight foot velocities, four gains.
pub const STRUCTURED_ACTION_DIM: usize = 4 * NUM_LEGS + 4;
pub const HIGHLY_STRUCTURED_ACTION_DIM: usize = SCALING_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Direct,
    Structured,
    #[serde(alias = "highly")]
    HighlyStructured,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [
        PolicyKind::Direct,
        PolicyKind::Structured,
        PolicyKind::HighlyStructured,
    ];

    pub fn input_dim(self) -> usize {
        match self {
            PolicyKind::Direct | PolicyKind::Structured => OBSERVATION_DIM,
            PolicyKind::HighlyStructured => 1,
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            PolicyKind::Direct => DIRECT_ACTION_DIM,
            PolicyKind::Structured => STRUCTURED_ACTION_DIM,
            PolicyKind::HighlyStructured => HIGHLY_STRUCTURED_ACTION_DIM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Direct => "direct",
            PolicyKind::Structured => "structured",
            PolicyKind::HighlyStructured => "highly",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            PolicyKind::Direct => 0,
            PolicyKind::Structured => 1,
            PolicyKind::HighlyStructured => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(PolicyKind::Direct),
            "structured" => Ok(PolicyKind::Structured),
            "highly" | "highly_structured" | "highly-structured" => {
                Ok(PolicyKind::HighlyStructured)
            }
            other => Err(Error::Config(format!("unknown policy kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_actor(actor: &Mlp, inputs: usize, outputs: usize) -> Result<()> {
    if actor.input_dim() != inputs {
        return Err(Error::DimensionMismatch {
            context: "actor input",
            expected: inputs,
            got: actor.input_dim(),
        });
    }
    if actor.output_dim() != outputs {
        return Err(Error::DimensionMismatch {
            context: "actor output",
            expected: outputs,
            got: actor.output_dim(),
        });
    }
    Ok(())
}

pub fn torques_from_action(action: &[f64], max_torque: f64) -> [f64; NUM_JOINTS] {
    std::array::from_fn(|j| max_torque * action[j].clamp(-1.0, 1.0))
}

/// Direct policy: joint torques from the full observation.
pub fn direct_policy(actor: &Mlp, obs: &Observation, max_torque: f64) -> Result<[f64; NUM_JOINTS]> {
    check_actor(actor, OBSERVATION_DIM, DIRECT_ACTION_DIM)?;
    let a = actor.forward(&obs.to_vec())?;
    Ok(torques_from_action(&a, max_torque))
}

/// Decodes `[x x4, y x4, xdot x4, ydot x4, k_r, b_r, k_theta, b_theta]`.
pub fn foot_targets_from_action(
    action: &[f64],
    bounds: &StructuredBounds,
) -> ([FootTarget; NUM_LEGS], ImpedanceGains) {
    let targets = std::array::from_fn(|leg| FootTarget {
        x: bounds.foot_x.from_unit(action[leg]),
        y: bounds.foot_y.from_unit(action[NUM_LEGS + leg]),
        xdot: bounds.foot_velocity.from_unit(action[2 * NUM_LEGS + leg]),
        ydot: bounds.foot_velocity.from_unit(action[3 * NUM_LEGS + leg]),
    });
    let gains = ImpedanceGains::from_unit(&bounds.gains, &action[4 * NUM_LEGS..]);
    (targets, gains)
}

/// Structured policy: foot targets and polar gains from the observation.
pub fn structured_policy(
    actor: &Mlp,
    obs: &Observation,
    bounds: &StructuredBounds,
) -> Result<([FootTarget; NUM_LEGS], ImpedanceGains)> {
    check_actor(actor, OBSERVATION_DIM, STRUCTURED_ACTION_DIM)?;
    let a = actor.forward(&obs.to_vec())?;
    Ok(foot_targets_from_action(&a, bounds))
}

/// Desired speed mapped affinely from `range` onto `[-1, 1]`.
pub fn normalized_speed(v_d: f64, range: [f64; 2]) -> f64 {
    let [lo, hi] = range;
    if hi > lo {
        (2.0 * v_d - lo - hi) / (hi - lo)
    } else {
        0.0
    }
}

/// Highly structured policy: trajectory scalings from the desired speed,
/// which the actor sees normalized over `v_d_range`.
pub fn highly_structured_policy(
    actor: &Mlp,
    v_d: f64,
    v_d_range: [f64; 2],
    bounds: &ScalingBounds,
) -> Result<ScalingParams> {
    check_actor(actor, 1, HIGHLY_STRUCTURED_ACTION_DIM)?;
    let a = actor.forward(&[normalized_speed(v_d, v_d_range)])?;
    Ok(ScalingParams::from_unit(bounds, &a))
}
