use crate::dynamics::{SimState, IDX_PITCH, IDX_X, IDX_Z};
use crate::model::{NUM_JOINTS, NUM_LEGS};

pub const OBSERVATION_DIM: usize = 26;

/// Policy input: desired speed, trunk pose and rates, joint state and
/// foot contacts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub v_d: f64,
    pub com_height: f64,
    pub pitch: f64,
    pub com_vx: f64,
    pub com_vz: f64,
    pub pitch_rate: f64,
    pub joint_angles: [f64; NUM_JOINTS],
    pub joint_rates: [f64; NUM_JOINTS],
    pub contact_flags: [bool; NUM_LEGS],
}

impl Observation {
    pub fn from_state(state: &SimState, v_d: f64) -> Self {
        Self {
            v_d,
            com_height: state.q[IDX_Z],
            pitch: state.q[IDX_PITCH],
            com_vx: state.qdot[IDX_X],
            com_vz: state.qdot[IDX_Z],
            pitch_rate: state.qdot[IDX_PITCH],
            joint_angles: state.joint_angles(),
            joint_rates: state.joint_rates(),
            contact_flags: state.contact_flags,
        }
    }

    pub fn to_vec(&self) -> [f64; OBSERVATION_DIM] {
        let mut v = [0.0; OBSERVATION_DIM];
        v[0] = self.v_d;
        v[1] = self.com_height;
        v[2] = self.pitch;
        v[3] = self.com_vx;
        v[4] = self.com_vz;
        v[5] = self.pitch_rate;
        v[6..14].copy_from_slice(&self.joint_angles);
        v[14..22].copy_from_slice(&self.joint_rates);
        for (dst, &c) in v[22..26].iter_mut().zip(&self.contact_flags) {
            *dst = if c { 1.0 } else { 0.0 };
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RobotModel, SimConfig};

    #[test]
    fn layout() {
        let m = RobotModel::default();
        let mut s = SimState::standing(&m, &SimConfig::default(), 0.45);
        s.qdot[0] = 1.5;
        s.q[2] = 0.1;
        let o = Observation::from_state(&s, 3.0).to_vec();
        assert_eq!(o.len(), OBSERVATION_DIM);
        assert_eq!(o[0], 3.0);
        assert_eq!(o[1], 0.45);
        assert_eq!(o[2], 0.1);
        assert_eq!(o[3], 1.5);
        assert_eq!(o[6], s.q[3]);
        assert_eq!(&o[22..26], &[1.0; 4]);
    }
}
