use std::io::Write;

use crate::error::Result;
use crate::model::{NUM_DOF, NUM_JOINTS, NUM_LEGS};

/// Column order of episode trace files.
pub const TRACE_HEADER: [&str; 2 + 2 * NUM_DOF + NUM_JOINTS + 1 + NUM_LEGS] = [
    "t",
    "v_d",
    "x",
    "z",
    "pitch",
    "q_fl_hip",
    "q_fl_knee",
    "q_fr_hip",
    "q_fr_knee",
    "q_bl_hip",
    "q_bl_knee",
    "q_br_hip",
    "q_br_knee",
    "xd",
    "zd",
    "pitchd",
    "qd_fl_hip",
    "qd_fl_knee",
    "qd_fr_hip",
    "qd_fr_knee",
    "qd_bl_hip",
    "qd_bl_knee",
    "qd_br_hip",
    "qd_br_knee",
    "tau_fl_hip",
    "tau_fl_knee",
    "tau_fr_hip",
    "tau_fr_knee",
    "tau_bl_hip",
    "tau_bl_knee",
    "tau_br_hip",
    "tau_br_knee",
    "reward",
    "contact_fl",
    "contact_fr",
    "contact_bl",
    "contact_br",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub v_d: f64,
    pub q: [f64; NUM_DOF],
    pub qdot: [f64; NUM_DOF],
    pub torques: [f64; NUM_JOINTS],
    pub reward: f64,
    pub contacts: [bool; NUM_LEGS],
}

impl TraceRow {
    fn fields(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(TRACE_HEADER.len());
        out.push(self.t.to_string());
        out.push(self.v_d.to_string());
        out.extend(self.q.iter().map(f64::to_string));
        out.extend(self.qdot.iter().map(f64::to_string));
        out.extend(self.torques.iter().map(f64::to_string));
        out.push(self.reward.to_string());
        out.extend(self.contacts.iter().map(|&c| u8::from(c).to_string()));
        out
    }
}

/// Streams trace rows as CSV under [`TRACE_HEADER`].
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(writer: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(TRACE_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &TraceRow) -> Result<()> {
        self.inner.write_record(row.fields())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_match_header_width() {
        let row = TraceRow {
            t: 0.01,
            v_d: 2.0,
            q: [0.0; NUM_DOF],
            qdot: [0.0; NUM_DOF],
            torques: [1.0; NUM_JOINTS],
            reward: 0.5,
            contacts: [true, false, true, false],
        };
        assert_eq!(row.fields().len(), TRACE_HEADER.len());
        let mut buf = Vec::new();
        let mut w = TraceWriter::new(&mut buf).unwrap();
        w.write(&row).unwrap();
        w.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("t,v_d,x,z,pitch"));
        assert!(lines[1].ends_with("1,0,1,0"));
    }
}
