use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::policy::PolicyKind;
use crate::dynamics::hip_index;
use crate::env::{Env, TraceRow, TraceWriter};
use crate::error::Result;
use crate::experiment::checkpoint::PolicyCheckpoint;
use crate::experiment::config::PeriodicityConfig;
use crate::experiment::metrics::{best_periodicity, periodicity_score};
use crate::model::{LEG_NAMES, NUM_LEGS};

/// Rolls a checkpoint out at a constant desired speed without early stop.
pub fn constant_speed_rollout(
    ckpt: &PolicyCheckpoint,
    v_d: f64,
    duration: f64,
    seed: u64,
) -> Result<Vec<TraceRow>> {
    let mut setup = ckpt.config.env_setup(ckpt.kind)?;
    let dt = setup.sim.control_dt;
    let steps = (duration / dt).round() as usize;
    setup.episode.early_stop = false;
    setup.episode.max_steps = steps.max(1);
    let mut env = Env::new(setup)?;
    env.reset_with(v_d, &mut ChaCha8Rng::seed_from_u64(seed));
    env.set_desired_velocity(v_d)?;
    let mut rows = Vec::with_capacity(steps);
    for _ in 0..steps {
        let action = ckpt.action(&env)?;
        let r = env.step(&action, [0.0, 0.0])?;
        let state = env.state();
        rows.push(TraceRow {
            t: state.time,
            v_d,
            q: state.q,
            qdot: state.qdot,
            torques: r.info.torques,
            reward: r.reward,
            contacts: r.info.contact_flags,
        });
        if r.info.diverged {
            log::warn!("{} rollout diverged at t = {:.2} s", ckpt.kind, state.time);
            break;
        }
    }
    Ok(rows)
}

/// `(hip angle, hip rate, knee angle, knee rate)` of one leg.
pub fn leg_orbit(row: &TraceRow, leg: usize) -> [f64; 4] {
    let hip = hip_index(leg);
    [row.q[hip], row.qdot[hip], row.q[hip + 1], row.qdot[hip + 1]]
}

pub const ORBIT_HEADER: [&str; 6] = ["t", "leg", "q_hip", "qd_hip", "q_knee", "qd_knee"];

pub fn write_orbits(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ORBIT_HEADER)?;
    for row in rows {
        for (leg, name) in LEG_NAMES.iter().enumerate() {
            let o = leg_orbit(row, leg);
            w.write_record([
                row.t.to_string(),
                name.to_string(),
                o[0].to_string(),
                o[1].to_string(),
                o[2].to_string(),
                o[3].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = TraceWriter::new(std::fs::File::create(path)?)?;
    for row in rows {
        w.write(row)?;
    }
    w.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub policy: PolicyKind,
    pub v_d: f64,
    /// Shift used for the score (s).
    pub period: f64,
    /// The period comes from the trot controller's clock rather than a search.
    pub clocked: bool,
    pub score: f64,
    pub threshold: f64,
    pub periodic: bool,
    pub samples: usize,
}

/// Scores the joint orbits after the warm-up. The trot controller is
/// shifted by its own gait cycle; other policies get the best score over
/// the configured search range.
pub fn periodicity_report(
    ckpt: &PolicyCheckpoint,
    rows: &[TraceRow],
    cfg: &PeriodicityConfig,
) -> Result<PeriodicityReport> {
    let dt = ckpt.config.sim.control_dt;
    let samples: Vec<Vec<f64>> = rows
        .iter()
        .filter(|r| r.t > cfg.warmup + 1e-9)
        .map(|r| (0..NUM_LEGS).flat_map(|leg| leg_orbit(r, leg)).collect())
        .collect();
    let (score, period, clocked) = match ckpt.gait_period(cfg.v_d)? {
        Some(period) => (periodicity_score(&samples, dt, period)?, period, true),
        None => {
            let [lo, hi] = cfg.search_periods;
            let (score, period) = best_periodicity(&samples, dt, lo, hi)?;
            (score, period, false)
        }
    };
    Ok(PeriodicityReport {
        policy: ckpt.kind,
        v_d: cfg.v_d,
        period,
        clocked,
        score,
        threshold: cfg.threshold,
        periodic: score < cfg.threshold,
        samples: samples.len(),
    })
}

/// Constant-speed rollout, orbit files and score, written into `dir`.
pub fn periodicity_run(
    ckpt: &PolicyCheckpoint,
    cfg: &PeriodicityConfig,
    dir: &Path,
) -> Result<PeriodicityReport> {
    std::fs::create_dir_all(dir)?;
    let rows = constant_speed_rollout(ckpt, cfg.v_d, cfg.duration, cfg.seed)?;
    write_trace(&dir.join("trace.csv"), &rows)?;
    write_orbits(&dir.join("orbits.csv"), &rows)?;
    let report = periodicity_report(ckpt, &rows, cfg)?;
    std::fs::write(
        dir.join("periodicity.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}
