use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::policy::PolicyKind;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::experiment::checkpoint::PolicyCheckpoint;
use crate::experiment::config::DisturbanceScript;
use crate::experiment::metrics::{cost_of_transport, mean_std};

/// One control step of a scripted rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbSample {
    pub t: f64,
    pub v: f64,
    pub v_d: f64,
    pub pitch: f64,
    pub height: f64,
    pub fx: f64,
    /// Summed mean joint power over the step (W).
    pub power: f64,
    pub failure: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedTrace {
    pub seed: u64,
    pub samples: Vec<DisturbSample>,
    pub tumbled: bool,
    /// Set when the simulation diverged and the rollout stopped early.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryCheck {
    pub onset: f64,
    pub v_d: f64,
    /// Seed-averaged speed over the window ending at the recovery time.
    pub mean_velocity: f64,
    pub recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport {
    pub policy: PolicyKind,
    pub seeds: Vec<u64>,
    pub std_pitch: f64,
    pub std_height: f64,
    /// `None` when the robot did not move forward on average.
    pub cot: Option<f64>,
    pub tumbles: usize,
    pub recovery: Vec<RecoveryCheck>,
    pub mean_velocity: f64,
}

impl DisturbanceReport {
    pub fn recovered(&self) -> bool {
        self.tumbles == 0 && self.recovery.iter().all(|r| r.recovered)
    }
}

/// Runs the script once from the perturbed stance drawn with `seed`, with
/// early stopping disabled.
pub fn run_script(
    ckpt: &PolicyCheckpoint,
    script: &DisturbanceScript,
    seed: u64,
) -> Result<SeedTrace> {
    script.validate()?;
    let mut setup = ckpt.config.env_setup(ckpt.kind)?;
    let dt = setup.sim.control_dt;
    let steps = (script.total_time / dt).round() as usize;
    setup.episode.early_stop = false;
    setup.episode.max_steps = steps.max(1);
    let mut env = Env::new(setup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    env.reset_with(script.speed_at(0.0), &mut rng);
    let mut samples = Vec::with_capacity(steps);
    let mut error = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let v_d = script.speed_at(t);
        env.set_desired_velocity(v_d)?;
        let fx = script.force_at(t);
        let action = ckpt.action(&env)?;
        let r = env.step(&action, [fx, 0.0])?;
        let state = env.state();
        samples.push(DisturbSample {
            t: (k + 1) as f64 * dt,
            v: r.info.com_velocity,
            v_d,
            pitch: state.pitch(),
            height: state.com_height(),
            fx,
            power: r.info.power(),
            failure: r.info.failure,
        });
        if r.info.diverged {
            let msg = format!("simulation diverged at t = {:.2} s", state.time);
            log::warn!("{} seed {seed}: {msg}", ckpt.kind);
            error = Some(msg);
            break;
        }
    }
    Ok(SeedTrace {
        seed,
        tumbled: samples.iter().any(|s| s.failure),
        samples,
        error,
    })
}

/// Sample-wise mean over seeds, truncated to the shortest trace.
pub fn mean_trace(traces: &[SeedTrace]) -> Vec<DisturbSample> {
    let Some(len) = traces.iter().map(|t| t.samples.len()).min() else {
        return Vec::new();
    };
    let n = traces.len() as f64;
    (0..len)
        .map(|i| {
            let avg = |f: fn(&DisturbSample) -> f64| {
                traces.iter().map(|t| f(&t.samples[i])).sum::<f64>() / n
            };
            let first = traces[0].samples[i];
            DisturbSample {
                t: first.t,
                v: avg(|s| s.v),
                v_d: first.v_d,
                pitch: avg(|s| s.pitch),
                height: avg(|s| s.height),
                fx: first.fx,
                power: avg(|s| s.power),
                failure: traces.iter().any(|t| t.samples[i].failure),
            }
        })
        .collect()
}

/// Pools all seeds' samples into the summary statistics and checks the
/// speed after each push on the seed-averaged trace.
pub fn summarize(
    kind: PolicyKind,
    traces: &[SeedTrace],
    script: &DisturbanceScript,
    weight: f64,
) -> Result<DisturbanceReport> {
    let pooled: Vec<&DisturbSample> = traces.iter().flat_map(|t| &t.samples).collect();
    if pooled.is_empty() {
        return Err(Error::TraceTooShort { len: 0, needed: 1 });
    }
    let column = |f: fn(&DisturbSample) -> f64| pooled.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let (_, std_pitch) = mean_std(&column(|s| s.pitch));
    let (_, std_height) = mean_std(&column(|s| s.height));
    let velocity = column(|s| s.v);
    let (mean_velocity, _) = mean_std(&velocity);
    let cot = match cost_of_transport(&column(|s| s.power), &velocity, weight) {
        Ok(c) => Some(c),
        Err(Error::ZeroVelocity(_)) => None,
        Err(e) => return Err(e),
    };
    let mean = mean_trace(traces);
    let recovery = script
        .forces
        .iter()
        .map(|f| {
            let end = f[0] + script.recovery_time;
            let window: Vec<f64> = mean
                .iter()
                .filter(|s| s.t > end - script.recovery_window - 1e-9 && s.t <= end + 1e-9)
                .map(|s| s.v)
                .collect();
            let v_d = script.speed_at(end);
            let mean_velocity = if window.is_empty() {
                f64::NAN
            } else {
                mean_std(&window).0
            };
            RecoveryCheck {
                onset: f[0],
                v_d,
                mean_velocity,
                recovered: (mean_velocity - v_d).abs() <= script.recovery_tolerance * v_d,
            }
        })
        .collect();
    Ok(DisturbanceReport {
        policy: kind,
        seeds: traces.iter().map(|t| t.seed).collect(),
        std_pitch,
        std_height,
        cot,
        tumbles: traces.iter().filter(|t| t.tumbled).count(),
        recovery,
        mean_velocity,
    })
}

/// Runs the script for seeds `0..script.seeds`.
pub fn disturbance_test(
    ckpt: &PolicyCheckpoint,
    script: &DisturbanceScript,
) -> Result<(Vec<SeedTrace>, DisturbanceReport)> {
    let traces = (0..script.seeds as u64)
        .map(|seed| run_script(ckpt, script, seed))
        .collect::<Result<Vec<_>>>()?;
    let weight = crate::model::RobotModel::new(ckpt.config.robot.clone())?.weight();
    let report = summarize(ckpt.kind, &traces, script, weight)?;
    Ok((traces, report))
}

pub const DISTURB_HEADER: [&str; 6] = ["t", "v", "v_d", "pitch", "height", "fx"];

pub fn write_disturb_trace(path: &Path, samples: &[DisturbSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DISTURB_HEADER)?;
    for s in samples {
        w.write_record([s.t, s.v, s.v_d, s.pitch, s.height, s.fx].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the seed-averaged trace to `disturb_trace.csv`, each seed's trace
/// to `disturb_trace_seed<N>.csv` and the report to `disturbance.json`.
pub fn write_disturbance(
    dir: &Path,
    traces: &[SeedTrace],
    report: &DisturbanceReport,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_disturb_trace(&dir.join("disturb_trace.csv"), &mean_trace(traces))?;
    for t in traces {
        write_disturb_trace(
            &dir.join(format!("disturb_trace_seed{}.csv", t.seed)),
            &t.samples,
        )?;
    }
    std::fs::write(
        dir.join("disturbance.json"),
        serde_json::to_string_pretty(report)?,
    )?;
    Ok(())
}
