use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controllers::policy::PolicyKind;
use crate::error::{Error, Result};
use crate::experiment::checkpoint::PolicyCheckpoint;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::disturb::{disturbance_test, write_disturbance, DisturbanceReport};
use crate::experiment::metrics::{read_curve, write_curve, RunMetrics};
use crate::experiment::orbits::{periodicity_run, PeriodicityReport};
use crate::experiment::train::{
    train_run, TrainSummary, BEST_POLICY_FILE, CURVE_FILE, METRICS_FILE, SUMMARY_FILE, TIMING_FILE,
};

/// Training order: cheapest first.
pub const REPRODUCTION_ORDER: [PolicyKind; 3] = [
    PolicyKind::HighlyStructured,
    PolicyKind::Structured,
    PolicyKind::Direct,
];

pub fn seed_dir(root: &Path, kind: PolicyKind, seed: u64) -> PathBuf {
    root.join(kind.name()).join(format!("seed_{seed}"))
}

fn read_timing(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            rec.get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Config(format!("malformed row in {}", path.display())))
        })
        .collect()
}

/// A finished seed run read back from its directory.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub summary: TrainSummary,
    pub curve: Vec<crate::experiment::metrics::CurvePoint>,
    pub wall_times: Vec<f64>,
}

pub fn load_seed_run(dir: &Path) -> Result<SeedRun> {
    let summary: TrainSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
    let curve = read_curve(&dir.join(CURVE_FILE))?;
    let wall_times = read_timing(&dir.join(TIMING_FILE)).unwrap_or_default();
    Ok(SeedRun {
        summary,
        curve,
        wall_times,
    })
}

/// Seed directories (`seed_<N>`) under `dir` holding a finished run.
pub fn find_seed_runs(dir: &Path) -> Result<Vec<SeedRun>> {
    let mut runs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_seed = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("seed_"));
        if is_seed && path.join(SUMMARY_FILE).exists() {
            runs.push(load_seed_run(&path)?);
        }
    }
    runs.sort_by_key(|r| r.summary.seed);
    Ok(runs)
}

/// Aggregates the seed runs in `dir` and merges any disturbance report
/// found there; writes `metrics.json` and the aggregated learning curve.
pub fn aggregate_dir(dir: &Path, threshold: f64) -> Result<RunMetrics> {
    let runs = find_seed_runs(dir)?;
    let Some(first) = runs.first() else {
        return Err(Error::Config(format!(
            "no finished seed runs under {}",
            dir.display()
        )));
    };
    let kind = first.summary.policy;
    let mut metrics = RunMetrics::from_seed_runs(
        kind,
        runs.iter()
            .map(|r| (r.summary.seed, r.curve.clone(), r.wall_times.clone()))
            .collect(),
        threshold,
    )?;
    let report_path = dir.join("disturbance").join("disturbance.json");
    if report_path.exists() {
        let report: DisturbanceReport =
            serde_json::from_str(&std::fs::read_to_string(report_path)?)?;
        metrics.std_pitch = Some(report.std_pitch);
        metrics.std_height = Some(report.std_height);
        metrics.cot = report.cot;
        metrics.tumbles = Some(report.tumbles);
    }
    write_curve(&dir.join(CURVE_FILE), &metrics.curve)?;
    std::fs::write(
        dir.join(METRICS_FILE),
        serde_json::to_string_pretty(&metrics)?,
    )?;
    Ok(metrics)
}

/// Best-scoring checkpoint over a policy's seed runs; ties go to the lower seed.
pub fn best_checkpoint(dir: &Path) -> Result<PolicyCheckpoint> {
    let runs = find_seed_runs(dir)?;
    let best = runs
        .iter()
        .filter_map(|r| r.summary.best_reward.map(|b| (b, r)))
        .fold(None::<(f64, &SeedRun)>, |acc, (b, r)| match acc {
            Some((a, _)) if a >= b => acc,
            _ => Some((b, r)),
        })
        .map(|(_, r)| r)
        .ok_or_else(|| Error::Config(format!("no evaluated runs under {}", dir.display())))?;
    PolicyCheckpoint::load(
        &dir.join(format!("seed_{}", best.summary.seed))
            .join(BEST_POLICY_FILE),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub metrics: Vec<RunMetrics>,
    pub disturbance: Vec<DisturbanceReport>,
    pub periodicity: Vec<PeriodicityReport>,
    pub criteria: Vec<Criterion>,
}

impl ReproductionReport {
    pub fn load(root: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(
            root.join("report.json"),
        )?)?)
    }

    fn metrics(&self, kind: PolicyKind) -> Option<&RunMetrics> {
        self.metrics.iter().find(|m| m.policy == kind)
    }

    fn disturbance(&self, kind: PolicyKind) -> Option<&DisturbanceReport> {
        self.disturbance.iter().find(|d| d.policy == kind)
    }

    fn periodicity(&self, kind: PolicyKind) -> Option<&PeriodicityReport> {
        self.periodicity.iter().find(|p| p.policy == kind)
    }
}

fn fmt_rise(r: Option<u64>) -> String {
    r.map_or("not reached".into(), |s| s.to_string())
}

fn less(name: &str, a: Option<f64>, b: Option<f64>) -> Criterion {
    let passed = matches!((a, b), (Some(a), Some(b)) if a < b);
    Criterion {
        name: name.into(),
        passed,
        detail: format!("highly {a:?} vs structured {b:?}"),
    }
}

/// Checks the reproduction claims against the collected results.
pub fn assess(report: &ReproductionReport, config: &ExperimentConfig) -> Vec<Criterion> {
    use PolicyKind::*;
    let rise = |k| report.metrics(k).and_then(|m| m.rise_steps);
    let (hs, st, di) = (rise(HighlyStructured), rise(Structured), rise(Direct));
    let deadline = config.acceptance.rise_deadline;
    let mut out = vec![Criterion {
        name: "learning: highly structured rises within deadline".into(),
        passed: hs.is_some_and(|s| s <= deadline),
        detail: format!("rise steps {} (deadline {deadline})", fmt_rise(hs)),
    }];
    // a policy that never crosses counts as rising after any that does
    let after = |a: Option<u64>, b: Option<u64>| match (a, b) {
        (Some(a), Some(b)) => a > b,
        (None, _) => true,
        (Some(_), None) => false,
    };
    out.push(Criterion {
        name: "learning: rise ordering highly < structured < direct".into(),
        passed: hs.is_some() && after(st, hs) && after(di, st),
        detail: format!(
            "highly {}, structured {}, direct {}",
            fmt_rise(hs),
            fmt_rise(st),
            fmt_rise(di)
        ),
    });
    let dist = |k, f: fn(&DisturbanceReport) -> Option<f64>| report.disturbance(k).and_then(f);
    out.push(less(
        "disturbance: std pitch highly < structured",
        dist(HighlyStructured, |d| Some(d.std_pitch)),
        dist(Structured, |d| Some(d.std_pitch)),
    ));
    out.push(less(
        "disturbance: std height highly < structured",
        dist(HighlyStructured, |d| Some(d.std_height)),
        dist(Structured, |d| Some(d.std_height)),
    ));
    out.push(less(
        "disturbance: cost of transport highly < structured",
        dist(HighlyStructured, |d| d.cot),
        dist(Structured, |d| d.cot),
    ));
    let hs_dist = report.disturbance(HighlyStructured);
    out.push(Criterion {
        name: "disturbance: highly structured recovers after each push".into(),
        passed: hs_dist.is_some_and(DisturbanceReport::recovered),
        detail: hs_dist.map_or("no report".into(), |d| {
            let checks: Vec<String> = d
                .recovery
                .iter()
                .map(|r| {
                    format!(
                        "{:.0} s: {:.2} of {:.1} m/s",
                        r.onset, r.mean_velocity, r.v_d
                    )
                })
                .collect();
            format!("tumbles {}, {}", d.tumbles, checks.join(", "))
        }),
    });
    let (ph, pd) = (
        report.periodicity(HighlyStructured),
        report.periodicity(Direct),
    );
    out.push(Criterion {
        name: "periodicity: highly structured below threshold and below direct".into(),
        passed: matches!((ph, pd), (Some(h), Some(d)) if h.periodic && h.score < d.score),
        detail: format!(
            "highly {:?} (threshold {}), direct {:?}",
            ph.map(|p| p.score),
            config.periodicity.threshold,
            pd.map(|p| p.score)
        ),
    });
    out
}

/// Trains every policy over the acceptance seeds, skipping runs that already
/// finished under `root`, then runs the disturbance and periodicity tests on
/// each policy's best checkpoint and writes `report.json`.
pub fn reproduce(config: &ExperimentConfig, root: &Path) -> Result<ReproductionReport> {
    config.validate()?;
    let mut run_config = config.clone();
    run_config.trainer.total_steps = config.acceptance.total_steps;
    std::fs::create_dir_all(root)?;
    std::fs::write(root.join("config.toml"), run_config.to_toml())?;
    for kind in REPRODUCTION_ORDER {
        for &seed in &config.acceptance.seeds {
            let dir = seed_dir(root, kind, seed);
            if dir.join(SUMMARY_FILE).exists() {
                log::info!("{kind} seed {seed}: already trained");
                continue;
            }
            log::info!("{kind} seed {seed}: training");
            train_run(kind, seed, &run_config, Some(&dir))?;
        }
    }
    let mut report = ReproductionReport {
        metrics: Vec::new(),
        disturbance: Vec::new(),
        periodicity: Vec::new(),
        criteria: Vec::new(),
    };
    for kind in REPRODUCTION_ORDER {
        let dir = root.join(kind.name());
        let ckpt = best_checkpoint(&dir)?;
        ckpt.save(&dir.join(BEST_POLICY_FILE))?;
        let (traces, dist) = disturbance_test(&ckpt, &config.disturbance)?;
        write_disturbance(&dir.join("disturbance"), &traces, &dist)?;
        let periodic = periodicity_run(&ckpt, &config.periodicity, &dir.join("periodicity"))?;
        report
            .metrics
            .push(aggregate_dir(&dir, config.eval.reward_threshold)?);
        report.disturbance.push(dist);
        report.periodicity.push(periodic);
    }
    report.criteria = assess(&report, config);
    std::fs::write(
        root.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}
