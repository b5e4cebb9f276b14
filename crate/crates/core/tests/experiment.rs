use std::path::Path;

use trotlab::controllers::policy::STRUCTURED_ACTION_DIM;
use trotlab::controllers::{PolicyKind, OBSERVATION_DIM};
use trotlab::experiment::disturb::{run_script, write_disturbance};
use trotlab::experiment::orbits::{constant_speed_rollout, periodicity_report, write_orbits};
use trotlab::experiment::train::{
    BEST_POLICY_FILE, CURVE_FILE, METRICS_FILE, STATE_FILE, SUMMARY_FILE, TIMING_FILE,
};
use trotlab::experiment::{
    disturbance_test, train_run, DisturbanceScript, ExperimentConfig, PolicyCheckpoint,
};
use trotlab::nn::{Activation, Mlp};

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.trainer.total_steps = 1200;
    cfg.trainer.random_steps = 300;
    cfg.trainer.batch_size = 32;
    cfg.trainer.buffer_size = 5000;
    cfg.trainer.hidden = vec![16, 16];
    cfg.trainer.scaling_critic_hidden = vec![16, 16];
    cfg.trainer.one_step_train_iters = 5;
    cfg.eval.eval_interval = 400;
    cfg.eval.eval_episodes = 2;
    cfg.episode.max_steps = 150;
    cfg
}

/// Actor whose output ignores its input: `tanh(bias) = unit`.
fn constant_actor(inputs: usize, unit: &[f64]) -> Mlp {
    let mut net = Mlp::zeros(&[inputs, 4, unit.len()], Activation::Relu, Activation::Tanh);
    for (b, u) in net.bias_mut(1).iter_mut().zip(unit) {
        *b = u.atanh();
    }
    net
}

/// Feet straight below the hips at standing height, stiff gains.
fn static_stance_checkpoint() -> PolicyCheckpoint {
    let cfg = ExperimentConfig::default();
    let b = cfg.structured_bounds;
    let mut unit = vec![0.0; STRUCTURED_ACTION_DIM];
    for leg in 0..4 {
        unit[leg] = b.foot_x.to_unit(0.0);
        unit[4 + leg] = b.foot_y.to_unit(-0.45);
    }
    unit[16..].copy_from_slice(&[0.5, 0.5, 0.5, 0.5]);
    let actor = constant_actor(OBSERVATION_DIM, &unit);
    PolicyCheckpoint::new(PolicyKind::Structured, actor, cfg).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn curve_has_one_row_per_interval() {
    let cfg = tiny_config();
    for kind in PolicyKind::ALL {
        let dir = tempfile::tempdir().unwrap();
        let outcome = train_run(kind, 1, &cfg, Some(dir.path())).unwrap();
        assert_eq!(outcome.curve.len(), 3, "{kind}");
        let text = String::from_utf8(read(&dir.path().join(CURVE_FILE))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,mean_reward,std_reward");
        assert_eq!(lines.len(), 1 + 3);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
        for f in [
            BEST_POLICY_FILE,
            TIMING_FILE,
            SUMMARY_FILE,
            STATE_FILE,
            METRICS_FILE,
        ] {
            assert!(dir.path().join(f).exists(), "{kind}: missing {f}");
        }
        let best = PolicyCheckpoint::load(&dir.path().join(BEST_POLICY_FILE)).unwrap();
        assert_eq!(best, outcome.best);
        let top = outcome
            .curve
            .iter()
            .map(|p| p.mean_reward)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.mean_reward, Some(top));
    }
}

#[test]
fn identical_seeds_give_identical_files() {
    let cfg = tiny_config();
    for kind in [PolicyKind::Structured, PolicyKind::HighlyStructured] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        train_run(kind, 4, &cfg, Some(a.path())).unwrap();
        train_run(kind, 4, &cfg, Some(b.path())).unwrap();
        for f in [CURVE_FILE, BEST_POLICY_FILE, STATE_FILE] {
            assert_eq!(
                read(&a.path().join(f)),
                read(&b.path().join(f)),
                "{kind} {f}"
            );
        }
    }
}

#[test]
fn different_seeds_differ() {
    let cfg = tiny_config();
    let a = train_run(PolicyKind::Direct, 1, &cfg, None).unwrap();
    let b = train_run(PolicyKind::Direct, 2, &cfg, None).unwrap();
    assert_ne!(a.curve, b.curve);
}

#[test]
fn one_step_trains_once_per_finished_episode() {
    let cfg = tiny_config();
    let dir = tempfile::tempdir().unwrap();
    let outcome = train_run(PolicyKind::HighlyStructured, 0, &cfg, Some(dir.path())).unwrap();
    let s = &outcome.summary;
    assert!(s.episodes >= 1200 / 150);
    assert_eq!(s.actor_rounds, s.episodes);
    let state: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join(STATE_FILE))).unwrap();
    let agent = &state["agent"];
    let rounds = agent["rounds"].as_u64().unwrap();
    let k = cfg.trainer.one_step_train_iters as u64;
    assert_eq!(agent["critic_opt"]["steps"].as_u64().unwrap(), k * rounds);
    assert_eq!(agent["actor_opt"]["steps"].as_u64().unwrap(), k * rounds);
}

#[test]
fn static_stance_holds_pitch_without_pushes() {
    let ckpt = static_stance_checkpoint();
    let script = DisturbanceScript {
        schedule: vec![[0.0, 2.0]],
        ..DisturbanceScript::default()
    }
    .without_forces();
    let trace = run_script(&ckpt, &script, 0).unwrap();
    assert_eq!(trace.samples.len(), 2000);
    assert!(!trace.tumbled);
    let pitch: Vec<f64> = trace.samples.iter().map(|s| s.pitch).collect();
    let (_, std) = trotlab::experiment::metrics::mean_std(&pitch);
    assert!(std < 1e-3, "std pitch {std}");
}

#[test]
fn tumbles_follow_pitch_and_height_limits() {
    let cfg = ExperimentConfig::default();
    let limp = Mlp::zeros(&[OBSERVATION_DIM, 4, 8], Activation::Relu, Activation::Tanh);
    let ckpt = PolicyCheckpoint::new(PolicyKind::Direct, limp, cfg.clone()).unwrap();
    let script = DisturbanceScript {
        total_time: 3.0,
        seeds: 2,
        ..DisturbanceScript::default()
    };
    let (traces, report) = disturbance_test(&ckpt, &script).unwrap();
    assert_eq!(report.tumbles, 2);
    for t in &traces {
        let limit = t.samples.iter().any(|s| {
            s.pitch.abs() > cfg.episode.pitch_limit || s.height < cfg.episode.height_limit
        });
        assert_eq!(t.tumbled, limit);
        for s in &t.samples {
            let outside = s.pitch.abs() > 1.0 || s.height < 0.3;
            assert_eq!(s.failure, outside, "t = {}", s.t);
        }
    }
    let stance = static_stance_checkpoint();
    let (_, report) = disturbance_test(&stance, &script).unwrap();
    assert_eq!(report.tumbles, 0);
}

#[test]
fn disturbance_files_are_deterministic() {
    let ckpt = static_stance_checkpoint();
    let script = DisturbanceScript {
        total_time: 2.0,
        forces: vec![[0.5, 10.0]],
        seeds: 2,
        ..DisturbanceScript::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (traces, report) = disturbance_test(&ckpt, &script).unwrap();
        write_disturbance(dir.path(), &traces, &report).unwrap();
    }
    for f in [
        "disturb_trace.csv",
        "disturb_trace_seed0.csv",
        "disturbance.json",
    ] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let text = String::from_utf8(read(&a.path().join("disturb_trace.csv"))).unwrap();
    assert!(text.starts_with("t,v,v_d,pitch,height,fx\n"));
    assert_eq!(text.lines().count(), 1 + 200);
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 6));
}

#[test]
fn nominal_trot_is_periodic_at_its_clock() {
    let cfg = ExperimentConfig::default();
    let actor = constant_actor(1, &[0.0; 18]);
    let ckpt = PolicyCheckpoint::new(PolicyKind::HighlyStructured, actor, cfg.clone()).unwrap();
    let period = ckpt.gait_period(2.0).unwrap().unwrap();
    let k_t = cfg.scaling_bounds.k_t.midpoint();
    assert!((period - k_t * cfg.nominal.cycle_period()).abs() < 1e-12);
    let rows = constant_speed_rollout(&ckpt, 2.0, cfg.periodicity.duration, 0).unwrap();
    assert_eq!(rows.len(), 1000);
    let report = periodicity_report(&ckpt, &rows, &cfg.periodicity).unwrap();
    assert!(report.clocked);
    assert!(report.periodic, "score {}", report.score);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbits.csv");
    write_orbits(&path, &rows).unwrap();
    let text = String::from_utf8(read(&path)).unwrap();
    assert!(text.starts_with("t,leg,q_hip,qd_hip,q_knee,qd_knee\n"));
    assert_eq!(text.lines().count(), 1 + 4 * rows.len());
}

#[test]
fn checkpoint_round_trip() {
    let ckpt = static_stance_checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    ckpt.save(&path).unwrap();
    assert_eq!(PolicyCheckpoint::load(&path).unwrap().actor, ckpt.actor);
    let wrong = PolicyCheckpoint::new(PolicyKind::Direct, ckpt.actor.clone(), ckpt.config.clone());
    assert!(wrong.is_err());
}

#[test]
fn shipped_config_is_the_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}
