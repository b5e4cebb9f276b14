use std::ffi::{c_char, CString};
use std::ptr;

use trotlab::controllers::PolicyKind;
use trotlab::experiment::{ExperimentConfig, PolicyCheckpoint};
use trotlab::nn::{Activation, Mlp};
use trotlab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { trotlab_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn new_env(kind: u8, seed: u64) -> *mut TrotlabEnv {
    let mut env = ptr::null_mut();
    assert_eq!(
        unsafe { trotlab_env_new(kind, seed, &mut env) },
        TrotlabStatus::Ok
    );
    assert!(!env.is_null());
    env
}

#[test]
fn env_lifecycle_and_step() {
    let env = new_env(1, 0);
    unsafe {
        assert_eq!(trotlab_env_reset(env, 2.0), TrotlabStatus::Ok);
        let dim = trotlab_action_dim(1);
        assert_eq!(dim, 20);
        let action = vec![0.0; dim];
        let mut step = TrotlabStep::default();
        for _ in 0..10 {
            let s = trotlab_env_step(env, action.as_ptr(), dim, 0.0, &mut step);
            assert_eq!(s, TrotlabStatus::Ok);
        }
        assert!(step.reward.is_finite());
        let mut body = TrotlabBodyState::default();
        assert_eq!(trotlab_env_body(env, &mut body), TrotlabStatus::Ok);
        assert!((body.time - 0.1).abs() < 1e-9, "time {}", body.time);
        let mut q = [0.0; TROTLAB_NUM_DOF];
        let mut qd = [0.0; TROTLAB_NUM_DOF];
        assert_eq!(
            trotlab_env_state(env, q.as_mut_ptr(), qd.as_mut_ptr(), TROTLAB_NUM_DOF),
            TrotlabStatus::Ok
        );
        assert_eq!(q[1], body.height);
        let mut obs = [0.0; TROTLAB_OBSERVATION_DIM];
        assert_eq!(
            trotlab_env_observation(env, obs.as_mut_ptr(), obs.len()),
            TrotlabStatus::Ok
        );
        trotlab_env_free(env);
    }
}

#[test]
fn errors_are_reported_with_codes() {
    let env = new_env(0, 0);
    unsafe {
        let short = [0.0; 3];
        let s = trotlab_env_step(env, short.as_ptr(), short.len(), 0.0, ptr::null_mut());
        assert_eq!(s, TrotlabStatus::DimensionMismatch);
        assert!(last_error().contains("expected 8"), "{}", last_error());
        assert_eq!(trotlab_env_reset(env, -1.0), TrotlabStatus::InvalidArgument);
        assert_eq!(
            trotlab_env_step(ptr::null_mut(), short.as_ptr(), 3, 0.0, ptr::null_mut()),
            TrotlabStatus::NullPointer
        );
        let mut obs = [0.0; 4];
        assert_eq!(
            trotlab_env_observation(env, obs.as_mut_ptr(), obs.len()),
            TrotlabStatus::DimensionMismatch
        );
        trotlab_env_free(env);
        trotlab_env_free(ptr::null_mut());

        let mut out = ptr::null_mut();
        assert_eq!(
            trotlab_env_new(7, 0, &mut out),
            TrotlabStatus::InvalidArgument
        );
        assert!(out.is_null());
        assert_eq!(trotlab_action_dim(7), 0);

        let missing = CString::new("/nonexistent/policy.json").unwrap();
        let mut policy = ptr::null_mut();
        assert_eq!(
            trotlab_policy_load(missing.as_ptr(), &mut policy),
            TrotlabStatus::Io
        );
        assert_eq!(trotlab_policy_kind(ptr::null()), u8::MAX);
    }
}

#[test]
fn same_seed_gives_same_rollout() {
    let run = |seed| unsafe {
        let env = new_env(0, seed);
        let action = [0.1; 8];
        let mut rewards = Vec::new();
        let mut step = TrotlabStep::default();
        for _ in 0..50 {
            trotlab_env_step(env, action.as_ptr(), 8, 0.0, &mut step);
            rewards.push(step.reward.to_bits());
        }
        trotlab_env_free(env);
        rewards
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

#[test]
fn loaded_policy_drives_its_env() {
    let cfg = ExperimentConfig::default();
    let actor = Mlp::zeros(&[1, 8, 18], Activation::Tanh, Activation::Tanh);
    let ckpt = PolicyCheckpoint::new(PolicyKind::HighlyStructured, actor, cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    ckpt.save(&path).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut policy = ptr::null_mut();
        assert_eq!(
            trotlab_policy_load(cpath.as_ptr(), &mut policy),
            TrotlabStatus::Ok
        );
        assert_eq!(trotlab_policy_kind(policy), 2);
        let mut env = ptr::null_mut();
        assert_eq!(
            trotlab_policy_env_new(policy, 0, &mut env),
            TrotlabStatus::Ok
        );
        assert_eq!(trotlab_env_reset(env, 2.0), TrotlabStatus::Ok);
        let mut action = [1.0; 18];
        let mut step = TrotlabStep::default();
        for _ in 0..100 {
            assert_eq!(
                trotlab_policy_act(policy, env, action.as_mut_ptr(), 18),
                TrotlabStatus::Ok
            );
            assert_eq!(
                trotlab_env_step(env, action.as_ptr(), 18, 0.0, &mut step),
                TrotlabStatus::Ok
            );
        }
        assert!(action.iter().all(|&a| a == 0.0));
        assert!(!step.failure);

        let other = new_env(0, 0);
        assert_eq!(
            trotlab_policy_act(policy, other, action.as_mut_ptr(), 18),
            TrotlabStatus::InvalidArgument
        );
        trotlab_env_free(other);
        trotlab_env_free(env);
        trotlab_policy_free(policy);
    }
}

/// The generated header compiles as C and as C++.
#[test]
fn header_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/trotlab.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not found, header check skipped"),
        }
    }
}
