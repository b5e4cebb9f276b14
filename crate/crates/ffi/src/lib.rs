//! C interface to the trotlab simulator, environments and trained policies.
//!
//! Every handle is opaque and owned by the caller once created; release it
//! with the matching `_free` function. Functions return a [`TrotlabStatus`]
//! and write results through out-pointers. After a non-`Ok` status,
//! [`trotlab_last_error`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trotlab::controllers::{PolicyKind, OBSERVATION_DIM};
use trotlab::dynamics::SimState;
use trotlab::env::Env;
use trotlab::experiment::{ExperimentConfig, PolicyCheckpoint};
use trotlab::model::NUM_DOF;
use trotlab::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrotlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFiniteState = 4,
    Io = 5,
    Parse = 6,
    Config = 7,
    Panic = 8,
}

/// Simulated robot with its episode clock and random stream.
pub struct TrotlabEnv {
    env: Env,
    rng: ChaCha8Rng,
}

/// Trained policy loaded from a checkpoint file.
pub struct TrotlabPolicy {
    ckpt: PolicyCheckpoint,
}

/// Outcome of one control step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TrotlabStep {
    pub reward: f64,
    pub com_velocity: f64,
    /// Summed mean mechanical power of the joints (W).
    pub power: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub failure: bool,
}

/// Pose and velocity summary of the body.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TrotlabBodyState {
    pub time: f64,
    pub x: f64,
    pub height: f64,
    pub pitch: f64,
    pub forward_velocity: f64,
}

/// Number of generalized coordinates in `trotlab_env_state`.
pub const TROTLAB_NUM_DOF: usize = 11;
/// Observation length of the direct and structured policies.
pub const TROTLAB_OBSERVATION_DIM: usize = 26;

const _: () = assert!(TROTLAB_NUM_DOF == NUM_DOF && TROTLAB_OBSERVATION_DIM == OBSERVATION_DIM);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TrotlabStatus {
    match err {
        Error::DimensionMismatch { .. } => TrotlabStatus::DimensionMismatch,
        Error::NonFiniteState { .. } => TrotlabStatus::NonFiniteState,
        Error::Io(_) => TrotlabStatus::Io,
        Error::Json(_) | Error::Csv(_) | Error::Toml(_) | Error::Checkpoint(_) => {
            TrotlabStatus::Parse
        }
        Error::Config(_) => TrotlabStatus::Config,
        _ => TrotlabStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (TrotlabStatus, String)>) -> TrotlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TrotlabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TrotlabStatus::Panic
        }
    }
}

fn lib(err: Error) -> (TrotlabStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (TrotlabStatus, String) {
    (TrotlabStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> (TrotlabStatus, String) {
    (TrotlabStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg<'a>(
    ptr: *const c_char,
    name: &str,
) -> Result<&'a Path, (TrotlabStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))?;
    Ok(Path::new(s))
}

unsafe fn out_slice<'a>(
    ptr: *mut f64,
    len: usize,
    needed: usize,
    name: &'static str,
) -> Result<&'a mut [f64], (TrotlabStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    if len < needed {
        return Err(lib(Error::DimensionMismatch {
            context: name,
            expected: needed,
            got: len,
        }));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, needed))
}

fn make_env(config: &ExperimentConfig, kind: PolicyKind, seed: u64) -> Result<TrotlabEnv, Error> {
    let mut env = Env::new(config.env_setup(kind)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    env.reset(&mut rng);
    Ok(TrotlabEnv { env, rng })
}

/// Copies the message of the last failed call on this thread into `buf`,
/// NUL-terminated and truncated to `len` bytes. Returns the full message
/// length excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn trotlab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Action length of a policy kind (0 direct, 1 structured, 2 highly
/// structured), or 0 for an unknown kind.
#[no_mangle]
pub extern "C" fn trotlab_action_dim(kind: u8) -> usize {
    PolicyKind::from_code(kind).map_or(0, PolicyKind::action_dim)
}

/// Creates an environment for `kind` with the default configuration and
/// resets it with a desired speed drawn from `seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_new(
    kind: u8,
    seed: u64,
    out: *mut *mut TrotlabEnv,
) -> TrotlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = PolicyKind::from_code(kind)
            .ok_or_else(|| invalid(format!("unknown policy kind {kind}")))?;
        let env = make_env(&ExperimentConfig::default(), kind, seed).map_err(lib)?;
        *out = Box::into_raw(Box::new(env));
        Ok(())
    })
}

/// Like [`trotlab_env_new`] with the configuration read from a TOML file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_from_config(
    config_path: *const c_char,
    kind: u8,
    seed: u64,
    out: *mut *mut TrotlabEnv,
) -> TrotlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(config_path, "config_path")?;
        let kind = PolicyKind::from_code(kind)
            .ok_or_else(|| invalid(format!("unknown policy kind {kind}")))?;
        let config = ExperimentConfig::load(path).map_err(lib)?;
        let env = make_env(&config, kind, seed).map_err(lib)?;
        *out = Box::into_raw(Box::new(env));
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_free(env: *mut TrotlabEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Restarts the episode at desired speed `v_d` with a fresh initial perturbation.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_reset(env: *mut TrotlabEnv, v_d: f64) -> TrotlabStatus {
    guard(|| {
        let e = env.as_mut().ok_or_else(|| null("env"))?;
        if !(v_d > 0.0) {
            return Err(lib(Error::InvalidDesiredVelocity(v_d)));
        }
        let TrotlabEnv { env, rng } = e;
        env.reset_with(v_d, rng);
        Ok(())
    })
}

/// Changes the desired speed without resetting.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_set_desired_velocity(
    env: *mut TrotlabEnv,
    v_d: f64,
) -> TrotlabStatus {
    guard(|| {
        let e = env.as_mut().ok_or_else(|| null("env"))?;
        e.env.set_desired_velocity(v_d).map_err(lib)
    })
}

/// Advances one control step with a normalized action in `[-1, 1]` and a
/// horizontal force `fx` (N) on the body.
///
/// # Safety
/// `env` must be a live handle, `action` must point to `len` doubles and
/// `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_step(
    env: *mut TrotlabEnv,
    action: *const f64,
    len: usize,
    fx: f64,
    out: *mut TrotlabStep,
) -> TrotlabStatus {
    guard(|| {
        let e = env.as_mut().ok_or_else(|| null("env"))?;
        if action.is_null() {
            return Err(null("action"));
        }
        let action = std::slice::from_raw_parts(action, len);
        let r = e.env.step(action, [fx, 0.0]).map_err(lib)?;
        if r.info.diverged {
            return Err(lib(Error::NonFiniteState {
                time: e.env.state().time,
            }));
        }
        if let Some(out) = out.as_mut() {
            *out = TrotlabStep {
                reward: r.reward,
                com_velocity: r.info.com_velocity,
                power: r.info.power(),
                terminated: r.terminated,
                truncated: r.truncated,
                failure: r.info.failure,
            };
        }
        Ok(())
    })
}

/// Writes the current observation (`TROTLAB_OBSERVATION_DIM` values).
///
/// # Safety
/// `env` must be a live handle and `obs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_observation(
    env: *const TrotlabEnv,
    obs: *mut f64,
    len: usize,
) -> TrotlabStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        let dst = out_slice(obs, len, OBSERVATION_DIM, "observation buffer")?;
        dst.copy_from_slice(&e.env.observation().to_vec());
        Ok(())
    })
}

/// Writes the generalized positions and velocities (`TROTLAB_NUM_DOF` each).
///
/// # Safety
/// `env` must be a live handle; `q` and `qdot` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_state(
    env: *const TrotlabEnv,
    q: *mut f64,
    qdot: *mut f64,
    len: usize,
) -> TrotlabStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        let state: &SimState = e.env.state();
        out_slice(q, len, NUM_DOF, "q")?.copy_from_slice(&state.q);
        out_slice(qdot, len, NUM_DOF, "qdot")?.copy_from_slice(&state.qdot);
        Ok(())
    })
}

/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn trotlab_env_body(
    env: *const TrotlabEnv,
    out: *mut TrotlabBodyState,
) -> TrotlabStatus {
    guard(|| {
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = e.env.state();
        *out = TrotlabBodyState {
            time: s.time,
            x: s.q[0],
            height: s.com_height(),
            pitch: s.pitch(),
            forward_velocity: s.forward_velocity(),
        };
        Ok(())
    })
}

/// Loads a checkpoint written by the trainer.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trotlab_policy_load(
    path: *const c_char,
    out: *mut *mut TrotlabPolicy,
) -> TrotlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ckpt = PolicyCheckpoint::load(path_arg(path, "path")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(TrotlabPolicy { ckpt }));
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trotlab_policy_free(policy: *mut TrotlabPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Policy kind code of a loaded checkpoint, or 255 for a null handle.
///
/// # Safety
/// `policy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trotlab_policy_kind(policy: *const TrotlabPolicy) -> u8 {
    policy.as_ref().map_or(u8::MAX, |p| p.ckpt.kind.code())
}

/// Creates an environment with the checkpoint's own configuration.
///
/// # Safety
/// `policy` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn trotlab_policy_env_new(
    policy: *const TrotlabPolicy,
    seed: u64,
    out: *mut *mut TrotlabEnv,
) -> TrotlabStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let env = make_env(&p.ckpt.config, p.ckpt.kind, seed).map_err(lib)?;
        *out = Box::into_raw(Box::new(env));
        Ok(())
    })
}

/// Writes the policy's noise-free action for the environment's current state.
///
/// # Safety
/// `policy` and `env` must be live handles and `action` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trotlab_policy_act(
    policy: *const TrotlabPolicy,
    env: *const TrotlabEnv,
    action: *mut f64,
    len: usize,
) -> TrotlabStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        if e.env.kind() != p.ckpt.kind {
            return Err(invalid(format!(
                "environment is {} but policy is {}",
                e.env.kind(),
                p.ckpt.kind
            )));
        }
        let a = p.ckpt.action(&e.env).map_err(lib)?;
        out_slice(action, len, a.len(), "action buffer")?.copy_from_slice(&a);
        Ok(())
    })
}
