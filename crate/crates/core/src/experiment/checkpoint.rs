use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controllers::policy::{normalized_speed, PolicyKind};
use crate::controllers::trajectory::{apply_scaling, ScalingParams};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::mean_std;
use crate::nn::Mlp;

/// A trained actor together with the configuration it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub kind: PolicyKind,
    pub seed: u64,
    /// Training step at which the actor was evaluated.
    pub step: u64,
    /// Mean evaluation return when the checkpoint was saved.
    pub mean_reward: Option<f64>,
    pub actor: Mlp,
    pub config: ExperimentConfig,
}

impl PolicyCheckpoint {
    pub fn new(kind: PolicyKind, actor: Mlp, config: ExperimentConfig) -> Result<Self> {
        if actor.input_dim() != kind.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "checkpoint actor input",
                expected: kind.input_dim(),
                got: actor.input_dim(),
            });
        }
        if actor.output_dim() != kind.action_dim() {
            return Err(Error::DimensionMismatch {
                context: "checkpoint actor output",
                expected: kind.action_dim(),
                got: actor.output_dim(),
            });
        }
        Ok(Self {
            kind,
            seed: 0,
            step: 0,
            mean_reward: None,
            actor,
            config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ckpt: Self = serde_json::from_reader(file)?;
        ckpt.config.validate()?;
        Self::new(ckpt.kind, ckpt.actor.clone(), ckpt.config.clone())?;
        Ok(ckpt)
    }

    pub fn action(&self, env: &Env) -> Result<Vec<f64>> {
        policy_action(self.kind, &self.actor, env)
    }

    /// Gait cycle `k_T (T_st + T_sw)` the trot controller runs at `v_d`;
    /// `None` for policies without a gait clock.
    pub fn gait_period(&self, v_d: f64) -> Result<Option<f64>> {
        if self.kind != PolicyKind::HighlyStructured {
            return Ok(None);
        }
        let cfg = &self.config;
        let a = self
            .actor
            .forward(&[normalized_speed(v_d, cfg.episode.v_d_range)])?;
        let scaling = ScalingParams::from_unit(&cfg.scaling_bounds, &a);
        let params = apply_scaling(&cfg.nominal, &scaling, &cfg.scaling_bounds)?;
        Ok(Some(params.cycle_period()))
    }
}

/// Noise-free action of `actor` in the environment's current situation.
pub fn policy_action(kind: PolicyKind, actor: &Mlp, env: &Env) -> Result<Vec<f64>> {
    match kind {
        PolicyKind::HighlyStructured => {
            actor.forward(&[normalized_speed(env.v_d(), env.setup().episode.v_d_range)])
        }
        PolicyKind::Direct | PolicyKind::Structured => actor.forward(&env.observation().to_vec()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub mean: f64,
    pub std: f64,
    pub returns: Vec<f64>,
}

/// Runs `episodes` episodes with fresh desired speeds and returns the
/// episode returns. `noise`, when positive, perturbs actions as during
/// exploration (once per episode for the trot controller).
pub fn evaluate<R: Rng + ?Sized>(
    env: &mut Env,
    actor: &Mlp,
    episodes: usize,
    noise: f64,
    rng: &mut R,
) -> Result<Evaluation> {
    let kind = env.kind();
    let normal = (noise > 0.0).then(|| Normal::new(0.0, noise).expect("finite noise"));
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset(rng);
        let mut total = 0.0;
        let mut held: Option<Vec<f64>> = None;
        loop {
            let action = match (&held, kind) {
                (Some(a), PolicyKind::HighlyStructured) => a.clone(),
                _ => {
                    let mut a = policy_action(kind, actor, env)?;
                    if let Some(n) = &normal {
                        for v in &mut a {
                            *v = (*v + n.sample(rng)).clamp(-1.0, 1.0);
                        }
                    }
                    held = Some(a.clone());
                    a
                }
            };
            let r = env.step(&action, [0.0, 0.0])?;
            total += r.reward;
            if r.terminated || r.truncated {
                break;
            }
        }
        returns.push(total);
    }
    let (mean, std) = mean_std(&returns);
    Ok(Evaluation { mean, std, returns })
}
