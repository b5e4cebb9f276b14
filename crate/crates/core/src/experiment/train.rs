use std::fs::File;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::policy::PolicyKind;
use crate::controllers::OBSERVATION_DIM;
use crate::env::Env;
use crate::error::Result;
use crate::experiment::checkpoint::{evaluate, PolicyCheckpoint};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::{CurvePoint, RunMetrics, CURVE_HEADER};
use crate::nn::Mlp;
use crate::rl::{explore_action, EpisodeRecord, OneStepDdpg, ReplayBuffer, Td3, Transition};

pub const BEST_POLICY_FILE: &str = "best_policy.json";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const STATE_FILE: &str = "trainer_state.json";
pub const METRICS_FILE: &str = "metrics.json";

/// Training rng stream; evaluation `i` uses stream `i`, counted from 1.
fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Counters of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub policy: PolicyKind,
    pub seed: u64,
    pub total_steps: u64,
    /// Episodes that ended by failure or timeout.
    pub episodes: u64,
    /// Actor optimization rounds: delayed TD3 actor steps, or one-step
    /// DDPG training calls of `one_step_train_iters` iterations each.
    pub actor_rounds: u64,
    pub best_step: u64,
    pub best_reward: Option<f64>,
    pub wall_time_s: f64,
}

/// Snapshot written after every evaluation: networks with their optimizer
/// moments, replay-buffer position, rng and counters.
#[derive(Serialize)]
struct TrainerState<'a, A> {
    policy: PolicyKind,
    seed: u64,
    step: u64,
    episodes: u64,
    buffer_len: usize,
    buffer_cursor: usize,
    rng: &'a ChaCha8Rng,
    agent: &'a A,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub curve: Vec<CurvePoint>,
    /// Elapsed training time at each curve point.
    pub wall_times: Vec<f64>,
    pub best: PolicyCheckpoint,
    pub summary: TrainSummary,
}

/// Periodic evaluation, curve bookkeeping and best-checkpoint tracking.
struct Monitor<'a> {
    kind: PolicyKind,
    seed: u64,
    config: &'a ExperimentConfig,
    env: Env,
    out: Option<&'a Path>,
    curve_writer: Option<csv::Writer<File>>,
    timing_writer: Option<csv::Writer<File>>,
    curve: Vec<CurvePoint>,
    wall_times: Vec<f64>,
    best: Option<PolicyCheckpoint>,
    start: Instant,
}

impl<'a> Monitor<'a> {
    fn new(
        kind: PolicyKind,
        seed: u64,
        config: &'a ExperimentConfig,
        out: Option<&'a Path>,
    ) -> Result<Self> {
        let (curve_writer, timing_writer) = match out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let mut c = csv::WriterBuilder::new()
                    .has_headers(false)
                    .from_path(dir.join(CURVE_FILE))?;
                c.write_record(CURVE_HEADER)?;
                c.flush()?;
                let mut t = csv::Writer::from_path(dir.join(TIMING_FILE))?;
                t.write_record(["step", "wall_time_s"])?;
                t.flush()?;
                (Some(c), Some(t))
            }
            None => (None, None),
        };
        Ok(Self {
            kind,
            seed,
            config,
            env: Env::new(config.env_setup(kind)?)?,
            out,
            curve_writer,
            timing_writer,
            curve: Vec::new(),
            wall_times: Vec::new(),
            best: None,
            start: Instant::now(),
        })
    }

    /// Evaluates `actor` when `step` completes an evaluation interval and
    /// reports whether it did.
    fn after_step(&mut self, step: u64, actor: &Mlp) -> Result<bool> {
        let eval = &self.config.eval;
        if step == 0 || step % eval.eval_interval != 0 {
            return Ok(false);
        }
        let mut rng = seeded_rng(self.seed, step / eval.eval_interval);
        let noise = if eval.noise_free {
            0.0
        } else {
            self.config.trainer.exploration_noise
        };
        let result = evaluate(&mut self.env, actor, eval.eval_episodes, noise, &mut rng)?;
        let elapsed = self.start.elapsed().as_secs_f64();
        let point = CurvePoint {
            step,
            mean_reward: result.mean,
            std_reward: result.std,
        };
        log::info!(
            "{} seed {} step {step}: reward {:.1} +- {:.1} ({elapsed:.0} s)",
            self.kind,
            self.seed,
            result.mean,
            result.std
        );
        self.curve.push(point);
        self.wall_times.push(elapsed);
        if let Some(w) = &mut self.curve_writer {
            w.serialize(point)?;
            w.flush()?;
        }
        if let Some(w) = &mut self.timing_writer {
            w.write_record([step.to_string(), format!("{elapsed:.3}")])?;
            w.flush()?;
        }
        if self
            .best
            .as_ref()
            .map_or(true, |b| b.mean_reward.map_or(true, |m| result.mean > m))
        {
            let mut ckpt = PolicyCheckpoint::new(self.kind, actor.clone(), self.config.clone())?;
            ckpt.seed = self.seed;
            ckpt.step = step;
            ckpt.mean_reward = Some(result.mean);
            if let Some(dir) = self.out {
                ckpt.save(&dir.join(BEST_POLICY_FILE))?;
            }
            self.best = Some(ckpt);
        }
        Ok(true)
    }

    fn save_state<A: Serialize>(&self, state: &TrainerState<'_, A>) -> Result<()> {
        let Some(dir) = self.out else {
            return Ok(());
        };
        let tmp = dir.join(format!("{STATE_FILE}.tmp"));
        let mut file = std::io::BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer(&mut file, state)?;
        std::io::Write::flush(&mut file)?;
        drop(file);
        std::fs::rename(tmp, dir.join(STATE_FILE))?;
        Ok(())
    }

    fn finish(self, episodes: u64, actor_rounds: u64, final_actor: &Mlp) -> Result<TrainOutcome> {
        let best = match self.best {
            Some(b) => b,
            // shorter than one evaluation interval
            None => {
                let mut ckpt =
                    PolicyCheckpoint::new(self.kind, final_actor.clone(), self.config.clone())?;
                ckpt.seed = self.seed;
                ckpt.step = self.config.trainer.total_steps;
                ckpt
            }
        };
        let summary = TrainSummary {
            policy: self.kind,
            seed: self.seed,
            total_steps: self.config.trainer.total_steps,
            episodes,
            actor_rounds,
            best_step: best.step,
            best_reward: best.mean_reward,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        if let Some(dir) = self.out {
            if self.curve.is_empty() {
                best.save(&dir.join(BEST_POLICY_FILE))?;
            }
            std::fs::write(
                dir.join(SUMMARY_FILE),
                serde_json::to_string_pretty(&summary)?,
            )?;
            if !self.curve.is_empty() {
                let metrics = RunMetrics::from_seed_runs(
                    self.kind,
                    vec![(self.seed, self.curve.clone(), self.wall_times.clone())],
                    self.config.eval.reward_threshold,
                )?;
                std::fs::write(
                    dir.join(METRICS_FILE),
                    serde_json::to_string_pretty(&metrics)?,
                )?;
            }
        }
        Ok(TrainOutcome {
            curve: self.curve,
            wall_times: self.wall_times,
            best,
            summary,
        })
    }
}

/// Trains one policy from scratch: TD3 for the direct and structured
/// policies, one-step DDPG for the trot controller. With `out`, writes the
/// learning curve, timings, best checkpoint, final agent and metrics there.
pub fn train_run(
    kind: PolicyKind,
    seed: u64,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    match kind {
        PolicyKind::HighlyStructured => train_one_step(seed, config, out),
        PolicyKind::Direct | PolicyKind::Structured => train_td3(kind, seed, config, out),
    }
}

fn train_td3(
    kind: PolicyKind,
    seed: u64,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    let tc = &config.trainer;
    let mut rng = seeded_rng(seed, 0);
    let mut env = Env::new(config.env_setup(kind)?)?;
    let mut agent = Td3::new(OBSERVATION_DIM, kind.action_dim(), tc, &mut rng);
    let mut buffer = ReplayBuffer::new(tc.buffer_size);
    let mut monitor = Monitor::new(kind, seed, config, out)?;
    let mut obs = env.reset(&mut rng).to_vec();
    let mut episodes = 0;
    for step in 0..tc.total_steps {
        let action = explore_action(&agent.actor, &obs, tc, step, &mut rng)?;
        let result = env.step(&action, [0.0, 0.0])?;
        let next = result.observation.to_vec();
        buffer.push(Transition {
            state: obs,
            action,
            reward: result.reward,
            next_state: next,
            terminal: result.terminated,
        });
        obs = next;
        if result.terminated || result.truncated {
            episodes += 1;
            obs = env.reset(&mut rng).to_vec();
        }
        if step >= tc.random_steps && buffer.len() >= tc.batch_size {
            for _ in 0..tc.updates_per_step {
                agent.update(&buffer, tc, &mut rng)?;
            }
        }
        if monitor.after_step(step + 1, &agent.actor)? {
            monitor.save_state(&TrainerState {
                policy: kind,
                seed,
                step: step + 1,
                episodes,
                buffer_len: buffer.len(),
                buffer_cursor: buffer.cursor(),
                rng: &rng,
                agent: &agent,
            })?;
        }
    }
    monitor.finish(episodes, agent.actor_updates, &agent.actor)
}

fn train_one_step(
    seed: u64,
    config: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    let kind = PolicyKind::HighlyStructured;
    let tc = &config.trainer;
    let mut rng = seeded_rng(seed, 0);
    let mut env = Env::new(config.env_setup(kind)?)?;
    let mut agent = OneStepDdpg::new(tc, config.episode.v_d_range, &mut rng);
    let mut buffer = ReplayBuffer::new(tc.buffer_size);
    let mut monitor = Monitor::new(kind, seed, config, out)?;
    let mut step = 0;
    let mut episodes = 0;
    // one action per episode, uniform until `random_steps` environment steps
    while step < tc.total_steps {
        env.reset(&mut rng);
        let v_d = env.v_d();
        let action = explore_action(&agent.actor, &[agent.input(v_d)], tc, step, &mut rng)?;
        let mut total = 0.0;
        let mut finished = false;
        while step < tc.total_steps {
            let result = env.step(&action, [0.0, 0.0])?;
            total += result.reward;
            step += 1;
            if monitor.after_step(step, &agent.actor)? {
                monitor.save_state(&TrainerState {
                    policy: kind,
                    seed,
                    step,
                    episodes,
                    buffer_len: buffer.len(),
                    buffer_cursor: buffer.cursor(),
                    rng: &rng,
                    agent: &agent,
                })?;
            }
            if result.terminated || result.truncated {
                finished = true;
                break;
            }
        }
        if !finished {
            break;
        }
        episodes += 1;
        buffer.push(EpisodeRecord {
            v_d,
            action: action.try_into().expect("scaling action length"),
            cumulative_reward: total,
        });
        agent.train(&buffer, tc, &mut rng)?;
    }
    monitor.finish(episodes, agent.rounds, &agent.actor)
}
