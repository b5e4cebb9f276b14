//! Episodic one-step deterministic policy gradient for the trot controller.
//!
//! Each episode contributes a single `(v_d, a, R)` record. The critic
//! regresses the whole-episode return directly, without discounting or
//! bootstrapping, and the actor follows the critic's action gradient.
//! Both networks see the desired speed normalized over its sampling range.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controllers::policy::normalized_speed;
use crate::controllers::trajectory::SCALING_DIM;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Batch, Mlp};
use crate::rl::{EpisodeRecord, ReplayBuffer, TrainerConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneStepStats {
    /// Mean squared error of the last critic iteration, in return units squared.
    pub critic_loss: f64,
    /// Mean predicted return of the actor's actions after the actor phase.
    pub actor_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepDdpg {
    pub actor: Mlp,
    pub critic: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
    return_scale: f64,
    speed_range: [f64; 2],
    /// Completed calls to [`OneStepDdpg::train`].
    pub rounds: u64,
}

impl OneStepDdpg {
    pub fn new<R: Rng + ?Sized>(
        config: &TrainerConfig,
        speed_range: [f64; 2],
        rng: &mut R,
    ) -> Self {
        Self::with_action_dim(SCALING_DIM, config, speed_range, rng)
    }

    pub fn with_action_dim<R: Rng + ?Sized>(
        action_dim: usize,
        config: &TrainerConfig,
        speed_range: [f64; 2],
        rng: &mut R,
    ) -> Self {
        let mut actor_widths = vec![1];
        actor_widths.extend(&config.scaling_actor_hidden);
        actor_widths.push(action_dim);
        let mut critic_widths = vec![1 + action_dim];
        critic_widths.extend(&config.scaling_critic_hidden);
        critic_widths.push(1);
        let actor = Mlp::random(
            &actor_widths,
            Activation::Relu,
            Activation::Tanh,
            config.actor_output_scale,
            rng,
        );
        let critic = Mlp::random(
            &critic_widths,
            Activation::Relu,
            Activation::Identity,
            1.0,
            rng,
        );
        let adam = config.adam();
        Self {
            actor_opt: AdamState::new(&actor, adam),
            critic_opt: AdamState::new(&critic, adam),
            actor,
            critic,
            return_scale: config.return_scale,
            speed_range,
            rounds: 0,
        }
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    /// Actor input for a desired speed.
    pub fn input(&self, v_d: f64) -> f64 {
        normalized_speed(v_d, self.speed_range)
    }

    /// Noise-free action for a desired speed.
    pub fn act(&self, v_d: f64) -> Result<Vec<f64>> {
        self.actor.forward(&[self.input(v_d)])
    }

    /// Predicted episode return of `action` at `v_d`.
    pub fn predict(&self, v_d: f64, action: &[f64]) -> Result<f64> {
        let mut x = Vec::with_capacity(1 + action.len());
        x.push(self.input(v_d));
        x.extend_from_slice(action);
        Ok(self.return_scale * self.critic.forward(&x)?[0])
    }

    /// Draws one batch, then runs `K` critic iterations followed by `K`
    /// actor iterations on it.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<EpisodeRecord>,
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Result<OneStepStats> {
        let batch = self.sample_batch(buffer, config.batch_size, rng)?;
        let mut critic_loss = 0.0;
        for _ in 0..config.one_step_train_iters {
            critic_loss = self.critic_step(&batch)?;
        }
        let mut actor_value = 0.0;
        for _ in 0..config.one_step_train_iters {
            actor_value = self.actor_step(&batch)?;
        }
        self.rounds += 1;
        Ok(OneStepStats {
            critic_loss,
            actor_value,
        })
    }

    /// Uniform batch of records in network units.
    pub fn sample_batch<R: Rng + ?Sized>(
        &self,
        buffer: &ReplayBuffer<EpisodeRecord>,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<RecordBatch> {
        if buffer.is_empty() {
            return Err(Error::BufferEmpty);
        }
        let idx = buffer.sample_indices(batch_size, rng);
        let dim = self.action_dim();
        let mut inputs = Batch::zeros(idx.len(), 1 + dim);
        let mut targets = Vec::with_capacity(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            let rec = buffer.get(i).expect("sampled index is filled");
            check_record(rec, dim)?;
            let r = inputs.row_mut(row);
            r[0] = self.input(rec.v_d);
            r[1..].copy_from_slice(&rec.action[..dim]);
            targets.push(rec.cumulative_reward / self.return_scale);
        }
        Ok(RecordBatch { inputs, targets })
    }

    /// One regression step of the critic; returns the loss in return units squared.
    pub fn critic_step(&mut self, batch: &RecordBatch) -> Result<f64> {
        let cache = self.critic.forward_batch(&batch.inputs)?;
        let q = cache.output();
        let n = q.rows as f64;
        let mut grad = Batch::zeros(q.rows, 1);
        let mut loss = 0.0;
        for i in 0..q.rows {
            let err = q.data[i] - batch.targets[i];
            loss += err * err / n;
            grad.data[i] = 2.0 * err / n;
        }
        let (g, _) = self.critic.backward_cached(&cache, &grad)?;
        self.critic_opt.step(&mut self.critic, &g)?;
        Ok(loss * self.return_scale * self.return_scale)
    }

    /// One deterministic policy-gradient step at the batch's desired speeds;
    /// returns the mean predicted return before the step.
    pub fn actor_step(&mut self, batch: &RecordBatch) -> Result<f64> {
        let states = batch.inputs.columns(0, 1);
        let actor_cache = self.actor.forward_batch(&states)?;
        let sa = states.hcat(actor_cache.output());
        let critic_cache = self.critic.forward_batch(&sa)?;
        let n = states.rows;
        let value = critic_cache.output().data.iter().sum::<f64>() / n as f64;
        let out_grad = Batch::from_vec(n, 1, vec![-1.0 / n as f64; n]);
        let (_, d_input) = self.critic.backward_cached(&critic_cache, &out_grad)?;
        let d_action = d_input.columns(1, self.action_dim());
        let (g, _) = self.actor.backward_cached(&actor_cache, &d_action)?;
        self.actor_opt.step(&mut self.actor, &g)?;
        Ok(value * self.return_scale)
    }
}

/// Critic inputs `(speed, action)` and scaled return targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordBatch {
    pub inputs: Batch,
    pub targets: Vec<f64>,
}

fn check_record(rec: &EpisodeRecord, dim: usize) -> Result<()> {
    if dim > rec.action.len() {
        return Err(Error::DimensionMismatch {
            context: "episode record action",
            expected: dim,
            got: rec.action.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config() -> TrainerConfig {
        TrainerConfig {
            scaling_critic_hidden: vec![32, 32],
            ..TrainerConfig::default()
        }
    }

    #[test]
    fn empty_buffer_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = OneStepDdpg::new(&config(), [1.0, 5.0], &mut rng);
        let buffer = ReplayBuffer::new(10);
        assert!(matches!(
            agent.train(&buffer, &config(), &mut rng),
            Err(Error::BufferEmpty)
        ));
    }

    #[test]
    fn critic_phase_leaves_actor_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = OneStepDdpg::new(&config(), [1.0, 5.0], &mut rng);
        let mut buffer = ReplayBuffer::new(10);
        buffer.push(EpisodeRecord {
            v_d: 2.0,
            action: [0.1; SCALING_DIM],
            cumulative_reward: 300.0,
        });
        let before = agent.actor.clone();
        let batch = agent.sample_batch(&buffer, 100, &mut rng).unwrap();
        for _ in 0..20 {
            agent.critic_step(&batch).unwrap();
        }
        assert_eq!(agent.actor.params(), before.params());
    }

    #[test]
    fn rounds_count_train_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = TrainerConfig {
            one_step_train_iters: 3,
            ..config()
        };
        let mut agent = OneStepDdpg::new(&cfg, [1.0, 5.0], &mut rng);
        let mut buffer = ReplayBuffer::new(10);
        buffer.push(EpisodeRecord {
            v_d: 2.0,
            action: [0.0; SCALING_DIM],
            cumulative_reward: 10.0,
        });
        for _ in 0..4 {
            agent.train(&buffer, &cfg, &mut rng).unwrap();
        }
        assert_eq!(agent.rounds, 4);
        assert_eq!(agent.critic_opt.steps, 12);
        assert_eq!(agent.actor_opt.steps, 12);
    }
}
