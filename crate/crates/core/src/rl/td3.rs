//! Twin-critic, target-smoothed, delayed-actor deterministic policy gradient.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Batch, Mlp};
use crate::rl::{ReplayBuffer, TrainerConfig, Transition};

/// `r` for a terminal transition, else `r + discount * min(q1, q2)`.
pub fn bellman_target(reward: f64, q1: f64, q2: f64, terminal: bool, discount: f64) -> f64 {
    if terminal {
        reward
    } else {
        reward + discount * q1.min(q2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Stats {
    pub critic_loss: f64,
    pub actor_updated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3 {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    actor_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    /// Calls to [`Td3::update`] so far.
    pub updates: u64,
    pub actor_updates: u64,
}

struct Sample {
    state: Batch,
    action: Batch,
    reward: Vec<f64>,
    next_state: Batch,
    terminal: Vec<bool>,
}

fn gather(buffer: &ReplayBuffer<Transition>, indices: &[usize]) -> Sample {
    let rows = |f: &dyn Fn(&Transition) -> &[f64]| {
        let r: Vec<&[f64]> = indices
            .iter()
            .map(|&i| f(buffer.get(i).expect("sampled index is filled")))
            .collect();
        Batch::from_rows(&r)
    };
    Sample {
        state: rows(&|t| &t.state),
        action: rows(&|t| &t.action),
        next_state: rows(&|t| &t.next_state),
        reward: indices
            .iter()
            .map(|&i| buffer.get(i).unwrap().reward)
            .collect(),
        terminal: indices
            .iter()
            .map(|&i| buffer.get(i).unwrap().terminal)
            .collect(),
    }
}

impl Td3 {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Self {
        let mut actor_widths = vec![state_dim];
        actor_widths.extend(&config.hidden);
        actor_widths.push(action_dim);
        let mut critic_widths = vec![state_dim + action_dim];
        critic_widths.extend(&config.hidden);
        critic_widths.push(1);

        let actor = Mlp::random(
            &actor_widths,
            Activation::Relu,
            Activation::Tanh,
            config.actor_output_scale,
            rng,
        );
        let critic1 = Mlp::random(
            &critic_widths,
            Activation::Relu,
            Activation::Identity,
            1.0,
            rng,
        );
        let critic2 = Mlp::random(
            &critic_widths,
            Activation::Relu,
            Activation::Identity,
            1.0,
            rng,
        );
        let adam = config.adam();
        Self {
            actor_opt: AdamState::new(&actor, config.adam()),
            critic1_opt: AdamState::new(&critic1, adam),
            critic2_opt: AdamState::new(&critic2, adam),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            updates: 0,
            actor_updates: 0,
        }
    }

    /// Smoothed target action: target actor plus clipped noise, kept in the box.
    fn target_actions<R: Rng + ?Sized>(
        &self,
        next_state: &Batch,
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Result<Batch> {
        let mut a = self
            .actor_target
            .forward_batch(next_state)?
            .output()
            .clone();
        if config.target_policy_noise > 0.0 {
            let noise = Normal::new(0.0, config.target_policy_noise).expect("finite noise");
            let clip = config.target_noise_clip;
            for v in &mut a.data {
                *v += noise.sample(rng).clamp(-clip, clip);
            }
        }
        for v in &mut a.data {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(a)
    }

    fn targets<R: Rng + ?Sized>(
        &self,
        next_state: &Batch,
        reward: &[f64],
        terminal: &[bool],
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let a = self.target_actions(next_state, config, rng)?;
        let sa = next_state.hcat(&a);
        let q1 = self.critic1_target.forward_batch(&sa)?;
        let q2 = self.critic2_target.forward_batch(&sa)?;
        Ok((0..reward.len())
            .map(|i| {
                bellman_target(
                    reward[i],
                    q1.output().data[i],
                    q2.output().data[i],
                    terminal[i],
                    config.discount,
                )
            })
            .collect())
    }

    /// Bootstrapped regression target of a single transition.
    pub fn td3_target<R: Rng + ?Sized>(
        &self,
        reward: f64,
        next_state: &[f64],
        terminal: bool,
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Result<f64> {
        if terminal {
            return Ok(reward);
        }
        let s = Batch::from_rows(&[next_state]);
        Ok(self.targets(&s, &[reward], &[terminal], config, rng)?[0])
    }

    /// One critic regression step on a uniform batch; every `policy_delay`
    /// calls also one actor step and a Polyak update of all targets.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<Transition>,
        config: &TrainerConfig,
        rng: &mut R,
    ) -> Result<Td3Stats> {
        if buffer.len() < config.batch_size {
            return Err(Error::BufferTooSmall {
                size: buffer.len(),
                needed: config.batch_size,
            });
        }
        let idx = buffer.sample_indices(config.batch_size, rng);
        let batch = gather(buffer, &idx);
        let y = self.targets(
            &batch.next_state,
            &batch.reward,
            &batch.terminal,
            config,
            rng,
        )?;
        let sa = batch.state.hcat(&batch.action);
        let n = idx.len() as f64;

        let mut critic_loss = 0.0;
        for (critic, opt) in [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ] {
            let cache = critic.forward_batch(&sa)?;
            let q = cache.output();
            let mut grad = Batch::zeros(q.rows, 1);
            for i in 0..q.rows {
                let err = q.data[i] - y[i];
                critic_loss += err * err / n;
                grad.data[i] = 2.0 * err / n;
            }
            let (g, _) = critic.backward_cached(&cache, &grad)?;
            opt.step(critic, &g)?;
        }
        self.updates += 1;

        let actor_updated = self.updates % config.policy_delay == 0;
        if actor_updated {
            self.actor_step(&batch.state)?;
            self.actor_target.polyak_update(&self.actor, config.tau)?;
            self.critic1_target
                .polyak_update(&self.critic1, config.tau)?;
            self.critic2_target
                .polyak_update(&self.critic2, config.tau)?;
        }
        Ok(Td3Stats {
            critic_loss: critic_loss / 2.0,
            actor_updated,
        })
    }

    /// Ascends `mean Q1(s, actor(s))`.
    fn actor_step(&mut self, state: &Batch) -> Result<()> {
        let actor_cache = self.actor.forward_batch(state)?;
        let sa = state.hcat(actor_cache.output());
        let critic_cache = self.critic1.forward_batch(&sa)?;
        let n = state.rows;
        let out_grad = Batch::from_vec(n, 1, vec![-1.0 / n as f64; n]);
        let (_, d_input) = self.critic1.backward_cached(&critic_cache, &out_grad)?;
        let d_action = d_input.columns(state.cols, self.actor.output_dim());
        let (g, _) = self.actor.backward_cached(&actor_cache, &d_action)?;
        self.actor_opt.step(&mut self.actor, &g)?;
        self.actor_updates += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::OBSERVATION_DIM;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> TrainerConfig {
        TrainerConfig {
            hidden: vec![32, 32],
            batch_size: 16,
            ..TrainerConfig::default()
        }
    }

    fn filled_buffer(n: usize, rng: &mut ChaCha8Rng) -> ReplayBuffer<Transition> {
        let mut b = ReplayBuffer::new(n);
        for _ in 0..n {
            let state = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let next_state = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let action = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            b.push(Transition {
                reward: action[0] - state[0],
                state,
                action,
                next_state,
                terminal: rng.gen_bool(0.1),
            });
        }
        b
    }

    #[test]
    fn bellman_arithmetic() {
        assert_eq!(bellman_target(0.7, 123.0, -55.0, true, 0.99), 0.7);
        assert!((bellman_target(1.0, 10.0, 8.0, false, 0.99) - 8.92).abs() < 1e-12);
        assert_eq!(bellman_target(1.0, 4.0, 4.0, false, 0.5), 3.0);
    }

    #[test]
    fn terminal_target_ignores_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let agent = Td3::new(OBSERVATION_DIM, 2, &small_config(), &mut rng);
        let y = agent
            .td3_target(
                0.7,
                &[0.3; OBSERVATION_DIM],
                true,
                &small_config(),
                &mut rng,
            )
            .unwrap();
        assert_eq!(y, 0.7);
    }

    #[test]
    fn target_uses_smaller_critic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = TrainerConfig {
            target_policy_noise: 0.0,
            ..small_config()
        };
        let mut agent = Td3::new(OBSERVATION_DIM, 2, &cfg, &mut rng);
        // constant critics: only the output bias is non-zero
        for (net, value) in [
            (&mut agent.critic1_target, 10.0),
            (&mut agent.critic2_target, 8.0),
        ] {
            net.params_mut().iter_mut().for_each(|p| *p = 0.0);
            let last = net.shapes().len() - 1;
            net.bias_mut(last)[0] = value;
        }
        let y = agent
            .td3_target(1.0, &[0.0; OBSERVATION_DIM], false, &cfg, &mut rng)
            .unwrap();
        assert!((y - 8.92).abs() < 1e-12);
    }

    #[test]
    fn actor_updates_are_delayed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = small_config();
        let buffer = filled_buffer(64, &mut rng);
        let mut agent = Td3::new(OBSERVATION_DIM, 2, &cfg, &mut rng);
        for _ in 0..10 {
            agent.update(&buffer, &cfg, &mut rng).unwrap();
        }
        assert_eq!(agent.updates, 10);
        assert_eq!(agent.actor_updates, 5);
    }

    #[test]
    fn small_buffer_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = small_config();
        let buffer = filled_buffer(8, &mut rng);
        let mut agent = Td3::new(OBSERVATION_DIM, 2, &cfg, &mut rng);
        assert!(matches!(
            agent.update(&buffer, &cfg, &mut rng),
            Err(Error::BufferTooSmall {
                size: 8,
                needed: 16
            })
        ));
    }
}
