use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::nn::Mlp;
use crate::rl::TrainerConfig;

/// Uniform over the action box during the first `random_steps` steps,
/// afterwards the actor output plus Gaussian noise, clipped to the box.
pub fn explore_action<R: Rng + ?Sized>(
    actor: &Mlp,
    input: &[f64],
    config: &TrainerConfig,
    step_index: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if step_index < config.random_steps {
        return Ok((0..actor.output_dim())
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect());
    }
    let mut a = actor.forward(input)?;
    if config.exploration_noise > 0.0 {
        let noise = Normal::new(0.0, config.exploration_noise).expect("finite noise");
        for v in &mut a {
            *v += noise.sample(rng);
        }
    }
    for v in &mut a {
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn actor() -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        Mlp::random(
            &[3, 8, 4],
            Activation::Relu,
            Activation::Tanh,
            1.0,
            &mut rng,
        )
    }

    #[test]
    fn random_phase_is_uniform() {
        let cfg = TrainerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = actor();
        let n = 100_000;
        let mut sum = [0.0; 4];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..n / 4 {
            let a = explore_action(&net, &[0.1, 0.2, 0.3], &cfg, 0, &mut rng).unwrap();
            for (s, v) in sum.iter_mut().zip(&a) {
                *s += v;
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        for s in sum {
            assert!((s / (n / 4) as f64).abs() < 0.02);
        }
        assert!(lo >= -1.0 && lo < -0.999);
        assert!(hi <= 1.0 && hi > 0.999);
    }

    #[test]
    fn zero_noise_returns_actor_output() {
        let cfg = TrainerConfig {
            exploration_noise: 0.0,
            ..TrainerConfig::default()
        };
        let net = actor();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = [0.4, -0.1, 2.0];
        let a = explore_action(&net, &x, &cfg, cfg.random_steps, &mut rng).unwrap();
        assert_eq!(a, net.forward(&x).unwrap());
    }

    #[test]
    fn never_leaves_box() {
        let cfg = TrainerConfig {
            exploration_noise: 2.0,
            random_steps: 0,
            ..TrainerConfig::default()
        };
        let net = actor();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for i in 0..250_000 {
            let a = explore_action(&net, &[1.0, 0.0, -1.0], &cfg, i, &mut rng).unwrap();
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}
