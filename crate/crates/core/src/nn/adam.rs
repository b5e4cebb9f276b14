use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one network, laid out like [`Mlp::params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub steps: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self::with_len(net.num_params(), config)
    }

    pub fn with_len(len: usize, config: AdamConfig) -> Self {
        Self {
            config,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            steps: 0,
        }
    }

    /// Bias-corrected Adam update of `params` along `-grads`.
    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::DimensionMismatch {
                context: "adam step",
                expected: self.first_moment.len(),
                got: grads.len(),
            });
        }
        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &[f64]) -> Result<()> {
        self.step_slice(net.params_mut(), grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = [1.0];
        let mut adam = AdamState::with_len(1, AdamConfig::default());
        let grad = [2.0 * w[0]];
        adam.step_slice(&mut w, &grad).unwrap();
        assert!((w[0] - 0.999).abs() < 1e-8);
        assert_eq!(adam.steps, 1);
    }

    #[test]
    fn zero_gradients_leave_params() {
        let mut w = [0.3, -2.0];
        let mut adam = AdamState::with_len(2, AdamConfig::default());
        for _ in 0..50 {
            adam.step_slice(&mut w, &[0.0, 0.0]).unwrap();
        }
        assert_eq!(w, [0.3, -2.0]);
    }

    #[test]
    fn converges_on_quadratic() {
        let mut w = [0.0];
        let mut adam = AdamState::with_len(
            1,
            AdamConfig {
                learning_rate: 0.01,
                ..AdamConfig::default()
            },
        );
        for _ in 0..2000 {
            let g = [2.0 * (w[0] - 3.0)];
            adam.step_slice(&mut w, &g).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 1e-2, "w = {}", w[0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut adam = AdamState::with_len(2, AdamConfig::default());
        assert!(adam.step_slice(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
