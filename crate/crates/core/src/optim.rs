//! Adamax and gradient clipping.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TmpnnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamaxConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamaxConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adamax optimizer state: first moment plus exponentially weighted
/// infinity norm of past gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamaxState {
    pub config: AdamaxConfig,
    step_count: u64,
    first_moment: Vec<f64>,
    inf_norm: Vec<f64>,
}

impl AdamaxState {
    pub fn new(n_params: usize, config: AdamaxConfig) -> Self {
        Self {
            config,
            step_count: 0,
            first_moment: vec![0.0; n_params],
            inf_norm: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn inf_norm(&self) -> &[f64] {
        &self.inf_norm
    }

    /// One update with the configured learning rate.
    pub fn step(&mut self, params: &mut [f64], gradient: &[f64]) -> Result<()> {
        self.step_with_lr(params, gradient, self.config.learning_rate)
    }

    /// One update with an explicit learning rate (used when the trainer
    /// lowers it after a divergent batch).
    pub fn step_with_lr(&mut self, params: &mut [f64], gradient: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.first_moment.len() || gradient.len() != params.len() {
            return Err(TmpnnError::DimensionMismatch {
                what: "optimizer parameters",
                expected: self.first_moment.len(),
                found: if params.len() != self.first_moment.len() {
                    params.len()
                } else {
                    gradient.len()
                },
            });
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(TmpnnError::NonFinite("gradient"));
        }
        let AdamaxConfig {
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        self.step_count += 1;
        let bias = 1.0 - beta1.powi(self.step_count.min(i32::MAX as u64) as i32);
        let step = lr / bias;
        for (((p, &g), m), u) in params
            .iter_mut()
            .zip(gradient)
            .zip(self.first_moment.iter_mut())
            .zip(self.inf_norm.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *u = (beta2 * *u).max(g.abs());
            *p -= step * *m / (*u + epsilon);
        }
        Ok(())
    }
}

pub fn adamax_step(state: &mut AdamaxState, params: &mut [f64], gradient: &[f64]) -> Result<()> {
    state.step(params, gradient)
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales `gradient` in place so its Euclidean norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_gradient(gradient: &mut [f64], max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = l2_norm(gradient);
    if norm > max_norm {
        let s = max_norm / norm;
        gradient.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
