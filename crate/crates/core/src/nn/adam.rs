//! Adaptive-moment gradient descent with bias correction.

use serde::{Deserialize, Serialize};

use super::net::{Gradients, RecurrentNet};
use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    m: Vec<f32>,
    v: Vec<f32>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
            step_count: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn first_moment(&self) -> &[f32] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f32] {
        &self.v
    }

    /// Applies one descent step `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// Nothing is modified if any gradient component is non-finite.
    pub fn step(&mut self, net: &mut RecurrentNet<f32>, grads: &Gradients<f32>) -> Result<()> {
        if grads.values.len() != net.num_params() || self.m.len() != net.num_params() {
            return Err(Error::Dimension {
                what: "optimizer state",
                expected: net.num_params(),
                actual: grads.values.len(),
            });
        }
        if let Some(i) = grads.values.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(net.layout().name_of(i).to_string()));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for ((p, &g), (m, v)) in net
            .params_mut()
            .iter_mut()
            .zip(&grads.values)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let g = g as f64;
            let m_new = b1 * (*m as f64) + (1.0 - b1) * g;
            let v_new = b2 * (*v as f64) + (1.0 - b2) * g * g;
            *m = m_new as f32;
            *v = v_new as f32;
            let update = self.lr * (m_new / bc1) / ((v_new / bc2).sqrt() + self.eps);
            *p = (*p as f64 - update) as f32;
        }
        Ok(())
    }
}
