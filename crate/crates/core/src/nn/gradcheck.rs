//! Central finite-difference verification of [`RecurrentNet::backward_sequence`],
//! run on the 64-bit instantiation of the network.

use super::net::{grouped_softmax, HeadKind, RecurrentNet, SequenceOutput};
use crate::error::Result;

/// Floor for the denominator of the relative error so that parameters with
/// (numerically) zero gradient are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Scalar loss over a sequence of head outputs with its gradient w.r.t. the logits.
pub trait SequenceLoss {
    fn value(&self, out: &SequenceOutput<f64>) -> f64;
    fn logit_grads(&self, out: &SequenceOutput<f64>) -> Vec<Vec<f64>>;
}

/// `sum_t mask_t * sum_j w_tj * p_tj` over softmax probabilities, or
/// `sum_t mask_t * (v_t - y_t)^2` for a value head.
#[derive(Debug, Clone)]
pub struct RandomLoss {
    pub head: HeadKind,
    pub weights: Vec<Vec<f64>>,
    pub masks: Vec<f64>,
}

impl SequenceLoss for RandomLoss {
    fn value(&self, out: &SequenceOutput<f64>) -> f64 {
        out.outputs
            .iter()
            .zip(&self.weights)
            .zip(&self.masks)
            .map(|((o, w), m)| {
                let per_step: f64 = match self.head {
                    HeadKind::Value => (o[0] - w[0]).powi(2),
                    HeadKind::Policy { .. } => o.iter().zip(w).map(|(p, w)| p * w).sum(),
                };
                m * per_step
            })
            .sum()
    }

    fn logit_grads(&self, out: &SequenceOutput<f64>) -> Vec<Vec<f64>> {
        out.logits
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| match &self.head {
                HeadKind::Value => vec![2.0 * (l[0] - w[0])],
                HeadKind::Policy { groups } => {
                    let p = grouped_softmax(l, groups);
                    let mut g = vec![0.0; l.len()];
                    let mut start = 0;
                    for &n in groups {
                        let dot: f64 = (start..start + n).map(|j| p[j] * w[j]).sum();
                        for j in start..start + n {
                            g[j] = p[j] * (w[j] - dot);
                        }
                        start += n;
                    }
                    g
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst_param: String,
    /// Parameters whose perturbation moved a LeakyReLU unit across its kink;
    /// central differences are not meaningful there and they are excluded.
    pub kinked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(REL_ERROR_FLOOR)
}

fn kink_pattern(out: &SequenceOutput<f64>) -> Vec<bool> {
    out.cache.leaky_preactivations().map(|&a| a > 0.0).collect()
}

pub fn check_gradients(
    net: &RecurrentNet<f64>,
    inputs: &[Vec<f64>],
    loss: &RandomLoss,
    h: f64,
) -> Result<GradCheckReport> {
    let h0 = net.initial_hidden();
    let base = net.forward_sequence(inputs, &h0)?;
    let analytic = net.backward_sequence(&base.cache, &loss.logit_grads(&base), &loss.masks)?;
    let pattern = kink_pattern(&base);

    let mut probe = net.clone();
    let mut report = GradCheckReport {
        n_params: net.num_params(),
        max_rel_error: 0.0,
        worst_param: String::new(),
        kinked: 0,
    };
    for i in 0..net.num_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let plus = probe.forward_sequence(inputs, &h0)?;
        probe.params_mut()[i] = orig - h;
        let minus = probe.forward_sequence(inputs, &h0)?;
        probe.params_mut()[i] = orig;
        if kink_pattern(&plus) != pattern || kink_pattern(&minus) != pattern {
            report.kinked += 1;
            continue;
        }
        let numeric = (loss.value(&plus) - loss.value(&minus)) / (2.0 * h);
        let err = relative_error(analytic.values[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_param = format!("{}[{}]", net.layout().name_of(i), i);
        }
    }
    Ok(report)
}
