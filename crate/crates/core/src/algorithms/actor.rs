use crate::error::{Error, Result};
use crate::macdec::MacroId;
use crate::nn::{Gradients, HeadKind, RecurrentNet};

/// `d/d logits` of `-weight * advantage * sum_g log pi_g(m_g)` for the groups
/// with a selected macro.
pub fn policy_logit_grads(
    probs: &[f32],
    groups: &[usize],
    chosen: &[Option<MacroId>],
    advantage: f64,
    weight: f64,
) -> Vec<f32> {
    let mut g = vec![0.0f32; probs.len()];
    let mut start = 0;
    for (gi, &n) in groups.iter().enumerate() {
        if let Some(m) = chosen.get(gi).copied().flatten() {
            let k = (weight * advantage) as f32;
            for j in 0..n {
                let onehot = if j == m { 1.0 } else { 0.0 };
                g[start + j] = -k * (onehot - probs[start + j]);
            }
        }
        start += n;
    }
    g
}

pub(crate) fn policy_groups(net: &RecurrentNet<f32>) -> Result<Vec<usize>> {
    match &net.architecture().head {
        HeadKind::Policy { groups } => Ok(groups.clone()),
        HeadKind::Value => Err(Error::Invalid("actor net has a value head".into())),
    }
}

#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    pub grads: Gradients<f32>,
    /// Mean entropy of the per-group policies at rows with a decision.
    pub entropy: f64,
}

/// Policy-gradient loss `-sum_k w_k A_k sum_g log pi_g(m_kg | h_k)` over one
/// sequence. The advantages are constants.
pub fn actor_loss(
    net: &RecurrentNet<f32>,
    inputs: &[Vec<f32>],
    chosen: &[Vec<Option<MacroId>>],
    advantages: &[f64],
    weights: &[f64],
) -> Result<ActorLoss> {
    let k = inputs.len();
    for (what, len) in [
        ("chosen macros", chosen.len()),
        ("advantages", advantages.len()),
        ("row weights", weights.len()),
    ] {
        if len != k {
            return Err(Error::LengthMismatch {
                what,
                left: k,
                right: len,
            });
        }
    }
    let groups = policy_groups(net)?;
    let out = net.forward_sequence(inputs, &net.initial_hidden())?;
    let mut loss = 0.0;
    let mut entropy = 0.0;
    let mut decisions = 0usize;
    let mut dlogits = Vec::with_capacity(k);
    let mut masks = Vec::with_capacity(k);
    for row in 0..k {
        let probs = &out.outputs[row];
        dlogits.push(policy_logit_grads(
            probs,
            &groups,
            &chosen[row],
            advantages[row],
            weights[row],
        ));
        let mut any = false;
        let mut start = 0;
        for (gi, &n) in groups.iter().enumerate() {
            if let Some(m) = chosen[row].get(gi).copied().flatten() {
                any = true;
                loss -= weights[row] * advantages[row] * (probs[start + m] as f64).max(1e-30).ln();
                entropy -= probs[start..start + n]
                    .iter()
                    .map(|&p| {
                        let p = p as f64;
                        if p > 0.0 {
                            p * p.ln()
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>();
                decisions += 1;
            }
            start += n;
        }
        masks.push(if any { 1.0 } else { 0.0 });
    }
    let grads = net.backward_sequence(&out.cache, &dlogits, &masks)?;
    Ok(ActorLoss {
        loss,
        grads,
        entropy: if decisions > 0 {
            entropy / decisions as f64
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, LayerSizes};

    #[test]
    fn zero_advantage_gives_zero_gradient() {
        let net = RecurrentNet::<f32>::new(
            Architecture::new(LayerSizes::decentralized(3), HeadKind::policy(3)),
            &mut rand_chacha::ChaCha8Rng::from_seed_u64(1),
        );
        let l = actor_loss(
            &net,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            &[vec![Some(0)], vec![Some(2)]],
            &[0.0, 0.0],
            &[0.5, 0.5],
        )
        .unwrap();
        assert!(l.grads.values.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn uniform_single_row_score() {
        let g = policy_logit_grads(&[1.0 / 3.0; 3], &[3], &[Some(1)], 1.0, 1.0);
        // d(-log pi_1)/d logits = pi - onehot(1)
        let expect = [1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn row_mismatch_is_an_error() {
        let net = RecurrentNet::<f32>::zeros(Architecture::new(
            LayerSizes::decentralized(2),
            HeadKind::policy(2),
        ));
        assert!(actor_loss(&net, &[vec![0.0, 0.0]], &[], &[1.0], &[1.0]).is_err());
    }

    trait FromSeed {
        fn from_seed_u64(s: u64) -> Self;
    }

    impl FromSeed for rand_chacha::ChaCha8Rng {
        fn from_seed_u64(s: u64) -> Self {
            <Self as rand::SeedableRng>::seed_from_u64(s)
        }
    }
}
