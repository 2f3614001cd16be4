use rand::{Rng, RngCore};

use super::{MacroId, MacroObs};
use crate::error::Result;
use crate::nn::RecurrentNet;

/// Selects macro-actions for the agents whose previous macro terminated.
pub trait JointPolicy {
    /// Clears recurrent state at the start of an episode.
    fn reset(&mut self);

    /// Returns `Some(macro)` for every agent with `choosing[i]` set and `None`
    /// for the others, which keep running their current macro.
    fn choose(
        &mut self,
        obs: &[MacroObs],
        choosing: &[bool],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Option<MacroId>>>;
}

/// `(1 - eps) * p + eps * uniform`.
pub fn mix_epsilon(probs: &[f32], epsilon: f64) -> Vec<f64> {
    let u = 1.0 / probs.len() as f64;
    probs
        .iter()
        .map(|&p| (1.0 - epsilon) * p as f64 + epsilon * u)
        .collect()
}

/// [`mix_epsilon`] for 64-bit probabilities.
pub fn mix_epsilon_f64(probs: &[f64], epsilon: f64) -> Vec<f64> {
    let u = 1.0 / probs.len() as f64;
    probs.iter().map(|&p| (1.0 - epsilon) * p + epsilon * u).collect()
}

/// Inverse-CDF sampling with a single uniform draw.
pub fn sample_index(dist: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// Advances `hidden` with the history input `input` (macro-observation plus
/// previous macro) and samples from the epsilon-mixed softmax policy.
pub fn select_macro(
    net: &RecurrentNet<f32>,
    hidden: &mut Vec<f32>,
    input: &[f32],
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<MacroId> {
    let probs = net.step(input, hidden)?;
    Ok(sample_index(&mix_epsilon(&probs, epsilon), rng))
}

type Script = Box<dyn FnMut(usize, usize, &MacroObs) -> MacroId + Send>;

/// Policy driven by a closure `(agent, decision_index, obs) -> macro`.
pub struct ScriptedPolicy {
    script: Script,
    decisions: Vec<usize>,
}

impl ScriptedPolicy {
    pub fn new(
        n_agents: usize,
        script: impl FnMut(usize, usize, &MacroObs) -> MacroId + Send + 'static,
    ) -> Self {
        ScriptedPolicy {
            script: Box::new(script),
            decisions: vec![0; n_agents],
        }
    }

    /// Agent `i` plays `plans[i][k]` at its k-th decision, repeating the last entry.
    pub fn from_plans(plans: Vec<Vec<MacroId>>) -> Self {
        let n = plans.len();
        Self::new(n, move |agent, k, _| {
            let plan = &plans[agent];
            plan[k.min(plan.len() - 1)]
        })
    }
}

impl JointPolicy for ScriptedPolicy {
    fn reset(&mut self) {
        self.decisions.iter_mut().for_each(|d| *d = 0);
    }

    fn choose(
        &mut self,
        obs: &[MacroObs],
        choosing: &[bool],
        _epsilon: f64,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<Option<MacroId>>> {
        Ok(choosing
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                c.then(|| {
                    let m = (self.script)(i, self.decisions[i], &obs[i]);
                    self.decisions[i] += 1;
                    m
                })
            })
            .collect())
    }
}
