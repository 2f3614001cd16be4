//! The four macro-action actor-critic learners.

mod actor;
mod encode;
mod learner;
mod td;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::LayerSizes;

pub use actor::{actor_loss, policy_logit_grads, ActorLoss};
pub use encode::EnvDims;
pub use learner::{ActingPolicy, Learner, RoundReport};
pub use td::td_targets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Independent actors, each with a critic over its own macro-history.
    MacIac,
    /// A centralized joint actor and critic over the joint history.
    MacCac,
    /// Independent actors sharing one centralized critic trained on joint
    /// terminations.
    NaiveMacIacc,
    /// Independent actors, each with an individual centralized critic trained
    /// at its own terminations.
    MacIaicc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::MacIac,
        Algorithm::MacCac,
        Algorithm::NaiveMacIacc,
        Algorithm::MacIaicc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MacIac => "mac-iac",
            Algorithm::MacCac => "mac-cac",
            Algorithm::NaiveMacIacc => "naive-mac-iacc",
            Algorithm::MacIaicc => "mac-iaicc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }

    /// Uses the configurable centralized critic input.
    pub fn has_centralized_critic_input(self) -> bool {
        matches!(self, Algorithm::NaiveMacIacc | Algorithm::MacIaicc)
    }
}

/// What a centralized critic conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticInput {
    JointHistory,
    State,
    Both,
}

/// Hidden widths of one network family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenSizes {
    pub fc1: usize,
    pub fc2: usize,
    pub gru: usize,
    pub fc3: usize,
}

impl HiddenSizes {
    pub const DECENTRALIZED: HiddenSizes = HiddenSizes {
        fc1: 32,
        fc2: 32,
        gru: 32,
        fc3: 32,
    };
    pub const CENTRALIZED: HiddenSizes = HiddenSizes {
        fc1: 32,
        fc2: 32,
        gru: 64,
        fc3: 32,
    };

    pub fn with_input(self, input: usize) -> LayerSizes {
        LayerSizes {
            input,
            fc1: self.fc1,
            fc2: self.fc2,
            gru: self.gru,
            fc3: self.fc3,
        }
    }
}

fn default_dec() -> HiddenSizes {
    HiddenSizes::DECENTRALIZED
}

fn default_cen() -> HiddenSizes {
    HiddenSizes::CENTRALIZED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Episodes collected per training round.
    pub episodes_per_train: usize,
    /// Episodes between target-critic synchronizations.
    pub target_update_episodes: usize,
    /// N-step TD horizon over squeezed rows; 0 and 1 are both one-step.
    pub n_step: usize,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_episodes: usize,
    pub critic_input: CriticInput,
    #[serde(default = "default_dec")]
    pub decentralized: HiddenSizes,
    #[serde(default = "default_cen")]
    pub centralized: HiddenSizes,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if self.episodes_per_train == 0 || self.target_update_episodes == 0 {
            return bad("episodes per train and target update period must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.eps_start) || !unit.contains(&self.eps_end) || self.eps_end > self.eps_start {
            return bad(format!(
                "epsilon schedule {} -> {} invalid",
                self.eps_start, self.eps_end
            ));
        }
        Ok(())
    }

    /// Linear decay from `eps_start` to `eps_end` over `eps_decay_episodes`.
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.eps_decay_episodes == 0 || episode >= self.eps_decay_episodes {
            return self.eps_end;
        }
        let frac = episode as f64 / self.eps_decay_episodes as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}
