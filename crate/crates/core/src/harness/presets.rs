//! Hyperparameter tables as ready-made run configurations.

use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, RunConfig};
use crate::algorithms::{Algorithm, CriticInput, HiddenSizes, LearnerConfig};
use crate::error::{Error, Result};

/// Discount used by every preset.
pub const PRESET_GAMMA: f64 = 0.95;
pub const FULL_EPISODES: usize = 40_000;
pub const FULL_SEEDS: usize = 20;
pub const DESK_EPISODES: usize = 15_000;
pub const DESK_SEEDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Iac,
    Cac,
    MacIac,
    MacCac,
    NaiveMacIacc,
    MacIaicc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Iac,
        Method::Cac,
        Method::MacIac,
        Method::MacCac,
        Method::NaiveMacIacc,
        Method::MacIaicc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Iac => "iac",
            Method::Cac => "cac",
            Method::MacIac => "mac-iac",
            Method::MacCac => "mac-cac",
            Method::NaiveMacIacc => "naive-mac-iacc",
            Method::MacIaicc => "mac-iaicc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            Method::Iac | Method::MacIac => Algorithm::MacIac,
            Method::Cac | Method::MacCac => Algorithm::MacCac,
            Method::NaiveMacIacc => Algorithm::NaiveMacIacc,
            Method::MacIaicc => Algorithm::MacIaicc,
        }
    }

    pub fn primitive(self) -> bool {
        matches!(self, Method::Iac | Method::Cac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Full episode budget and trial count.
    Full,
    /// Reduced budget for a single workstation.
    Desk,
}

/// `(actor lr, critic lr, episodes per train, target period, n-step)`.
type Row = (f64, f64, usize, usize, usize);

/// Columns ordered as [`Method::ALL`].
fn box_pushing_table(size: usize) -> Option<([Row; 6], usize)> {
    let t = match size {
        6 => (
            [
                (0.001, 0.003, 8, 32, 5),
                (0.0005, 0.0005, 8, 64, 5),
                (0.0005, 0.001, 48, 48, 5),
                (0.0003, 0.003, 48, 144, 5),
                (0.0005, 0.001, 48, 144, 0),
                (0.0003, 0.003, 48, 96, 0),
            ],
            4000,
        ),
        8 => (
            [
                (0.001, 0.003, 8, 32, 3),
                (0.001, 0.003, 8, 32, 0),
                (0.001, 0.003, 16, 32, 5),
                (0.0005, 0.003, 48, 48, 3),
                (0.0005, 0.001, 48, 144, 0),
                (0.0003, 0.003, 48, 144, 0),
            ],
            4000,
        ),
        10 => (
            [
                (0.001, 0.003, 8, 64, 0),
                (0.001, 0.003, 8, 32, 0),
                (0.001, 0.001, 32, 32, 5),
                (0.001, 0.003, 48, 96, 3),
                (0.0005, 0.001, 48, 144, 0),
                (0.0003, 0.003, 32, 64, 0),
            ],
            6000,
        ),
        12 => (
            [
                (0.001, 0.003, 8, 128, 0),
                (0.001, 0.003, 8, 128, 0),
                (0.001, 0.003, 8, 64, 5),
                (0.0005, 0.0005, 32, 64, 3),
                (0.0005, 0.001, 48, 96, 0),
                (0.0003, 0.003, 32, 128, 0),
            ],
            6000,
        ),
        14 => (
            [
                (0.001, 0.003, 8, 128, 0),
                (0.001, 0.003, 8, 64, 0),
                (0.001, 0.003, 8, 32, 3),
                (0.001, 0.001, 48, 96, 3),
                (0.001, 0.003, 16, 32, 5),
                (0.0003, 0.003, 32, 64, 0),
            ],
            8000,
        ),
        _ => return None,
    };
    Some(t)
}

/// Warehouse-A columns: mac-iac, mac-cac, naive-mac-iacc, mac-iaicc.
const WAREHOUSE_A: [Row; 4] = [
    (0.0003, 0.003, 4, 32, 5),
    (0.0003, 0.003, 4, 32, 5),
    (0.0003, 0.003, 4, 32, 3),
    (0.0005, 0.0005, 4, 32, 5),
];
const WAREHOUSE_DECAY: usize = 10_000;

fn learner(algorithm: Algorithm, row: Row, decay: usize, critic_input: CriticInput) -> LearnerConfig {
    let (actor_lr, critic_lr, episodes_per_train, target_update_episodes, n_step) = row;
    LearnerConfig {
        algorithm,
        actor_lr,
        critic_lr,
        episodes_per_train,
        target_update_episodes,
        n_step,
        gamma: PRESET_GAMMA,
        eps_start: 1.0,
        eps_end: 0.01,
        eps_decay_episodes: decay,
        critic_input,
        decentralized: HiddenSizes::DECENTRALIZED,
        centralized: HiddenSizes::CENTRALIZED,
    }
}

/// The preset for `env` (`box-pushing` with `size`, or `warehouse`) and `method`.
///
/// Centralized critics of the independent-actor methods see the state in Box
/// Pushing and the joint history in the warehouse.
pub fn preset(env: &str, size: usize, method: Method, scale: Scale) -> Result<RunConfig> {
    let (episodes, n_seeds) = match scale {
        Scale::Full => (FULL_EPISODES, FULL_SEEDS),
        Scale::Desk => (DESK_EPISODES, DESK_SEEDS),
    };
    let (env_cfg, learner_cfg) = match env {
        "box-pushing" => {
            let (rows, decay) = box_pushing_table(size).ok_or_else(|| {
                Error::Config(format!("no box pushing preset for size {size} (6, 8, 10, 12, 14)"))
            })?;
            let col = Method::ALL.iter().position(|&m| m == method).expect("listed");
            (
                EnvConfig::BoxPushing {
                    size,
                    primitive: method.primitive(),
                },
                learner(method.algorithm(), rows[col], decay, CriticInput::State),
            )
        }
        "warehouse" => {
            let col = match method {
                Method::MacIac => 0,
                Method::MacCac => 1,
                Method::NaiveMacIacc => 2,
                Method::MacIaicc => 3,
                Method::Iac | Method::Cac => {
                    return Err(Error::Config(format!(
                        "no warehouse preset for `{}`",
                        method.name()
                    )))
                }
            };
            (
                EnvConfig::Warehouse { scenario: "A".into() },
                learner(
                    method.algorithm(),
                    WAREHOUSE_A[col],
                    WAREHOUSE_DECAY,
                    CriticInput::JointHistory,
                ),
            )
        }
        other => return Err(Error::Config(format!("unknown environment `{other}`"))),
    };
    let cfg = RunConfig {
        episodes,
        eval_period: 100,
        eval_episodes: 10,
        seeds: (0..n_seeds as u64).collect(),
        out_dir: None,
        env: env_cfg,
        learner: learner_cfg,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Every preset as `(file stem, config)`, e.g. `box-pushing-8-mac-iaicc-desk`.
pub fn all_presets() -> Vec<(String, RunConfig)> {
    let mut out = Vec::new();
    for (scale, tag) in [(Scale::Full, "full"), (Scale::Desk, "desk")] {
        for size in [6, 8, 10, 12, 14] {
            for m in Method::ALL {
                let cfg = preset("box-pushing", size, m, scale).expect("table entry");
                out.push((format!("box-pushing-{size}-{}-{tag}", m.name()), cfg));
            }
        }
        for m in [Method::MacIac, Method::MacCac, Method::NaiveMacIacc, Method::MacIaicc] {
            let cfg = preset("warehouse", 0, m, scale).expect("table entry");
            out.push((format!("warehouse-a-{}-{tag}", m.name()), cfg));
        }
    }
    out
}
