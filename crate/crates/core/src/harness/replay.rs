use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, RunConfig};
use crate::algorithms::Learner;
use crate::buffers::EpisodeLog;
use crate::error::Result;
use crate::macdec::{run_episode, EpisodeOptions, JointPolicy, MacroEnv};

/// Human-readable account of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub lines: Vec<String>,
    pub total_reward: f64,
    pub discounted_return: f64,
    pub length: usize,
    pub terminal: bool,
}

impl Transcript {
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

/// Runs one episode and lists macro selections, completions with their
/// durations, and every nonzero reward.
pub fn replay<E: MacroEnv>(
    env: &mut E,
    policy: &mut dyn JointPolicy,
    seed: u64,
    epsilon: f64,
    gamma: f64,
) -> Result<Transcript> {
    let mut log = EpisodeLog::new(0);
    let opts = EpisodeOptions { epsilon, gamma, seed };
    let summary = run_episode(env, policy, &opts, &mut log)?;
    let n = env.n_agents();
    let name = |i: usize, m: usize| env.macro_actions(i)[m].name.clone();
    let mut lines = Vec::new();
    let mut started = vec![0usize; n];
    let mut fresh = vec![true; n];
    for rec in &log.joint {
        for i in 0..n {
            if fresh[i] {
                lines.push(format!("t={} agent {} starts {}", rec.t, i, name(i, rec.m[i])));
                started[i] = rec.t;
            }
        }
        if rec.r != 0.0 {
            lines.push(format!("t={} reward {:+}", rec.t, rec.r));
        }
        for i in 0..n {
            if rec.terminated[i] {
                lines.push(format!(
                    "t={} agent {} ends {} after {} steps",
                    rec.t,
                    i,
                    name(i, rec.m[i]),
                    rec.t + 1 - started[i]
                ));
            }
        }
        fresh = rec.terminated.clone();
    }
    lines.push(format!(
        "end steps={} total={} discounted={} terminal={}",
        summary.length, summary.total_reward, summary.discounted_return, summary.terminal
    ));
    Ok(Transcript {
        lines,
        total_reward: summary.total_reward,
        discounted_return: summary.discounted_return,
        length: summary.length,
        terminal: summary.terminal,
    })
}

/// [`replay`] of a learner in the environment described by `cfg`.
pub fn replay_learner(cfg: &RunConfig, learner: &Learner, seed: u64, epsilon: f64) -> Result<Transcript> {
    let gamma = cfg.learner.gamma;
    match &cfg.env {
        EnvConfig::BoxPushing { .. } => {
            replay(&mut cfg.env.box_pushing()?, &mut learner.policy(), seed, epsilon, gamma)
        }
        EnvConfig::Warehouse { .. } => {
            replay(&mut cfg.env.warehouse()?, &mut learner.policy(), seed, epsilon, gamma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::boxpushing::{BoxPushing, M_BIG_1, M_BIG_2, M_PUSH};
    use crate::macdec::ScriptedPolicy;

    #[test]
    fn scripted_optimum_shows_big_box_reward() {
        let mut env = BoxPushing::new(8).unwrap();
        let mut policy = ScriptedPolicy::from_plans(vec![
            vec![M_BIG_1, M_PUSH],
            vec![M_BIG_2, M_PUSH],
        ]);
        let t = replay(&mut env, &mut policy, 0, 0.0, 0.95).unwrap();
        assert!(t.terminal);
        assert!(t.lines.iter().any(|l| l.ends_with("reward +300")), "{}", t.text());
        let again = replay(&mut env, &mut policy, 0, 0.0, 0.95).unwrap();
        assert_eq!(again, t);
    }
}
