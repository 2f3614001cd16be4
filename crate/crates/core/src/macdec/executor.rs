use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{JointPolicy, MacroContext, MacroEnv, MacroHistory, MacroObs};
use crate::buffers::{JointStepRecord, StepRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub epsilon: f64,
    pub gamma: f64,
    /// Seeds both the environment reset and the policy's sampling stream.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub total_reward: f64,
    pub discounted_return: f64,
    pub length: usize,
    /// Ended in a terminal state rather than at the horizon.
    pub terminal: bool,
}

/// Sink for per-step experience.
pub trait Recorder {
    /// One call per primitive step: a record for every agent, the joint record,
    /// and the ground-truth state features before the step.
    fn record(&mut self, agents: Vec<StepRecord>, joint: JointStepRecord, state: Vec<f32>);

    fn finish(&mut self, _final_state: Vec<f32>, _summary: &EpisodeSummary) {}
}

/// Discards everything (evaluation rollouts).
#[derive(Debug, Default)]
pub struct NullRecorder;

impl Recorder for NullRecorder {
    fn record(&mut self, _: Vec<StepRecord>, _: JointStepRecord, _: Vec<f32>) {}
}

/// Runs one episode at the primitive timescale.
///
/// At every step each agent whose macro-action has terminated (all agents at
/// t = 0) receives a new macro from `policy`; the others keep executing their
/// running macro's controller. Macro-observations are refreshed only for agents
/// whose macro terminated at that step.
pub fn run_episode<E: MacroEnv>(
    env: &mut E,
    policy: &mut dyn JointPolicy,
    opts: &EpisodeOptions,
    recorder: &mut dyn Recorder,
) -> Result<EpisodeSummary> {
    if !(0.0..=1.0).contains(&opts.epsilon) {
        return Err(Error::Config(format!("epsilon {} outside [0, 1]", opts.epsilon)));
    }
    env.reset(opts.seed)?;
    policy.reset();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = env.n_agents();
    let horizon = env.horizon();

    let mut obs: Vec<MacroObs> = (0..n).map(|i| env.macro_observation(i)).collect();
    let mut histories: Vec<MacroHistory> = obs
        .iter()
        .map(|z| MacroHistory {
            observations: vec![z.clone()],
            macros: Vec::new(),
        })
        .collect();
    let mut running: Vec<Option<MacroContext>> = vec![None; n];

    let mut summary = EpisodeSummary {
        total_reward: 0.0,
        discounted_return: 0.0,
        length: 0,
        terminal: false,
    };
    let mut discount = 1.0;

    while env.timestep() < horizon {
        let t = env.timestep();
        let choosing: Vec<bool> = running.iter().map(Option::is_none).collect();
        if choosing.iter().any(|&c| c) {
            let picks = policy.choose(&obs, &choosing, opts.epsilon, &mut rng)?;
            for i in (0..n).filter(|&i| choosing[i]) {
                let m = picks.get(i).copied().flatten().ok_or_else(|| {
                    Error::Invalid(format!("policy returned no macro for agent {i} at t = {t}"))
                })?;
                let defs = env.macro_actions(i);
                let def = defs.get(m).ok_or(Error::InvalidAction {
                    agent: i,
                    action: m,
                    limit: defs.len(),
                })?;
                if !def.can_initiate(env, i, &histories[i]) {
                    return Err(Error::InitiationRejected { agent: i, macro_id: m });
                }
                histories[i].macros.push(m);
                running[i] = Some(MacroContext::new(m, t));
            }
        }

        let mut actions = Vec::with_capacity(n);
        for (i, ctx) in running.iter().enumerate() {
            let ctx = ctx.as_ref().expect("every agent runs a macro");
            let a = env.macro_actions(i)[ctx.macro_id].control(env, i, ctx);
            let limit = env.n_primitive_actions(i);
            if a >= limit {
                return Err(Error::InvalidAction {
                    agent: i,
                    action: a,
                    limit,
                });
            }
            actions.push(a);
        }

        let state = env.state_features();
        let outcome = env.step(&actions)?;
        summary.total_reward += outcome.reward;
        summary.discounted_return += discount * outcome.reward;
        summary.length += 1;
        discount *= opts.gamma;

        let mut terminated = vec![false; n];
        for i in 0..n {
            let ctx = running[i].as_mut().expect("every agent runs a macro");
            ctx.actions.push(actions[i]);
            ctx.observations.push(env.primitive_observation(i));
            terminated[i] = env.macro_actions(i)[ctx.macro_id].is_terminated(env, i, ctx);
        }

        let macros: Vec<usize> = running
            .iter()
            .map(|c| c.as_ref().map_or(0, |c| c.macro_id))
            .collect();
        let z_next: Vec<MacroObs> = (0..n)
            .map(|i| {
                if terminated[i] {
                    env.macro_observation(i)
                } else {
                    obs[i].clone()
                }
            })
            .collect();

        let agent_records = (0..n)
            .map(|i| StepRecord {
                t,
                agent: i,
                z: obs[i].clone(),
                m: macros[i],
                r: outcome.reward,
                terminated: terminated[i],
                z_next: z_next[i].clone(),
            })
            .collect();
        let joint = JointStepRecord {
            t,
            z: obs.clone(),
            m: macros,
            r: outcome.reward,
            terminated: terminated.clone(),
            z_next: z_next.clone(),
        };
        recorder.record(agent_records, joint, state);

        for i in 0..n {
            if terminated[i] {
                running[i] = None;
                histories[i].observations.push(z_next[i].clone());
            }
        }
        obs = z_next;

        if outcome.terminal {
            summary.terminal = true;
            break;
        }
    }
    recorder.finish(env.state_features(), &summary);
    Ok(summary)
}
