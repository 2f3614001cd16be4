use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::actor::{actor_loss, policy_groups};
use super::encode::EnvDims;
use super::td::td_targets;
use super::{Algorithm, CriticInput, LearnerConfig};
use crate::buffers::{squeeze_agent, squeeze_iaicc, squeeze_joint, EpisodeLog, JointSqueezedTransition};
use crate::error::{Error, Result};
use crate::macdec::{mix_epsilon, sample_index, JointPolicy, MacroId, MacroObs};
use crate::nn::{target_sync, Adam, Architecture, Checkpoint, Gradients, HeadKind, RecurrentNet};

/// Per-round training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    /// Policy version after the round.
    pub version: u64,
    pub episodes: usize,
    /// Mean absolute TD error over all critic rows, before the critic step.
    pub mean_abs_td: f64,
    pub critic_loss: Vec<f64>,
    pub critic_grad_norm: Vec<f64>,
    pub actor_loss: Vec<f64>,
    pub actor_entropy: Vec<f64>,
    pub actor_grad_norm: Vec<f64>,
    /// Gradient applied to each critic.
    #[serde(skip)]
    pub critic_grads: Vec<Gradients<f32>>,
    /// Gradient applied to each actor.
    #[serde(skip)]
    pub actor_grads: Vec<Gradients<f32>>,
}

struct TdRow {
    /// Input index where the live critic is evaluated.
    pos: usize,
    /// Input index where the target critic bootstraps.
    next: usize,
    reward: f64,
    tau: usize,
}

struct CriticTask {
    critic: usize,
    inputs: Vec<Vec<f32>>,
    rows: Vec<TdRow>,
    last_terminal: bool,
}

struct ActorTask {
    actor: usize,
    inputs: Vec<Vec<f32>>,
    chosen: Vec<Vec<Option<MacroId>>>,
    /// `(critic task, td row)` supplying each row's advantage.
    advantage: Vec<(usize, usize)>,
}

/// One learner instance: actors, critics, target critics and their optimizers.
#[derive(Debug, Clone)]
pub struct Learner {
    cfg: LearnerConfig,
    dims: EnvDims,
    actors: Vec<RecurrentNet<f32>>,
    actor_opts: Vec<Adam>,
    critics: Vec<RecurrentNet<f32>>,
    critic_opts: Vec<Adam>,
    targets: Vec<RecurrentNet<f32>>,
    version: u64,
}

impl Learner {
    /// Architectures of the actors and critics, in creation order.
    pub fn architectures(cfg: &LearnerConfig, dims: &EnvDims) -> (Vec<Architecture>, Vec<Architecture>) {
        let n = dims.n_agents();
        let dec = cfg.decentralized;
        let cen = cfg.centralized;
        let local_actor =
            |i: usize| Architecture::new(dec.with_input(dims.local_dim(i)), HeadKind::policy(dims.macros[i]));
        let critic_dim = match cfg.critic_input {
            CriticInput::JointHistory => dims.joint_dim(),
            CriticInput::State => dims.state,
            CriticInput::Both => dims.joint_dim() + dims.state,
        };
        let central_critic = || Architecture::new(cen.with_input(critic_dim), HeadKind::Value);
        match cfg.algorithm {
            Algorithm::MacIac => (
                (0..n).map(local_actor).collect(),
                (0..n)
                    .map(|i| Architecture::new(dec.with_input(dims.local_dim(i)), HeadKind::Value))
                    .collect(),
            ),
            Algorithm::MacCac => (
                vec![Architecture::new(
                    cen.with_input(dims.joint_dim()),
                    HeadKind::Policy {
                        groups: dims.macros.clone(),
                    },
                )],
                vec![Architecture::new(cen.with_input(dims.joint_dim()), HeadKind::Value)],
            ),
            Algorithm::NaiveMacIacc => ((0..n).map(local_actor).collect(), vec![central_critic()]),
            Algorithm::MacIaicc => (
                (0..n).map(local_actor).collect(),
                (0..n).map(|_| central_critic()).collect(),
            ),
        }
    }

    /// Fresh networks drawn from `seed`: actors first, then critics.
    pub fn new(cfg: LearnerConfig, dims: EnvDims, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if dims.n_agents() == 0 {
            return Err(Error::Config("environment has no agents".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (actor_archs, critic_archs) = Self::architectures(&cfg, &dims);
        let actors: Vec<_> = actor_archs.into_iter().map(|a| RecurrentNet::new(a, &mut rng)).collect();
        let critics: Vec<_> = critic_archs.into_iter().map(|a| RecurrentNet::new(a, &mut rng)).collect();
        Ok(Self::assemble(cfg, dims, actors, critics, 0))
    }

    fn assemble(
        cfg: LearnerConfig,
        dims: EnvDims,
        actors: Vec<RecurrentNet<f32>>,
        critics: Vec<RecurrentNet<f32>>,
        version: u64,
    ) -> Self {
        Learner {
            actor_opts: actors.iter().map(|n| Adam::new(cfg.actor_lr, n.num_params())).collect(),
            critic_opts: critics.iter().map(|n| Adam::new(cfg.critic_lr, n.num_params())).collect(),
            targets: critics.iter().map(target_sync).collect(),
            cfg,
            dims,
            actors,
            critics,
            version,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn dims(&self) -> &EnvDims {
        &self.dims
    }

    /// Number of completed training rounds; episodes must carry this tag.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn actors(&self) -> &[RecurrentNet<f32>] {
        &self.actors
    }

    pub fn actors_mut(&mut self) -> &mut [RecurrentNet<f32>] {
        &mut self.actors
    }

    pub fn critics(&self) -> &[RecurrentNet<f32>] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [RecurrentNet<f32>] {
        &mut self.critics
    }

    pub fn targets(&self) -> &[RecurrentNet<f32>] {
        &self.targets
    }

    pub fn sync_targets(&mut self) {
        self.targets = self.critics.iter().map(target_sync).collect();
    }

    /// Acting policy over the current actors; sampling never changes the learner.
    pub fn policy(&self) -> ActingPolicy<'_> {
        ActingPolicy::new(self)
    }

    pub fn to_checkpoint(&self, config_hash: &str) -> Checkpoint {
        let mut ck = Checkpoint::new(config_hash);
        for (i, n) in self.actors.iter().enumerate() {
            ck.push_net(&format!("actor{i}"), n);
        }
        for (i, n) in self.critics.iter().enumerate() {
            ck.push_net(&format!("critic{i}"), n);
        }
        for (i, n) in self.targets.iter().enumerate() {
            ck.push_net(&format!("target{i}"), n);
        }
        ck.meta.extra = serde_json::json!({
            "algorithm": self.cfg.algorithm.name(),
            "version": self.version,
        });
        ck
    }

    /// Rebuilds a learner from checkpointed networks; optimizer moments restart.
    pub fn from_checkpoint(cfg: LearnerConfig, dims: EnvDims, ck: &Checkpoint) -> Result<Self> {
        cfg.validate()?;
        let (actor_archs, critic_archs) = Self::architectures(&cfg, &dims);
        let load = |prefix: &str, archs: &[Architecture]| -> Result<Vec<RecurrentNet<f32>>> {
            archs
                .iter()
                .enumerate()
                .map(|(i, arch)| {
                    let net = ck.net(&format!("{prefix}{i}"))?;
                    if net.architecture() != arch {
                        return Err(Error::Checkpoint(format!(
                            "{prefix}{i} architecture does not match the configured environment and algorithm"
                        )));
                    }
                    Ok(net)
                })
                .collect()
        };
        let actors = load("actor", &actor_archs)?;
        let critics = load("critic", &critic_archs)?;
        let targets = load("target", &critic_archs)?;
        let version = ck.meta.extra.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        let mut learner = Self::assemble(cfg, dims, actors, critics, version);
        learner.targets = targets;
        Ok(learner)
    }

    fn critic_sequence(&self, ep: &EpisodeLog, rows: &[JointSqueezedTransition]) -> Vec<Vec<f32>> {
        match self.cfg.critic_input {
            CriticInput::JointHistory => self.dims.joint_sequence(rows),
            CriticInput::State => EnvDims::state_sequence(&ep.states, rows),
            CriticInput::Both => self
                .dims
                .joint_sequence(rows)
                .into_iter()
                .zip(EnvDims::state_sequence(&ep.states, rows))
                .map(|(mut j, s)| {
                    j.extend(s);
                    j
                })
                .collect(),
        }
    }

    fn build_tasks(
        &self,
        ep: &EpisodeLog,
        critics: &mut Vec<CriticTask>,
        actors: &mut Vec<ActorTask>,
    ) -> Result<()> {
        let g = self.cfg.gamma;
        let end = ep.end();
        let n = self.dims.n_agents();
        if ep.n_agents() != n {
            return Err(Error::Dimension {
                what: "agents in episode",
                expected: n,
                actual: ep.n_agents(),
            });
        }
        if ep.is_empty() {
            return Ok(());
        }
        let successive = |k_len: usize| (0..k_len).map(|k| (k, k + 1));
        match self.cfg.algorithm {
            Algorithm::MacIac => {
                for i in 0..n {
                    let rows = squeeze_agent(&ep.agents[i], g, end)?;
                    let mut inputs = self.dims.local_sequence(i, &rows);
                    let task = critics.len();
                    critics.push(CriticTask {
                        critic: i,
                        inputs: inputs.clone(),
                        rows: successive(rows.len())
                            .map(|(pos, next)| TdRow {
                                pos,
                                next,
                                reward: rows[pos].reward,
                                tau: rows[pos].tau,
                            })
                            .collect(),
                        last_terminal: end.terminal,
                    });
                    inputs.pop();
                    actors.push(ActorTask {
                        actor: i,
                        inputs,
                        chosen: rows.iter().map(|r| vec![Some(r.m)]).collect(),
                        advantage: (0..rows.len()).map(|k| (task, k)).collect(),
                    });
                }
            }
            Algorithm::MacCac => {
                let rows = squeeze_joint(&ep.joint, g, end)?;
                let mut inputs = self.dims.joint_sequence(&rows);
                let task = critics.len();
                critics.push(CriticTask {
                    critic: 0,
                    inputs: inputs.clone(),
                    rows: successive(rows.len())
                        .map(|(pos, next)| TdRow {
                            pos,
                            next,
                            reward: rows[pos].reward,
                            tau: rows[pos].tau,
                        })
                        .collect(),
                    last_terminal: end.terminal,
                });
                inputs.pop();
                actors.push(ActorTask {
                    actor: 0,
                    inputs,
                    chosen: rows
                        .iter()
                        .map(|r| (0..n).map(|i| r.fresh[i].then_some(r.m[i])).collect())
                        .collect(),
                    advantage: (0..rows.len()).map(|k| (task, k)).collect(),
                });
            }
            Algorithm::NaiveMacIacc => {
                let rows = squeeze_joint(&ep.joint, g, end)?;
                let task = critics.len();
                critics.push(CriticTask {
                    critic: 0,
                    inputs: self.critic_sequence(ep, &rows),
                    rows: successive(rows.len())
                        .map(|(pos, next)| TdRow {
                            pos,
                            next,
                            reward: rows[pos].reward,
                            tau: rows[pos].tau,
                        })
                        .collect(),
                    last_terminal: end.terminal,
                });
                let by_start: HashMap<usize, usize> =
                    rows.iter().enumerate().map(|(k, r)| (r.t_start, k)).collect();
                for i in 0..n {
                    let own = squeeze_agent(&ep.agents[i], g, end)?;
                    let mut inputs = self.dims.local_sequence(i, &own);
                    inputs.pop();
                    let advantage = own
                        .iter()
                        .map(|r| {
                            by_start.get(&r.t_start).map(|&k| (task, k)).ok_or_else(|| {
                                Error::Invalid(format!(
                                    "agent {i} macro at t = {} does not start a joint row",
                                    r.t_start
                                ))
                            })
                        })
                        .collect::<Result<_>>()?;
                    actors.push(ActorTask {
                        actor: i,
                        inputs,
                        chosen: own.iter().map(|r| vec![Some(r.m)]).collect(),
                        advantage,
                    });
                }
            }
            Algorithm::MacIaicc => {
                for i in 0..n {
                    let stream: Vec<f64> = ep.agents[i].iter().map(|r| r.r).collect();
                    let seq = squeeze_iaicc(&ep.joint, &stream, i, g, end)?;
                    let joint: Vec<JointSqueezedTransition> =
                        seq.critic.iter().map(|r| r.joint.clone()).collect();
                    let task = critics.len();
                    let rows: Vec<TdRow> = seq
                        .masked_rows()
                        .map(|(k, r)| TdRow {
                            pos: r.start_row,
                            next: k + 1,
                            reward: r.reward,
                            tau: r.tau,
                        })
                        .collect();
                    if rows.len() != seq.actor.len() {
                        return Err(Error::LengthMismatch {
                            what: "masked critic rows vs actor rows",
                            left: rows.len(),
                            right: seq.actor.len(),
                        });
                    }
                    critics.push(CriticTask {
                        critic: i,
                        inputs: self.critic_sequence(ep, &joint),
                        rows,
                        last_terminal: end.terminal,
                    });
                    let mut inputs = self.dims.local_sequence(i, &seq.actor);
                    inputs.pop();
                    actors.push(ActorTask {
                        actor: i,
                        inputs,
                        chosen: seq.actor.iter().map(|r| vec![Some(r.m)]).collect(),
                        advantage: (0..seq.actor.len()).map(|k| (task, k)).collect(),
                    });
                }
            }
        }
        Ok(())
    }

    fn values(net: &RecurrentNet<f32>, inputs: &[Vec<f32>]) -> Result<Vec<f64>> {
        let out = net.forward_sequence(inputs, &net.initial_hidden())?;
        Ok(out.logits.iter().map(|v| v[0] as f64).collect())
    }

    /// One on-policy update from episodes generated by the current version.
    ///
    /// Critics take one step on the mean squared TD error over their rows;
    /// actors then take one step on `-mean log pi * A` with `A = y - V` from the
    /// updated live critic. Targets are left untouched.
    pub fn train_round(&mut self, episodes: &[EpisodeLog]) -> Result<RoundReport> {
        if episodes.is_empty() {
            return Err(Error::Invalid("training round without episodes".into()));
        }
        if let Some(ep) = episodes.iter().find(|e| e.policy_version != self.version) {
            return Err(Error::Invalid(format!(
                "episode generated by policy version {} but learner is at {}",
                ep.policy_version, self.version
            )));
        }
        let mut ctasks = Vec::new();
        let mut atasks = Vec::new();
        for ep in episodes {
            self.build_tasks(ep, &mut ctasks, &mut atasks)?;
        }
        let gamma = self.cfg.gamma;
        let n_step = self.cfg.n_step as i64;

        // Critic step.
        let nc = self.critics.len();
        let mut rows_per_critic = vec![0usize; nc];
        for t in &ctasks {
            rows_per_critic[t.critic] += t.rows.len();
        }
        let mut cgrads: Vec<Gradients<f32>> =
            self.critics.iter().map(|c| Gradients::zeros(c.num_params())).collect();
        let mut closs = vec![0.0; nc];
        let mut abs_td = 0.0;
        let mut td_rows = 0usize;
        let mut targets_y: Vec<Vec<f64>> = Vec::with_capacity(ctasks.len());
        for t in &ctasks {
            let net = &self.critics[t.critic];
            let live = net.forward_sequence(&t.inputs, &net.initial_hidden())?;
            let target = Self::values(&self.targets[t.critic], &t.inputs)?;
            let rewards: Vec<f64> = t.rows.iter().map(|r| r.reward).collect();
            let taus: Vec<usize> = t.rows.iter().map(|r| r.tau).collect();
            let next: Vec<f64> = t.rows.iter().map(|r| target[r.next]).collect();
            let y = td_targets(&rewards, &taus, &next, t.last_terminal, gamma, n_step)?;
            let w = 1.0 / rows_per_critic[t.critic] as f64;
            let mut dl = vec![vec![0.0f32]; t.inputs.len()];
            for (r, &yk) in t.rows.iter().zip(&y) {
                let delta = yk - live.logits[r.pos][0] as f64;
                abs_td += delta.abs();
                td_rows += 1;
                closs[t.critic] += w * delta * delta;
                dl[r.pos][0] += (-2.0 * w * delta) as f32;
            }
            let masks = vec![1.0f32; t.inputs.len()];
            cgrads[t.critic].add_assign(&net.backward_sequence(&live.cache, &dl, &masks)?);
            targets_y.push(y);
        }
        let critic_grad_norm: Vec<f64> = cgrads.iter().map(Gradients::l2_norm).collect();
        for c in 0..nc {
            if rows_per_critic[c] > 0 {
                self.critic_opts[c].step(&mut self.critics[c], &cgrads[c])?;
            }
        }

        // Advantages from the updated live critics.
        let mut advantages: Vec<Vec<f64>> = Vec::with_capacity(ctasks.len());
        for (t, y) in ctasks.iter().zip(&targets_y) {
            let v = Self::values(&self.critics[t.critic], &t.inputs)?;
            advantages.push(t.rows.iter().zip(y).map(|(r, &yk)| yk - v[r.pos]).collect());
        }

        // Actor step.
        let na = self.actors.len();
        let mut rows_per_actor = vec![0usize; na];
        for t in &atasks {
            rows_per_actor[t.actor] += t.chosen.iter().filter(|c| c.iter().any(Option::is_some)).count();
        }
        let mut agrads: Vec<Gradients<f32>> =
            self.actors.iter().map(|a| Gradients::zeros(a.num_params())).collect();
        let mut aloss = vec![0.0; na];
        let mut entropy_sum = vec![0.0; na];
        let mut entropy_rows = vec![0usize; na];
        for t in &atasks {
            let adv: Vec<f64> = t.advantage.iter().map(|&(c, k)| advantages[c][k]).collect();
            let w = 1.0 / rows_per_actor[t.actor].max(1) as f64;
            let weights = vec![w; t.inputs.len()];
            let l = actor_loss(&self.actors[t.actor], &t.inputs, &t.chosen, &adv, &weights)?;
            aloss[t.actor] += l.loss;
            entropy_sum[t.actor] += l.entropy * t.inputs.len() as f64;
            entropy_rows[t.actor] += t.inputs.len();
            agrads[t.actor].add_assign(&l.grads);
        }
        let actor_grad_norm: Vec<f64> = agrads.iter().map(Gradients::l2_norm).collect();
        for a in 0..na {
            if rows_per_actor[a] > 0 {
                self.actor_opts[a].step(&mut self.actors[a], &agrads[a])?;
            }
        }

        self.version += 1;
        Ok(RoundReport {
            version: self.version,
            episodes: episodes.len(),
            mean_abs_td: if td_rows > 0 { abs_td / td_rows as f64 } else { 0.0 },
            critic_loss: closs,
            critic_grad_norm,
            actor_loss: aloss,
            actor_entropy: entropy_sum
                .iter()
                .zip(&entropy_rows)
                .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
                .collect(),
            actor_grad_norm,
            critic_grads: cgrads,
            actor_grads: agrads,
        })
    }
}

/// Samples macros from a learner's actors, carrying recurrent state across the
/// decisions of one episode.
pub struct ActingPolicy<'a> {
    learner: &'a Learner,
    hidden: Vec<Vec<f32>>,
    prev: Vec<Option<MacroId>>,
}

impl<'a> ActingPolicy<'a> {
    fn new(learner: &'a Learner) -> Self {
        let mut p = ActingPolicy {
            learner,
            hidden: Vec::new(),
            prev: Vec::new(),
        };
        p.reset();
        p
    }
}

impl JointPolicy for ActingPolicy<'_> {
    fn reset(&mut self) {
        self.hidden = self.learner.actors.iter().map(|a| a.initial_hidden()).collect();
        self.prev = vec![None; self.learner.dims.n_agents()];
    }

    fn choose(
        &mut self,
        obs: &[MacroObs],
        choosing: &[bool],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Option<MacroId>>> {
        let dims = &self.learner.dims;
        let n = dims.n_agents();
        if obs.len() != n || choosing.len() != n {
            return Err(Error::Dimension {
                what: "agents in decision",
                expected: n,
                actual: obs.len(),
            });
        }
        let mut picks = vec![None; n];
        if self.learner.cfg.algorithm == Algorithm::MacCac {
            let net = &self.learner.actors[0];
            let groups = policy_groups(net)?;
            let probs = net.step(&dims.joint_input(obs, &self.prev), &mut self.hidden[0])?;
            let mut start = 0;
            for i in 0..n {
                if choosing[i] {
                    let dist = mix_epsilon(&probs[start..start + groups[i]], epsilon);
                    picks[i] = Some(sample_index(&dist, rng));
                }
                start += groups[i];
            }
        } else {
            for i in (0..n).filter(|&i| choosing[i]) {
                let net = &self.learner.actors[i];
                let probs = net.step(&dims.local_input(i, &obs[i], self.prev[i]), &mut self.hidden[i])?;
                picks[i] = Some(sample_index(&mix_epsilon(&probs, epsilon), rng));
            }
        }
        for i in 0..n {
            if let Some(m) = picks[i] {
                self.prev[i] = Some(m);
            }
        }
        Ok(picks)
    }
}
