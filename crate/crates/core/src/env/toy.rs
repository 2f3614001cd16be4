//! A tiny, exactly enumerable MacDec-POMDP with tabular softmax policies over
//! full macro-level histories. It is the reference for policy-gradient checks.
//!
//! The primitive action of every macro is its own id, so the joint primitive
//! action is the joint macro. Macro `m` of agent `i` runs for a fixed
//! `durations[i][m]` steps. After a macro ends the agent observes the symbol
//! `observation[i][s]` of the new state.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macdec::{
    mix_epsilon_f64, sample_index, JointPolicy, MacroActionDef, MacroEnv, MacroId, MacroObs,
    PrimitiveAction, StepOutcome,
};

pub const MAX_STATES: usize = 6;
pub const MAX_AGENTS: usize = 2;
pub const MAX_MACROS: usize = 3;
pub const MAX_HORIZON: usize = 6;
pub const TRAJECTORY_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub n_states: usize,
    pub n_obs: usize,
    /// `durations[i][m]`, each 1 or 2.
    pub durations: Vec<Vec<usize>>,
    pub horizon: usize,
    pub gamma: f64,
    pub initial_state: usize,
    /// `reward[s][joint]`.
    pub reward: Vec<Vec<f64>>,
    /// `transition[s][joint][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `observation[i][s]`.
    pub observation: Vec<Vec<usize>>,
}

impl ToySpec {
    pub fn n_agents(&self) -> usize {
        self.durations.len()
    }

    pub fn n_macros(&self, agent: usize) -> usize {
        self.durations[agent].len()
    }

    pub fn n_joint(&self) -> usize {
        self.durations.iter().map(Vec::len).product()
    }

    /// Mixed-radix index of a joint macro, agent 0 most significant.
    pub fn joint_index(&self, macros: &[MacroId]) -> usize {
        macros
            .iter()
            .zip(&self.durations)
            .fold(0, |acc, (&m, d)| acc * d.len() + m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_states == 0 || self.n_states > MAX_STATES {
            return bad(format!("n_states {} outside 1..={MAX_STATES}", self.n_states));
        }
        if self.n_agents() == 0 || self.n_agents() > MAX_AGENTS {
            return bad(format!("{} agents outside 1..={MAX_AGENTS}", self.n_agents()));
        }
        for d in &self.durations {
            if d.is_empty() || d.len() > MAX_MACROS || d.iter().any(|&x| x != 1 && x != 2) {
                return bad(format!("macro durations {d:?} invalid"));
            }
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return bad(format!("horizon {} outside 1..={MAX_HORIZON}", self.horizon));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if self.initial_state >= self.n_states || self.n_obs == 0 {
            return bad("initial state or observation count invalid".into());
        }
        let nj = self.n_joint();
        if self.reward.len() != self.n_states || self.reward.iter().any(|r| r.len() != nj) {
            return bad("reward table shape".into());
        }
        if self.transition.len() != self.n_states {
            return bad("transition table shape".into());
        }
        for row in self.transition.iter().flatten() {
            let sum: f64 = row.iter().sum();
            if row.len() != self.n_states || row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return bad(format!("transition row {row:?} is not a distribution"));
            }
        }
        if self.transition.iter().any(|r| r.len() != nj) {
            return bad("transition table shape".into());
        }
        if self.observation.len() != self.n_agents()
            || self
                .observation
                .iter()
                .any(|o| o.len() != self.n_states || o.iter().any(|&x| x >= self.n_obs))
        {
            return bad("observation map shape".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ToySpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Random spec whose trajectory tree stays well below the enumeration cap.
    /// Every transition row has at most two successors.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_agents: usize, n_states: usize) -> Self {
        loop {
            let durations: Vec<Vec<usize>> = (0..n_agents)
                .map(|_| {
                    let k = rng.gen_range(2..=MAX_MACROS);
                    (0..k).map(|_| rng.gen_range(1..=2)).collect()
                })
                .collect();
            let nj: usize = durations.iter().map(Vec::len).product();
            let n_obs = 2;
            let mut spec = ToySpec {
                n_states,
                n_obs,
                durations,
                horizon: 0,
                gamma: rng.gen_range(0.8..=1.0),
                initial_state: rng.gen_range(0..n_states),
                reward: (0..n_states)
                    .map(|_| (0..nj).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect(),
                transition: (0..n_states)
                    .map(|_| {
                        (0..nj)
                            .map(|_| {
                                let mut row = vec![0.0; n_states];
                                let a = rng.gen_range(0..n_states);
                                if rng.gen_bool(0.5) {
                                    row[a] = 1.0;
                                } else {
                                    let b = rng.gen_range(0..n_states);
                                    let p = rng.gen_range(0.1..0.9);
                                    row[a] += p;
                                    row[b] += 1.0 - p;
                                }
                                row
                            })
                            .collect()
                    })
                    .collect(),
                observation: (0..n_agents)
                    .map(|_| (0..n_states).map(|_| rng.gen_range(0..n_obs)).collect())
                    .collect(),
            };
            for horizon in (2..=5).rev() {
                spec.horizon = horizon;
                if count_trajectories(&spec) <= TRAJECTORY_CAP / 20 {
                    return spec;
                }
            }
        }
    }
}

/// `(agent, [o0, m0, o1, m1, ..., ok])`.
pub type HistoryKey = (usize, Vec<usize>);

/// Softmax policy with one logit vector per (agent, macro-level history).
/// Unlisted histories have all-zero logits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TabularPolicy {
    pub logits: BTreeMap<HistoryKey, Vec<f64>>,
    pub n_macros: Vec<usize>,
    histories: Vec<Vec<usize>>,
}

impl TabularPolicy {
    pub fn uniform(spec: &ToySpec) -> Self {
        TabularPolicy {
            logits: BTreeMap::new(),
            n_macros: (0..spec.n_agents()).map(|i| spec.n_macros(i)).collect(),
            histories: vec![Vec::new(); spec.n_agents()],
        }
    }

    /// Random logits on every reachable history.
    pub fn random<R: Rng + ?Sized>(spec: &ToySpec, rng: &mut R, scale: f64) -> Result<Self> {
        let mut p = Self::uniform(spec);
        for key in reachable_histories(spec)? {
            let n = p.n_macros[key.0];
            p.logits
                .insert(key, (0..n).map(|_| rng.gen_range(-scale..scale)).collect());
        }
        Ok(p)
    }

    pub fn probs(&self, agent: usize, history: &[usize]) -> Vec<f64> {
        let n = self.n_macros[agent];
        match self.logits.get(&(agent, history.to_vec())) {
            Some(l) => softmax(l),
            None => vec![1.0 / n as f64; n],
        }
    }

    /// Flattened parameters in key order, with the keys.
    pub fn flatten(&self) -> (Vec<HistoryKey>, Vec<f64>) {
        let keys: Vec<HistoryKey> = self.logits.keys().cloned().collect();
        let values = self.logits.values().flatten().copied().collect();
        (keys, values)
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        let mut k = 0;
        for v in self.logits.values_mut() {
            for x in v.iter_mut() {
                *x = values[k];
                k += 1;
            }
        }
    }
}

impl JointPolicy for TabularPolicy {
    fn reset(&mut self) {
        self.histories = vec![Vec::new(); self.n_macros.len()];
    }

    fn choose(
        &mut self,
        obs: &[MacroObs],
        choosing: &[bool],
        epsilon: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Option<MacroId>>> {
        let mut out = vec![None; choosing.len()];
        for i in (0..choosing.len()).filter(|&i| choosing[i]) {
            let symbol = obs[i]
                .as_slice()
                .iter()
                .position(|&x| x > 0.5)
                .ok_or_else(|| Error::Invalid("toy observation is not one-hot".into()))?;
            self.histories[i].push(symbol);
            let p = self.probs(i, &self.histories[i]);
            let m = sample_index(&mix_epsilon_f64(&p, epsilon), rng);
            self.histories[i].push(m);
            out[i] = Some(m);
        }
        Ok(out)
    }
}

fn softmax(l: &[f64]) -> Vec<f64> {
    let mx = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = l.iter().map(|x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// One decision taken on a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub agent: usize,
    pub history: Vec<usize>,
    pub macro_id: MacroId,
    pub t: usize,
}

/// A fully enumerated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub prob: f64,
    pub rewards: Vec<f64>,
    pub decisions: Vec<Decision>,
    /// Tree-node id of the decision point at each primitive step.
    pub nodes: Vec<usize>,
}

impl Trajectory {
    /// `sum_{u >= t} gamma^(u - t) r_u`.
    pub fn return_from(&self, t: usize, gamma: f64) -> f64 {
        self.rewards[t..]
            .iter()
            .rev()
            .fold(0.0, |acc, &r| r + gamma * acc)
    }
}

struct Walker<'a> {
    spec: &'a ToySpec,
    policy: Option<&'a TabularPolicy>,
    out: Vec<Trajectory>,
    next_node: usize,
    count_only: bool,
    leaves: usize,
}

#[derive(Clone)]
struct Partial {
    state: usize,
    t: usize,
    prob: f64,
    remaining: Vec<usize>,
    running: Vec<MacroId>,
    histories: Vec<Vec<usize>>,
    rewards: Vec<f64>,
    decisions: Vec<Decision>,
    nodes: Vec<usize>,
}

impl Walker<'_> {
    fn walk(&mut self, mut p: Partial) -> Result<()> {
        if p.t == self.spec.horizon {
            self.leaves += 1;
            if self.leaves > TRAJECTORY_CAP {
                return Err(Error::TrajectoryCap { cap: TRAJECTORY_CAP });
            }
            if !self.count_only {
                self.out.push(Trajectory {
                    prob: p.prob,
                    rewards: p.rewards,
                    decisions: p.decisions,
                    nodes: p.nodes,
                });
            }
            return Ok(());
        }
        p.nodes.push(self.next_node);
        self.next_node += 1;
        let choosers: Vec<usize> = (0..self.spec.n_agents()).filter(|&i| p.remaining[i] == 0).collect();
        self.choose(p, &choosers, 0)
    }

    fn choose(&mut self, p: Partial, choosers: &[usize], k: usize) -> Result<()> {
        if k == choosers.len() {
            return self.transition(p);
        }
        let i = choosers[k];
        let mut hist = p.histories[i].clone();
        hist.push(self.spec.observation[i][p.state]);
        let probs = match self.policy {
            Some(pol) => pol.probs(i, &hist),
            None => vec![1.0; self.spec.n_macros(i)],
        };
        for (m, &pm) in probs.iter().enumerate() {
            let mut q = p.clone();
            q.prob *= pm;
            q.running[i] = m;
            q.remaining[i] = self.spec.durations[i][m];
            q.decisions.push(Decision {
                agent: i,
                history: hist.clone(),
                macro_id: m,
                t: p.t,
            });
            let mut h = hist.clone();
            h.push(m);
            q.histories[i] = h;
            self.choose(q, choosers, k + 1)?;
        }
        Ok(())
    }

    fn transition(&mut self, p: Partial) -> Result<()> {
        let j = self.spec.joint_index(&p.running);
        let r = self.spec.reward[p.state][j];
        for (s2, &ps) in self.spec.transition[p.state][j].iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            let mut q = p.clone();
            q.prob *= ps;
            q.state = s2;
            q.t += 1;
            q.rewards.push(r);
            for rem in q.remaining.iter_mut() {
                *rem -= 1;
            }
            self.walk(q)?;
        }
        Ok(())
    }
}

fn walk<'a>(spec: &'a ToySpec, policy: Option<&'a TabularPolicy>, count_only: bool) -> Result<Walker<'a>> {
    spec.validate()?;
    let n = spec.n_agents();
    let mut w = Walker {
        spec,
        policy,
        out: Vec::new(),
        next_node: 0,
        count_only,
        leaves: 0,
    };
    w.walk(Partial {
        state: spec.initial_state,
        t: 0,
        prob: 1.0,
        remaining: vec![0; n],
        running: vec![0; n],
        histories: vec![Vec::new(); n],
        rewards: Vec::new(),
        decisions: Vec::new(),
        nodes: Vec::new(),
    })?;
    Ok(w)
}

/// Number of distinct trajectories (policy branches times stochastic outcomes).
/// Returns `usize::MAX` when the tree exceeds the enumeration cap.
pub fn count_trajectories(spec: &ToySpec) -> usize {
    match walk(spec, None, true) {
        Ok(w) => w.leaves,
        Err(_) => usize::MAX,
    }
}

/// All trajectories with their probabilities under `policy`.
pub fn enumerate(spec: &ToySpec, policy: &TabularPolicy) -> Result<Vec<Trajectory>> {
    Ok(walk(spec, Some(policy), false)?.out)
}

/// Every (agent, history) at which a decision can occur.
pub fn reachable_histories(spec: &ToySpec) -> Result<Vec<HistoryKey>> {
    let w = walk(spec, None, false)?;
    let mut keys: Vec<HistoryKey> = w
        .out
        .iter()
        .flat_map(|t| t.decisions.iter().map(|d| (d.agent, d.history.clone())))
        .collect();
    keys.sort();
    keys.dedup();
    Ok(keys)
}

/// Expected discounted return `J`.
pub fn exact_value(spec: &ToySpec, policy: &TabularPolicy) -> Result<f64> {
    Ok(enumerate(spec, policy)?
        .iter()
        .map(|t| t.prob * t.return_from(0, spec.gamma))
        .sum())
}

/// Gradient of `J` with respect to every logit in `policy` (key order of
/// [`TabularPolicy::flatten`]), computed in independent ways.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradients {
    /// Central finite differences of [`exact_value`].
    pub finite_difference: Vec<f64>,
    /// Exact expectation of `sum_k gamma^t_k grad log pi(m_k | h_k) G_t_k`.
    pub score_q: Vec<f64>,
    /// Exact expectation of the advantage form
    /// `sum_k gamma^t_k grad log pi(m_k | h_k) (r^c_k + gamma^tau V(x_k') - V(x_k))`,
    /// with `V` the exact value of the full decision node.
    pub score_advantage: Vec<f64>,
}

/// Row of the score-function estimator: `d log pi(m) / d logits`.
pub fn score(probs: &[f64], m: MacroId) -> Vec<f64> {
    probs
        .iter()
        .enumerate()
        .map(|(j, &p)| if j == m { 1.0 - p } else { -p })
        .collect()
}

pub fn exact_policy_gradient(spec: &ToySpec, policy: &TabularPolicy, h: f64) -> Result<PolicyGradients> {
    let (keys, theta) = policy.flatten();
    let offsets = key_offsets(policy, &keys);

    let mut probe = policy.clone();
    let mut fd = vec![0.0; theta.len()];
    for k in 0..theta.len() {
        let mut x = theta.clone();
        x[k] = theta[k] + h;
        probe.set_flat(&x);
        let plus = exact_value(spec, &probe)?;
        x[k] = theta[k] - h;
        probe.set_flat(&x);
        let minus = exact_value(spec, &probe)?;
        fd[k] = (plus - minus) / (2.0 * h);
    }

    let trajs = enumerate(spec, policy)?;
    let gamma = spec.gamma;
    let values = node_values(&trajs, gamma);
    let mut q_form = vec![0.0; theta.len()];
    let mut adv_form = vec![0.0; theta.len()];
    for tr in &trajs {
        for d in &tr.decisions {
            let Some(&off) = offsets.get(&(d.agent, d.history.clone())) else {
                continue;
            };
            let probs = policy.probs(d.agent, &d.history);
            let sc = score(&probs, d.macro_id);
            let disc = gamma.powi(d.t as i32);
            let g = tr.return_from(d.t, gamma);
            let end = (d.t + spec.durations[d.agent][d.macro_id]).min(spec.horizon);
            let rc: f64 = tr.rewards[d.t..end]
                .iter()
                .rev()
                .fold(0.0, |acc, &r| r + gamma * acc);
            let v_next = if end < spec.horizon {
                values[&tr.nodes[end]]
            } else {
                0.0
            };
            let adv = rc + gamma.powi((end - d.t) as i32) * v_next - values[&tr.nodes[d.t]];
            for (j, s) in sc.iter().enumerate() {
                q_form[off + j] += tr.prob * disc * s * g;
                adv_form[off + j] += tr.prob * disc * s * adv;
            }
        }
    }
    Ok(PolicyGradients {
        finite_difference: fd,
        score_q: q_form,
        score_advantage: adv_form,
    })
}

fn key_offsets(policy: &TabularPolicy, keys: &[HistoryKey]) -> BTreeMap<HistoryKey, usize> {
    let mut off = 0;
    let mut map = BTreeMap::new();
    for k in keys {
        map.insert(k.clone(), off);
        off += policy.logits[k].len();
    }
    map
}

/// Exact value of every tree node: the expected return from that node.
fn node_values(trajs: &[Trajectory], gamma: f64) -> BTreeMap<usize, f64> {
    let mut mass: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for tr in trajs {
        for (t, &node) in tr.nodes.iter().enumerate() {
            let e = mass.entry(node).or_insert((0.0, 0.0));
            e.0 += tr.prob;
            e.1 += tr.prob * tr.return_from(t, gamma);
        }
    }
    mass.into_iter()
        .map(|(k, (p, g))| (k, if p > 0.0 { g / p } else { 0.0 }))
        .collect()
}

/// Policy gradient of a single agent with one-step macros, from the recursion
/// `grad V(n) = sum_m pi(m|h) [grad log pi(m|h) Q(n, m) + sum_s' P(s'|s, m) gamma grad V(n')]`.
pub fn primitive_policy_gradient(spec: &ToySpec, policy: &TabularPolicy) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.n_agents() != 1 || spec.durations[0].iter().any(|&d| d != 1) {
        return Err(Error::Config(
            "primitive gradient needs one agent with one-step macros".into(),
        ));
    }
    let (keys, theta) = policy.flatten();
    let offsets = key_offsets(policy, &keys);
    let mut grad = vec![0.0; theta.len()];
    let mut hist = vec![spec.observation[0][spec.initial_state]];
    recurse(spec, policy, &offsets, spec.initial_state, 0, &mut hist, &mut grad)?;
    Ok(grad)
}

/// Returns `V(n)` and adds `grad V(n)` into `grad`.
fn recurse(
    spec: &ToySpec,
    policy: &TabularPolicy,
    offsets: &BTreeMap<HistoryKey, usize>,
    s: usize,
    t: usize,
    hist: &mut Vec<usize>,
    grad: &mut [f64],
) -> Result<f64> {
    if t == spec.horizon {
        return Ok(0.0);
    }
    let probs = policy.probs(0, hist);
    let off = offsets.get(&(0, hist.clone())).copied();
    let mut v = 0.0;
    for (a, &pa) in probs.iter().enumerate() {
        let mut sub = vec![0.0; grad.len()];
        let mut q = spec.reward[s][a];
        for (s2, &ps) in spec.transition[s][a].iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            hist.push(a);
            hist.push(spec.observation[0][s2]);
            let mut g2 = vec![0.0; grad.len()];
            let v2 = recurse(spec, policy, offsets, s2, t + 1, hist, &mut g2)?;
            hist.truncate(hist.len() - 2);
            q += spec.gamma * ps * v2;
            for (x, y) in sub.iter_mut().zip(&g2) {
                *x += spec.gamma * ps * y;
            }
        }
        v += pa * q;
        for (g, x) in grad.iter_mut().zip(&sub) {
            *g += pa * x;
        }
        if let Some(off) = off {
            for (j, sc) in score(&probs, a).into_iter().enumerate() {
                grad[off + j] += pa * sc * q;
            }
        }
    }
    Ok(v)
}

/// The toy model as a sampled environment.
#[derive(Debug, Clone)]
pub struct ToyEnv {
    spec: ToySpec,
    state: usize,
    t: usize,
    rng: ChaCha8Rng,
    macros: Vec<Vec<MacroActionDef<ToyEnv>>>,
}

impl ToyEnv {
    pub fn new(spec: ToySpec) -> Result<Self> {
        spec.validate()?;
        let macros = spec
            .durations
            .iter()
            .map(|ds| {
                ds.iter()
                    .enumerate()
                    .map(|(m, &d)| {
                        MacroActionDef::new(
                            m,
                            format!("macro{m}"),
                            move |_: &ToyEnv, _, _| m,
                            move |_: &ToyEnv, _, ctx| ctx.steps() >= d,
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(ToyEnv {
            state: spec.initial_state,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            macros,
            spec,
        })
    }

    pub fn spec(&self) -> &ToySpec {
        &self.spec
    }
}

impl MacroEnv for ToyEnv {
    fn n_agents(&self) -> usize {
        self.spec.n_agents()
    }

    fn n_primitive_actions(&self, agent: usize) -> usize {
        self.spec.n_macros(agent)
    }

    fn macro_actions(&self, agent: usize) -> &[MacroActionDef<Self>] {
        &self.macros[agent]
    }

    fn macro_obs_dim(&self, _agent: usize) -> usize {
        self.spec.n_obs
    }

    fn state_dim(&self) -> usize {
        self.spec.n_states
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn reset(&mut self, seed: u64) -> Result<()> {
        self.state = self.spec.initial_state;
        self.t = 0;
        // Separate stream from the policy's sampler, which uses `seed` directly.
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
        Ok(())
    }

    fn step(&mut self, actions: &[PrimitiveAction]) -> Result<StepOutcome> {
        if actions.len() != self.spec.n_agents() {
            return Err(Error::LengthMismatch {
                what: "joint action",
                left: self.spec.n_agents(),
                right: actions.len(),
            });
        }
        for (agent, &a) in actions.iter().enumerate() {
            if a >= self.spec.n_macros(agent) {
                return Err(Error::InvalidAction {
                    agent,
                    action: a,
                    limit: self.spec.n_macros(agent),
                });
            }
        }
        let j = self.spec.joint_index(actions);
        let reward = self.spec.reward[self.state][j];
        let row = &self.spec.transition[self.state][j];
        self.state = sample_index(row, &mut self.rng);
        self.t += 1;
        Ok(StepOutcome {
            reward,
            terminal: false,
        })
    }

    fn timestep(&self) -> usize {
        self.t
    }

    fn macro_observation(&self, agent: usize) -> MacroObs {
        MacroObs(self.primitive_observation(agent))
    }

    fn primitive_observation(&self, agent: usize) -> Vec<f32> {
        let mut v = vec![0.0; self.spec.n_obs];
        v[self.spec.observation[agent][self.state]] = 1.0;
        v
    }

    fn state_features(&self) -> Vec<f32> {
        let mut v = vec![0.0; self.spec.n_states];
        v[self.state] = 1.0;
        v
    }

    fn render(&self) -> String {
        format!("t={} state={}\n", self.t, self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm_rel(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        diff / na.max(nb).max(1e-12)
    }

    #[test]
    fn zero_rewards_give_zero_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut spec = ToySpec::random(&mut rng, 2, 3);
        for row in spec.reward.iter_mut() {
            row.iter_mut().for_each(|r| *r = 0.0);
        }
        let pol = TabularPolicy::random(&spec, &mut rng, 1.0).unwrap();
        assert_eq!(exact_value(&spec, &pol).unwrap(), 0.0);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = ToySpec::random(&mut rng, 2, 4);
        let pol = TabularPolicy::random(&spec, &mut rng, 1.0).unwrap();
        let total: f64 = enumerate(&spec, &pol).unwrap().iter().map(|t| t.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n_agents in [1, 2] {
            let spec = ToySpec::random(&mut rng, n_agents, 3);
            let pol = TabularPolicy::random(&spec, &mut rng, 1.0).unwrap();
            let g = exact_policy_gradient(&spec, &pol, 1e-5).unwrap();
            assert!(norm_rel(&g.score_q, &g.finite_difference) < 1e-6);
            assert!(norm_rel(&g.score_advantage, &g.finite_difference) < 1e-6);
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = ToySpec::random(&mut rng, 2, 3);
        let back = ToySpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
