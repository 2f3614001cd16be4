//! Per-agent and joint experience logs and the squeezing transforms that turn
//! primitive-timescale records into macro-timescale transitions.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::macdec::{EpisodeSummary, MacroId, MacroObs, Recorder};

/// One agent's view of one primitive step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub agent: usize,
    pub z: MacroObs,
    pub m: MacroId,
    pub r: f64,
    /// This agent's macro ended at this step.
    pub terminated: bool,
    pub z_next: MacroObs,
}

/// All agents' view of one primitive step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "JointWire", try_from = "JointWire")]
pub struct JointStepRecord {
    pub t: usize,
    pub z: Vec<MacroObs>,
    pub m: Vec<MacroId>,
    pub r: f64,
    pub terminated: Vec<bool>,
    pub z_next: Vec<MacroObs>,
}

impl JointStepRecord {
    /// Some agent's macro ended at this step.
    pub fn joint_terminated(&self) -> bool {
        self.terminated.iter().any(|&d| d)
    }

    /// Agent `i`'s projection of this step.
    pub fn agent_record(&self, i: usize) -> StepRecord {
        StepRecord {
            t: self.t,
            agent: i,
            z: self.z[i].clone(),
            m: self.m[i],
            r: self.r,
            terminated: self.terminated[i],
            z_next: self.z_next[i].clone(),
        }
    }
}

// Wire form keeps the shared field order with `agent: null`.
#[derive(Serialize, Deserialize)]
struct JointWire {
    t: usize,
    agent: Option<usize>,
    z: Vec<MacroObs>,
    m: Vec<MacroId>,
    r: f64,
    terminated: Vec<bool>,
    z_next: Vec<MacroObs>,
}

impl From<JointStepRecord> for JointWire {
    fn from(j: JointStepRecord) -> Self {
        JointWire {
            t: j.t,
            agent: None,
            z: j.z,
            m: j.m,
            r: j.r,
            terminated: j.terminated,
            z_next: j.z_next,
        }
    }
}

impl TryFrom<JointWire> for JointStepRecord {
    type Error = String;

    fn try_from(w: JointWire) -> std::result::Result<Self, String> {
        if w.agent.is_some() {
            return Err("joint record must have `agent: null`".into());
        }
        let n = w.z.len();
        if w.m.len() != n || w.terminated.len() != n || w.z_next.len() != n {
            return Err("joint record fields disagree on agent count".into());
        }
        Ok(JointStepRecord {
            t: w.t,
            z: w.z,
            m: w.m,
            r: w.r,
            terminated: w.terminated,
            z_next: w.z_next,
        })
    }
}

/// A line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogLine {
    Agent(StepRecord),
    Joint(JointStepRecord),
}

/// Everything recorded during one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    /// `agents[i]` is agent i's record stream.
    pub agents: Vec<Vec<StepRecord>>,
    pub joint: Vec<JointStepRecord>,
    /// State features before every step plus the final state (`len + 1` rows).
    pub states: Vec<Vec<f32>>,
    pub terminal: bool,
    /// Parameter version of the policy that generated the episode.
    pub policy_version: u64,
}

impl EpisodeLog {
    pub fn new(policy_version: u64) -> Self {
        EpisodeLog {
            policy_version,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.joint.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn end(&self) -> EpisodeEnd {
        EpisodeEnd {
            terminal: self.terminal,
        }
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.joint.iter().map(|j| j.r).collect()
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for (k, j) in self.joint.iter().enumerate() {
            for a in &self.agents {
                serde_json::to_writer(&mut w, &a[k])?;
                w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
            serde_json::to_writer(&mut w, j)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads records written by [`EpisodeLog::write_jsonl`]. States and the
    /// terminal flag are not part of the line format.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut log = EpisodeLog::default();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogLine>(&line)? {
                LogLine::Agent(r) => {
                    if log.agents.len() <= r.agent {
                        log.agents.resize(r.agent + 1, Vec::new());
                    }
                    log.agents[r.agent].push(r);
                }
                LogLine::Joint(j) => log.joint.push(j),
            }
        }
        Ok(log)
    }
}

impl Recorder for EpisodeLog {
    fn record(&mut self, agents: Vec<StepRecord>, joint: JointStepRecord, state: Vec<f32>) {
        if self.agents.len() < agents.len() {
            self.agents.resize(agents.len(), Vec::new());
        }
        for r in agents {
            let i = r.agent;
            self.agents[i].push(r);
        }
        self.joint.push(joint);
        self.states.push(state);
    }

    fn finish(&mut self, final_state: Vec<f32>, summary: &EpisodeSummary) {
        self.states.push(final_state);
        self.terminal = summary.terminal;
    }
}

/// On-policy episode store: filled between training rounds, then cleared.
#[derive(Debug, Clone, Default)]
pub struct EpisodeBuffer {
    episodes: Vec<EpisodeLog>,
}

impl EpisodeBuffer {
    pub fn push(&mut self, log: EpisodeLog) {
        self.episodes.push(log);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn episodes(&self) -> &[EpisodeLog] {
        &self.episodes
    }

    /// Hands the episodes to the learner and resets the buffer.
    pub fn drain(&mut self) -> Vec<EpisodeLog> {
        std::mem::take(&mut self.episodes)
    }
}

/// How the episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeEnd {
    /// Reached a terminal state; otherwise it was cut at the horizon.
    pub terminal: bool,
}

/// `sum_k gamma^k r_k`.
pub fn cumulative_reward(rewards: &[f64], gamma: f64) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::EmptyRewards);
    }
    let mut acc = 0.0;
    let mut disc = 1.0;
    for &r in rewards {
        acc += disc * r;
        disc *= gamma;
    }
    Ok(acc)
}

/// A macro-level transition of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedTransition {
    pub z: MacroObs,
    pub m: MacroId,
    pub z_next: MacroObs,
    /// Discounted reward accumulated over the segment.
    pub reward: f64,
    /// Duration in primitive steps.
    pub tau: usize,
    pub t_start: usize,
    /// Segment ends in a terminal state: no bootstrap.
    pub terminal: bool,
    /// Macro was still running when the horizon cut the episode.
    pub truncated: bool,
}

/// A macro-level transition of the team, segmented at joint terminations.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSqueezedTransition {
    pub z: Vec<MacroObs>,
    pub m: Vec<MacroId>,
    pub z_next: Vec<MacroObs>,
    pub reward: f64,
    pub tau: usize,
    pub t_start: usize,
    pub terminal: bool,
    pub truncated: bool,
    /// Agents that selected a new macro at `t_start`.
    pub fresh: Vec<bool>,
    /// Agents whose macro ended at the last step of the segment.
    pub ended: Vec<bool>,
}

fn check_contiguous(ts: impl Iterator<Item = usize>) -> Result<()> {
    for (k, t) in ts.enumerate() {
        if t != k {
            return Err(Error::RecordGap {
                expected: k,
                found: t,
            });
        }
    }
    Ok(())
}

/// Segments agent records at the agent's own macro terminations.
pub fn squeeze_agent(
    records: &[StepRecord],
    gamma: f64,
    end: EpisodeEnd,
) -> Result<Vec<SqueezedTransition>> {
    check_contiguous(records.iter().map(|r| r.t))?;
    let last = records.len().saturating_sub(1);
    let mut out = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    let mut disc = 1.0;
    for (k, rec) in records.iter().enumerate() {
        acc += disc * rec.r;
        disc *= gamma;
        if rec.terminated || k == last {
            let first = &records[start];
            out.push(SqueezedTransition {
                z: first.z.clone(),
                m: first.m,
                z_next: rec.z_next.clone(),
                reward: acc,
                tau: k + 1 - start,
                t_start: start,
                terminal: k == last && end.terminal,
                truncated: k == last && !end.terminal && !rec.terminated,
            });
            start = k + 1;
            acc = 0.0;
            disc = 1.0;
        }
    }
    Ok(out)
}

/// Segments joint records whenever any agent's macro terminates.
pub fn squeeze_joint(
    records: &[JointStepRecord],
    gamma: f64,
    end: EpisodeEnd,
) -> Result<Vec<JointSqueezedTransition>> {
    check_contiguous(records.iter().map(|r| r.t))?;
    let last = records.len().saturating_sub(1);
    let n = records.first().map_or(0, |r| r.m.len());
    let mut out = Vec::new();
    let mut start = 0;
    let mut fresh = vec![true; n];
    let mut acc = 0.0;
    let mut disc = 1.0;
    for (k, rec) in records.iter().enumerate() {
        if rec.m.len() != n {
            return Err(Error::LengthMismatch {
                what: "agents per joint record",
                left: n,
                right: rec.m.len(),
            });
        }
        acc += disc * rec.r;
        disc *= gamma;
        let any = rec.joint_terminated();
        if any || k == last {
            let first = &records[start];
            out.push(JointSqueezedTransition {
                z: first.z.clone(),
                m: first.m.clone(),
                z_next: rec.z_next.clone(),
                reward: acc,
                tau: k + 1 - start,
                t_start: start,
                terminal: k == last && end.terminal,
                truncated: k == last && !end.terminal && !any,
                fresh: std::mem::replace(&mut fresh, rec.terminated.clone()),
                ended: rec.terminated.clone(),
            });
            start = k + 1;
            acc = 0.0;
            disc = 1.0;
        }
    }
    Ok(out)
}

/// A critic row for one agent's individual centralized critic.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticRow {
    pub joint: JointSqueezedTransition,
    /// Agent i's macro ends with this row (including a final cut macro).
    pub mask: bool,
    /// Agent i's discounted reward since its own macro started; meaningful on masked rows.
    pub reward: f64,
    /// Duration of agent i's macro; meaningful on masked rows.
    pub tau: usize,
    /// Index of the row where agent i's macro started.
    pub start_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IaiccSequences {
    pub critic: Vec<CriticRow>,
    pub actor: Vec<SqueezedTransition>,
}

impl IaiccSequences {
    pub fn masked_rows(&self) -> impl Iterator<Item = (usize, &CriticRow)> {
        self.critic.iter().enumerate().filter(|(_, r)| r.mask)
    }
}

/// Joint-termination rows annotated with agent `agent`'s own accumulated
/// rewards, masked at the agent's own terminations, plus the agent's own
/// actor sequence.
pub fn squeeze_iaicc(
    records: &[JointStepRecord],
    agent_rewards: &[f64],
    agent: usize,
    gamma: f64,
    end: EpisodeEnd,
) -> Result<IaiccSequences> {
    if agent_rewards.len() != records.len() {
        return Err(Error::LengthMismatch {
            what: "agent reward stream vs joint records",
            left: agent_rewards.len(),
            right: records.len(),
        });
    }
    if let Some(r) = records.first() {
        if agent >= r.m.len() {
            return Err(Error::Invalid(format!(
                "agent {agent} out of range for {} agents",
                r.m.len()
            )));
        }
    }
    let joint = squeeze_joint(records, gamma, end)?;
    let own: Vec<StepRecord> = records
        .iter()
        .zip(agent_rewards)
        .map(|(j, &r)| StepRecord {
            r,
            ..j.agent_record(agent)
        })
        .collect();
    let actor = squeeze_agent(&own, gamma, end)?;

    let mut critic = Vec::with_capacity(joint.len());
    let mut seg = actor.iter();
    let mut start_row = 0;
    let last = joint.len().saturating_sub(1);
    for (k, row) in joint.into_iter().enumerate() {
        let mask = row.ended[agent] || k == last;
        let (reward, tau) = if mask {
            let s = seg.next().ok_or_else(|| {
                Error::Invalid("agent segments and joint rows disagree".into())
            })?;
            (s.reward, s.tau)
        } else {
            (0.0, 0)
        };
        critic.push(CriticRow {
            joint: row,
            mask,
            reward,
            tau,
            start_row,
        });
        if mask {
            start_row = k + 1;
        }
    }
    Ok(IaiccSequences { critic, actor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: f32) -> MacroObs {
        MacroObs(vec![v])
    }

    /// Agent records for macros of the given durations with the given rewards.
    fn agent_records(durations: &[usize], rewards: &[f64]) -> Vec<StepRecord> {
        let mut out = Vec::new();
        let mut t = 0;
        for (k, &d) in durations.iter().enumerate() {
            for s in 0..d {
                out.push(StepRecord {
                    t,
                    agent: 0,
                    z: obs(k as f32),
                    m: k,
                    r: rewards[t],
                    terminated: s + 1 == d,
                    z_next: obs(if s + 1 == d { k as f32 + 1.0 } else { k as f32 }),
                });
                t += 1;
            }
        }
        out
    }

    #[test]
    fn cumulative_reward_examples() {
        assert_eq!(cumulative_reward(&[0.0, 0.0, 0.0], 0.7).unwrap(), 0.0);
        assert_eq!(cumulative_reward(&[-1.0, -1.0, -1.0], 1.0).unwrap(), -3.0);
        let v = cumulative_reward(&[5.0, 0.0, 0.0, 100.0], 0.9).unwrap();
        assert!((v - 77.9).abs() < 1e-9);
        assert!(matches!(
            cumulative_reward(&[], 0.9),
            Err(Error::EmptyRewards)
        ));
    }

    #[test]
    fn durations_two_and_three() {
        let recs = agent_records(&[2, 3], &[1.0, 1.0, 2.0, 2.0, 2.0]);
        let sq = squeeze_agent(&recs, 1.0, EpisodeEnd { terminal: true }).unwrap();
        assert_eq!(sq.len(), 2);
        assert_eq!(sq[0].reward, 2.0);
        assert_eq!(sq[1].reward, 6.0);
        assert_eq!((sq[0].tau, sq[1].tau), (2, 3));
        assert_eq!((sq[0].t_start, sq[1].t_start), (0, 2));
        assert!(sq[1].terminal && !sq[0].terminal);
    }

    #[test]
    fn one_step_macros_squeeze_to_identity() {
        let rewards = [3.0, -1.0, 0.5, 2.0];
        let recs = agent_records(&[1, 1, 1, 1], &rewards);
        let sq = squeeze_agent(&recs, 0.9, EpisodeEnd { terminal: false }).unwrap();
        assert_eq!(sq.len(), recs.len());
        for (s, r) in sq.iter().zip(&recs) {
            assert_eq!(s.reward, r.r);
            assert_eq!(s.tau, 1);
            assert_eq!(s.z, r.z);
            assert_eq!(s.z_next, r.z_next);
            assert!(!s.truncated);
        }
    }

    #[test]
    fn gap_is_an_error() {
        let mut recs = agent_records(&[2, 1], &[0.0; 3]);
        recs.remove(1);
        assert!(matches!(
            squeeze_agent(&recs, 1.0, EpisodeEnd { terminal: false }),
            Err(Error::RecordGap {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn horizon_cut_macro_is_flagged_truncated() {
        let mut recs = agent_records(&[1, 3], &[1.0; 4]);
        recs.pop();
        let sq = squeeze_agent(&recs, 1.0, EpisodeEnd { terminal: false }).unwrap();
        assert_eq!(sq.len(), 2);
        assert!(sq[1].truncated && !sq[1].terminal);
        assert_eq!(sq[1].tau, 2);
    }

    fn joint_from_terminations(term: &[Vec<usize>], len: usize, rewards: &[f64]) -> Vec<JointStepRecord> {
        (0..len)
            .map(|t| JointStepRecord {
                t,
                z: vec![obs(0.0); term.len()],
                m: vec![0; term.len()],
                r: rewards[t],
                terminated: term.iter().map(|ts| ts.contains(&t)).collect(),
                z_next: vec![obs(0.0); term.len()],
            })
            .collect()
    }

    #[test]
    fn joint_boundaries_are_union_of_agent_terminations() {
        // Steps are numbered from 1 in the boundary description: agent A ends at
        // step 2, agent B at steps 1 and 3, horizon 4.
        let recs = joint_from_terminations(&[vec![1], vec![0, 2]], 4, &[1.0; 4]);
        let sq = squeeze_joint(&recs, 1.0, EpisodeEnd { terminal: false }).unwrap();
        let ends: Vec<usize> = sq.iter().map(|s| s.t_start + s.tau).collect();
        assert_eq!(ends, vec![1, 2, 3, 4]);
        assert!(sq[3].truncated);
        assert_eq!(sq[1].fresh, vec![false, true]);
        assert_eq!(sq[2].fresh, vec![true, false]);
    }

    #[test]
    fn joint_row_accumulates_two_steps() {
        // Agent 0 one-step macros, agent 1 a two-step macro after two one-step ones.
        let recs = joint_from_terminations(&[vec![0, 1, 3], vec![0, 1, 3]], 4, &[1.0, 2.0, 3.0, 4.0]);
        let sq = squeeze_joint(&recs, 0.5, EpisodeEnd { terminal: true }).unwrap();
        assert_eq!(sq.len(), 3);
        assert_eq!(sq[0].reward, 1.0);
        assert_eq!(sq[1].reward, 2.0);
        assert_eq!(sq[2].reward, 3.0 + 0.5 * 4.0);
        assert_eq!(sq[2].tau, 2);
    }

    #[test]
    fn iaicc_masks_follow_own_terminations() {
        let rewards = [1.0, 2.0, 3.0, 4.0, 5.0];
        let recs = joint_from_terminations(&[vec![1, 4], vec![0, 2, 3, 4]], 5, &rewards);
        let seqs = squeeze_iaicc(&recs, &rewards, 0, 0.9, EpisodeEnd { terminal: true }).unwrap();
        let masks: Vec<bool> = seqs.critic.iter().map(|r| r.mask).collect();
        assert_eq!(masks, vec![false, true, false, false, true]);
        let own: Vec<StepRecord> = recs.iter().map(|j| j.agent_record(0)).collect();
        let direct = squeeze_agent(&own, 0.9, EpisodeEnd { terminal: true }).unwrap();
        assert_eq!(seqs.actor, direct);
        let masked: Vec<(f64, usize, usize)> = seqs
            .masked_rows()
            .map(|(_, r)| (r.reward, r.tau, r.start_row))
            .collect();
        assert_eq!(masked[0], (direct[0].reward, 2, 0));
        assert_eq!(masked[1], (direct[1].reward, 3, 2));
    }

    #[test]
    fn iaicc_synchronized_agents_mask_everything() {
        let rewards = [1.0, 2.0, 3.0];
        let recs = joint_from_terminations(&[vec![0, 1, 2], vec![0, 1, 2]], 3, &rewards);
        let seqs = squeeze_iaicc(&recs, &rewards, 1, 0.9, EpisodeEnd { terminal: false }).unwrap();
        assert!(seqs.critic.iter().all(|r| r.mask));
        for (row, a) in seqs.critic.iter().zip(&seqs.actor) {
            assert_eq!(row.reward, a.reward);
            assert_eq!(row.joint.reward, a.reward);
        }
    }

    #[test]
    fn iaicc_rejects_mismatched_stream() {
        let recs = joint_from_terminations(&[vec![0], vec![0]], 1, &[1.0]);
        assert!(matches!(
            squeeze_iaicc(&recs, &[1.0, 2.0], 0, 1.0, EpisodeEnd { terminal: true }),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip_and_field_order() {
        let recs = joint_from_terminations(&[vec![0, 1], vec![1]], 2, &[1.5, -1.0]);
        let mut log = EpisodeLog::new(3);
        for j in &recs {
            log.record(
                (0..2).map(|i| j.agent_record(i)).collect(),
                j.clone(),
                vec![0.0],
            );
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ep.jsonl");
        log.write_jsonl(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with(r#"{"t":0,"agent":0,"z":"#), "{first}");
        let joint_line = text.lines().nth(2).unwrap();
        assert!(joint_line.starts_with(r#"{"t":0,"agent":null,"z":"#), "{joint_line}");
        let back = EpisodeLog::read_jsonl(&path).unwrap();
        assert_eq!(back.agents, log.agents);
        assert_eq!(back.joint, log.joint);
    }

    #[test]
    fn buffer_drain_resets() {
        let mut buf = EpisodeBuffer::default();
        buf.push(EpisodeLog::new(0));
        buf.push(EpisodeLog::new(0));
        assert_eq!(buf.drain().len(), 2);
        assert!(buf.is_empty());
    }
}
