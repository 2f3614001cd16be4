use crate::buffers::{JointSqueezedTransition, SqueezedTransition};
use crate::macdec::{MacroEnv, MacroId, MacroObs};

/// Input and output sizes of an environment as seen by the learners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvDims {
    pub obs: Vec<usize>,
    pub macros: Vec<usize>,
    pub state: usize,
}

impl EnvDims {
    pub fn of<E: MacroEnv>(env: &E) -> Self {
        let n = env.n_agents();
        EnvDims {
            obs: (0..n).map(|i| env.macro_obs_dim(i)).collect(),
            macros: (0..n).map(|i| env.n_macros(i)).collect(),
            state: env.state_dim(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.obs.len()
    }

    /// Width of agent `i`'s history input: macro-observation plus previous macro.
    pub fn local_dim(&self, i: usize) -> usize {
        self.obs[i] + self.macros[i]
    }

    pub fn joint_dim(&self) -> usize {
        (0..self.n_agents()).map(|i| self.local_dim(i)).sum()
    }

    /// Appends `[z, onehot(prev)]` for agent `i`; no previous macro encodes as zeros.
    pub fn push_local(&self, out: &mut Vec<f32>, i: usize, z: &MacroObs, prev: Option<MacroId>) {
        out.extend_from_slice(z.as_slice());
        let start = out.len();
        out.resize(start + self.macros[i], 0.0);
        if let Some(m) = prev {
            out[start + m] = 1.0;
        }
    }

    pub fn local_input(&self, i: usize, z: &MacroObs, prev: Option<MacroId>) -> Vec<f32> {
        let mut v = Vec::with_capacity(self.local_dim(i));
        self.push_local(&mut v, i, z, prev);
        v
    }

    pub fn joint_input(&self, z: &[MacroObs], prev: &[Option<MacroId>]) -> Vec<f32> {
        let mut v = Vec::with_capacity(self.joint_dim());
        for (i, zi) in z.iter().enumerate() {
            self.push_local(&mut v, i, zi, prev[i]);
        }
        v
    }

    /// History inputs at the start of each own-termination row, plus the input
    /// after the last row.
    pub fn local_sequence(&self, i: usize, rows: &[SqueezedTransition]) -> Vec<Vec<f32>> {
        let mut out = Vec::with_capacity(rows.len() + 1);
        let mut prev = None;
        for row in rows {
            out.push(self.local_input(i, &row.z, prev));
            prev = Some(row.m);
        }
        if let Some(last) = rows.last() {
            out.push(self.local_input(i, &last.z_next, prev));
        }
        out
    }

    /// Joint history inputs at each joint row start, plus the input after the
    /// last row. Each agent's previous macro is the one it ran in the previous
    /// joint row.
    pub fn joint_sequence(&self, rows: &[JointSqueezedTransition]) -> Vec<Vec<f32>> {
        let n = self.n_agents();
        let mut out = Vec::with_capacity(rows.len() + 1);
        let mut prev: Vec<Option<MacroId>> = vec![None; n];
        for row in rows {
            out.push(self.joint_input(&row.z, &prev));
            prev = row.m.iter().copied().map(Some).collect();
        }
        if let Some(last) = rows.last() {
            out.push(self.joint_input(&last.z_next, &prev));
        }
        out
    }

    /// State features at each joint row start, plus the final state.
    pub fn state_sequence(states: &[Vec<f32>], rows: &[JointSqueezedTransition]) -> Vec<Vec<f32>> {
        let mut out: Vec<Vec<f32>> = rows.iter().map(|r| states[r.t_start].clone()).collect();
        if let Some(last) = rows.last() {
            out.push(states[last.t_start + last.tau].clone());
        }
        out
    }
}
