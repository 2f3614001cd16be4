//! The recurrent network shared by every actor and critic:
//! `FC(LeakyReLU) -> FC(LeakyReLU) -> GRU -> FC(LeakyReLU) -> linear head`,
//! with a hand-written backward pass through time.
//!
//! Parameters live in one flat buffer described by a [`ParamLayout`]; this keeps
//! the optimizer, finite-difference checker and checkpoint code trivial.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumCast};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative slope of every LeakyReLU in the network.
pub const LEAKY_SLOPE: f64 = 0.01;

pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {}
impl<T: Float + FromPrimitive + Debug + Send + Sync + 'static> Scalar for T {}

#[inline]
fn c<F: Scalar>(x: f64) -> F {
    F::from_f64(x).unwrap()
}

/// Layer widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSizes {
    pub input: usize,
    pub fc1: usize,
    pub fc2: usize,
    pub gru: usize,
    pub fc3: usize,
}

impl LayerSizes {
    /// 32/32/32/32: decentralized actors and critics.
    pub fn decentralized(input: usize) -> Self {
        LayerSizes {
            input,
            fc1: 32,
            fc2: 32,
            gru: 32,
            fc3: 32,
        }
    }

    /// 32/32/64/32: centralized actors and critics.
    pub fn centralized(input: usize) -> Self {
        LayerSizes {
            input,
            fc1: 32,
            fc2: 32,
            gru: 64,
            fc3: 32,
        }
    }
}

/// What the linear output layer feeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadKind {
    /// One softmax per group; a single group is an ordinary policy head, several
    /// groups form a factored joint policy.
    Policy { groups: Vec<usize> },
    /// A single scalar value.
    Value,
}

impl HeadKind {
    pub fn policy(n: usize) -> Self {
        HeadKind::Policy { groups: vec![n] }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            HeadKind::Policy { groups } => groups.iter().sum(),
            HeadKind::Value => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub sizes: LayerSizes,
    pub head: HeadKind,
}

impl Architecture {
    pub fn new(sizes: LayerSizes, head: HeadKind) -> Self {
        Architecture { sizes, head }
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    /// Closed-form parameter count.
    pub fn param_count(&self) -> usize {
        let s = &self.sizes;
        let out = self.output_dim();
        (s.input + 1) * s.fc1
            + (s.fc1 + 1) * s.fc2
            + 3 * s.gru * (s.fc2 + s.gru + 2)
            + (s.gru + 1) * s.fc3
            + (s.fc3 + 1) * out
    }

    pub fn layout(&self) -> ParamLayout {
        let s = &self.sizes;
        let out = self.output_dim();
        let mut layout = ParamLayout::default();
        layout.push("fc1.weight", &[s.fc1, s.input]);
        layout.push("fc1.bias", &[s.fc1]);
        layout.push("fc2.weight", &[s.fc2, s.fc1]);
        layout.push("fc2.bias", &[s.fc2]);
        layout.push("gru.weight_ih", &[3 * s.gru, s.fc2]);
        layout.push("gru.weight_hh", &[3 * s.gru, s.gru]);
        layout.push("gru.bias_ih", &[3 * s.gru]);
        layout.push("gru.bias_hh", &[3 * s.gru]);
        layout.push("fc3.weight", &[s.fc3, s.gru]);
        layout.push("fc3.bias", &[s.fc3]);
        layout.push("head.weight", &[out, s.fc3]);
        layout.push("head.bias", &[out]);
        layout
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamEntry {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamLayout {
    pub entries: Vec<ParamEntry>,
}

impl ParamLayout {
    fn push(&mut self, name: &'static str, shape: &[usize]) {
        let offset = self.total();
        let len = shape.iter().product();
        self.entries.push(ParamEntry {
            name,
            shape: shape.to_vec(),
            offset,
            len,
        });
    }

    pub fn total(&self) -> usize {
        self.entries.last().map_or(0, |e| e.offset + e.len)
    }

    pub fn name_of(&self, index: usize) -> &'static str {
        self.entries
            .iter()
            .find(|e| index >= e.offset && index < e.offset + e.len)
            .map_or("<out of range>", |e| e.name)
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        let e = &self.entries[i];
        e.offset..e.offset + e.len
    }
}

// Indices into `ParamLayout::entries`.
const FC1_W: usize = 0;
const FC1_B: usize = 1;
const FC2_W: usize = 2;
const FC2_B: usize = 3;
const GRU_WIH: usize = 4;
const GRU_WHH: usize = 5;
const GRU_BIH: usize = 6;
const GRU_BHH: usize = 7;
const FC3_W: usize = 8;
const FC3_B: usize = 9;
const HEAD_W: usize = 10;
const HEAD_B: usize = 11;

/// Flat gradient buffer matching a network's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub values: Vec<F>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros(n: usize) -> Self {
        Gradients {
            values: vec![F::zero(); n],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<F>) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + *b;
        }
    }

    pub fn scale(&mut self, k: F) {
        for v in &mut self.values {
            *v = *v * k;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| {
                let v = v.to_f64().unwrap();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentNet<F = f32> {
    arch: Architecture,
    layout: ParamLayout,
    params: Vec<F>,
}

/// Activations of one time step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache<F> {
    x: Vec<F>,
    a1: Vec<F>,
    h1: Vec<F>,
    a2: Vec<F>,
    h2: Vec<F>,
    h_prev: Vec<F>,
    r: Vec<F>,
    z: Vec<F>,
    n: Vec<F>,
    hn: Vec<F>,
    h: Vec<F>,
    a3: Vec<F>,
    h3: Vec<F>,
}

#[derive(Debug, Clone)]
pub struct SequenceCache<F> {
    steps: Vec<StepCache<F>>,
}

impl<F> SequenceCache<F> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Pre-activations of every LeakyReLU unit, in step order. Used to detect
    /// kinks when checking gradients numerically.
    pub fn leaky_preactivations(&self) -> impl Iterator<Item = &F> {
        self.steps
            .iter()
            .flat_map(|s| s.a1.iter().chain(&s.a2).chain(&s.a3))
    }
}

/// Result of [`RecurrentNet::forward_sequence`].
#[derive(Debug, Clone)]
pub struct SequenceOutput<F> {
    /// Raw head outputs (logits, or the value itself).
    pub logits: Vec<Vec<F>>,
    /// Per-group softmax probabilities for a policy head; the value for a value head.
    pub outputs: Vec<Vec<F>>,
    pub final_hidden: Vec<F>,
    pub cache: SequenceCache<F>,
}

fn leaky<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        x * c(LEAKY_SLOPE)
    }
}

fn leaky_grad<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        F::one()
    } else {
        c(LEAKY_SLOPE)
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `out = W x + b` with `W` row-major `[out, in]`.
fn affine<F: Scalar>(w: &[F], b: &[F], x: &[F]) -> Vec<F> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &w[o * n_in..(o + 1) * n_in];
            row.iter().zip(x).fold(bias, |acc, (&wi, &xi)| acc + wi * xi)
        })
        .collect()
}

/// `out += W^T g`.
fn affine_t_acc<F: Scalar>(w: &[F], g: &[F], out: &mut [F]) {
    let n_in = out.len();
    for (o, &go) in g.iter().enumerate() {
        if go == F::zero() {
            continue;
        }
        let row = &w[o * n_in..(o + 1) * n_in];
        for (acc, &wi) in out.iter_mut().zip(row) {
            *acc = *acc + wi * go;
        }
    }
}

/// `dW += g x^T`, `db += g`.
fn outer_acc<F: Scalar>(dw: &mut [F], db: &mut [F], g: &[F], x: &[F]) {
    let n_in = x.len();
    for (o, &go) in g.iter().enumerate() {
        if go == F::zero() {
            continue;
        }
        db[o] = db[o] + go;
        let row = &mut dw[o * n_in..(o + 1) * n_in];
        for (acc, &xi) in row.iter_mut().zip(x) {
            *acc = *acc + go * xi;
        }
    }
}

/// Numerically stable softmax applied independently to each group.
pub fn grouped_softmax<F: Scalar>(logits: &[F], groups: &[usize]) -> Vec<F> {
    let mut out = Vec::with_capacity(logits.len());
    let mut start = 0;
    for &g in groups {
        let seg = &logits[start..start + g];
        let max = seg.iter().copied().fold(F::neg_infinity(), F::max);
        let exps: Vec<F> = seg.iter().map(|&l| (l - max).exp()).collect();
        let sum = exps.iter().copied().fold(F::zero(), |a, b| a + b);
        out.extend(exps.into_iter().map(|e| e / sum));
        start += g;
    }
    out
}

impl<F: Scalar> RecurrentNet<F> {
    /// All-zero parameters.
    pub fn zeros(arch: Architecture) -> Self {
        let layout = arch.layout();
        let params = vec![F::zero(); layout.total()];
        RecurrentNet {
            arch,
            layout,
            params,
        }
    }

    /// Fan-in scaled uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut net = Self::zeros(arch);
        let layout = net.layout.clone();
        for entry in &layout.entries {
            if entry.shape.len() != 2 {
                continue;
            }
            let fan_in = entry.shape[1] as f64;
            let bound = 1.0 / fan_in.sqrt();
            for p in &mut net.params[entry.offset..entry.offset + entry.len] {
                *p = c(rng.gen_range(-bound..bound));
            }
        }
        net
    }

    pub fn from_params(arch: Architecture, params: Vec<F>) -> Result<Self> {
        let layout = arch.layout();
        if params.len() != layout.total() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: layout.total(),
                actual: params.len(),
            });
        }
        Ok(RecurrentNet {
            arch,
            layout,
            params,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.arch.sizes.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.arch.sizes.gru
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output_dim()
    }

    pub fn initial_hidden(&self) -> Vec<F> {
        vec![F::zero(); self.arch.sizes.gru]
    }

    /// Element-wise conversion to another float type.
    pub fn cast<G: Scalar>(&self) -> RecurrentNet<G> {
        RecurrentNet {
            arch: self.arch.clone(),
            layout: self.layout.clone(),
            params: self
                .params
                .iter()
                .map(|&p| <G as NumCast>::from(p).unwrap())
                .collect(),
        }
    }

    fn p(&self, i: usize) -> &[F] {
        &self.params[self.layout.range(i)]
    }

    fn step_cached(&self, x: &[F], h_prev: &[F]) -> (Vec<F>, StepCache<F>) {
        let g = self.arch.sizes.gru;
        let a1 = affine(self.p(FC1_W), self.p(FC1_B), x);
        let h1: Vec<F> = a1.iter().map(|&v| leaky(v)).collect();
        let a2 = affine(self.p(FC2_W), self.p(FC2_B), &h1);
        let h2: Vec<F> = a2.iter().map(|&v| leaky(v)).collect();

        let gi = affine(self.p(GRU_WIH), self.p(GRU_BIH), &h2);
        let gh = affine(self.p(GRU_WHH), self.p(GRU_BHH), h_prev);
        let mut r = Vec::with_capacity(g);
        let mut z = Vec::with_capacity(g);
        let mut n = Vec::with_capacity(g);
        let mut hn = Vec::with_capacity(g);
        let mut h = Vec::with_capacity(g);
        for k in 0..g {
            let rk = sigmoid(gi[k] + gh[k]);
            let zk = sigmoid(gi[g + k] + gh[g + k]);
            let hnk = gh[2 * g + k];
            let nk = (gi[2 * g + k] + rk * hnk).tanh();
            h.push((F::one() - zk) * nk + zk * h_prev[k]);
            r.push(rk);
            z.push(zk);
            n.push(nk);
            hn.push(hnk);
        }

        let a3 = affine(self.p(FC3_W), self.p(FC3_B), &h);
        let h3: Vec<F> = a3.iter().map(|&v| leaky(v)).collect();
        let logits = affine(self.p(HEAD_W), self.p(HEAD_B), &h3);
        let cache = StepCache {
            x: x.to_vec(),
            a1,
            h1,
            a2,
            h2,
            h_prev: h_prev.to_vec(),
            r,
            z,
            n,
            hn,
            h,
            a3,
            h3,
        };
        (logits, cache)
    }

    fn activate(&self, logits: &[F]) -> Vec<F> {
        match &self.arch.head {
            HeadKind::Policy { groups } => grouped_softmax(logits, groups),
            HeadKind::Value => logits.to_vec(),
        }
    }

    fn check_input(&self, x: &[F]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// One recurrent step without caching; advances `hidden` in place and
    /// returns the activated head output.
    pub fn step(&self, x: &[F], hidden: &mut Vec<F>) -> Result<Vec<F>> {
        self.check_input(x)?;
        if hidden.len() != self.hidden_dim() {
            return Err(Error::Dimension {
                what: "recurrent state",
                expected: self.hidden_dim(),
                actual: hidden.len(),
            });
        }
        let (logits, cache) = self.step_cached(x, hidden);
        *hidden = cache.h;
        Ok(self.activate(&logits))
    }

    pub fn forward_sequence(&self, inputs: &[Vec<F>], initial: &[F]) -> Result<SequenceOutput<F>> {
        if initial.len() != self.hidden_dim() {
            return Err(Error::Dimension {
                what: "recurrent state",
                expected: self.hidden_dim(),
                actual: initial.len(),
            });
        }
        let mut h = initial.to_vec();
        let mut logits = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            self.check_input(x)?;
            let (l, cache) = self.step_cached(x, &h);
            h.clone_from(&cache.h);
            outputs.push(self.activate(&l));
            logits.push(l);
            steps.push(cache);
        }
        Ok(SequenceOutput {
            logits,
            outputs,
            final_hidden: h,
            cache: SequenceCache { steps },
        })
    }

    /// Gradients of `sum_t mask_t * <output_grads_t, logits_t>` with respect to
    /// every parameter, i.e. the caller supplies dL/d(logits) per step and the
    /// pass propagates it through the head, the MLPs and the GRU (full BPTT).
    pub fn backward_sequence(
        &self,
        cache: &SequenceCache<F>,
        output_grads: &[Vec<F>],
        masks: &[F],
    ) -> Result<Gradients<F>> {
        let t_len = cache.steps.len();
        if output_grads.len() != t_len {
            return Err(Error::LengthMismatch {
                what: "output gradients vs cached steps",
                left: output_grads.len(),
                right: t_len,
            });
        }
        if masks.len() != t_len {
            return Err(Error::LengthMismatch {
                what: "masks vs cached steps",
                left: masks.len(),
                right: t_len,
            });
        }
        let s = self.arch.sizes;
        let g = s.gru;
        let out_dim = self.output_dim();
        let mut grads = Gradients::zeros(self.params.len());
        let mut split: Vec<&mut [F]> = Vec::with_capacity(12);
        {
            let mut rest: &mut [F] = &mut grads.values;
            for e in &self.layout.entries {
                let (head, tail) = rest.split_at_mut(e.len);
                split.push(head);
                rest = tail;
            }
        }
        let [d_fc1w, d_fc1b, d_fc2w, d_fc2b, d_wih, d_whh, d_bih, d_bhh, d_fc3w, d_fc3b, d_headw, d_headb]: [&mut [F]; 12] =
            split.try_into().expect("layout has 12 entries");

        let mut dh_next = vec![F::zero(); g];
        for t in (0..t_len).rev() {
            let st = &cache.steps[t];
            let go = &output_grads[t];
            if go.len() != out_dim {
                return Err(Error::Dimension {
                    what: "output gradient",
                    expected: out_dim,
                    actual: go.len(),
                });
            }
            let dlogit: Vec<F> = go.iter().map(|&v| v * masks[t]).collect();

            outer_acc(d_headw, d_headb, &dlogit, &st.h3);
            let mut dh3 = vec![F::zero(); s.fc3];
            affine_t_acc(self.p(HEAD_W), &dlogit, &mut dh3);
            let da3: Vec<F> = dh3
                .iter()
                .zip(&st.a3)
                .map(|(&d, &a)| d * leaky_grad(a))
                .collect();
            outer_acc(d_fc3w, d_fc3b, &da3, &st.h);
            let mut dh = dh_next.clone();
            affine_t_acc(self.p(FC3_W), &da3, &mut dh);

            let mut dgi = vec![F::zero(); 3 * g];
            let mut dgh = vec![F::zero(); 3 * g];
            let mut dh_prev = vec![F::zero(); g];
            for k in 0..g {
                let (r, z, n, hn) = (st.r[k], st.z[k], st.n[k], st.hn[k]);
                let dn = dh[k] * (F::one() - z);
                let dz = dh[k] * (st.h_prev[k] - n);
                dh_prev[k] = dh[k] * z;
                let dn_pre = dn * (F::one() - n * n);
                let dr = dn_pre * hn;
                let dr_pre = dr * r * (F::one() - r);
                let dz_pre = dz * z * (F::one() - z);
                dgi[k] = dr_pre;
                dgi[g + k] = dz_pre;
                dgi[2 * g + k] = dn_pre;
                dgh[k] = dr_pre;
                dgh[g + k] = dz_pre;
                dgh[2 * g + k] = dn_pre * r;
            }
            outer_acc(d_wih, d_bih, &dgi, &st.h2);
            outer_acc(d_whh, d_bhh, &dgh, &st.h_prev);
            affine_t_acc(self.p(GRU_WHH), &dgh, &mut dh_prev);
            let mut dh2 = vec![F::zero(); s.fc2];
            affine_t_acc(self.p(GRU_WIH), &dgi, &mut dh2);
            dh_next = dh_prev;

            let da2: Vec<F> = dh2
                .iter()
                .zip(&st.a2)
                .map(|(&d, &a)| d * leaky_grad(a))
                .collect();
            outer_acc(d_fc2w, d_fc2b, &da2, &st.h1);
            let mut dh1 = vec![F::zero(); s.fc1];
            affine_t_acc(self.p(FC2_W), &da2, &mut dh1);
            let da1: Vec<F> = dh1
                .iter()
                .zip(&st.a1)
                .map(|(&d, &a)| d * leaky_grad(a))
                .collect();
            outer_acc(d_fc1w, d_fc1b, &da1, &st.x);
        }
        Ok(grads)
    }
}
