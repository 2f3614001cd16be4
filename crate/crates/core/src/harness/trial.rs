use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, RunConfig};
use crate::algorithms::{EnvDims, Learner, RoundReport};
use crate::buffers::{cumulative_reward, EpisodeBuffer, EpisodeLog};
use crate::error::{Error, Result};
use crate::macdec::{run_episode, EpisodeOptions, MacroEnv, NullRecorder};
use crate::nn::Checkpoint;

pub const CONFIG_FILE: &str = "config.toml";
pub const EVAL_FILE: &str = "eval.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

const TRAIN_STREAM: u64 = 1;
const EVAL_STREAM: u64 = 2;

/// The `index`-th seed of an independent stream derived from `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Test returns at one point of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    /// Training episodes completed before the evaluation.
    pub episode: usize,
    pub mean_return: f64,
    pub returns: Vec<f64>,
}

impl EvalPoint {
    pub fn new(episode: usize, returns: Vec<f64>) -> Self {
        let mean_return = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
        EvalPoint {
            episode,
            mean_return,
            returns,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    pub dir: PathBuf,
    pub evals: Vec<EvalPoint>,
}

impl TrialResult {
    pub fn final_return(&self) -> Option<f64> {
        self.evals.last().map(|e| e.mean_return)
    }
}

/// Mean discounted return of the current policy, sampled with exploration off.
/// The evaluation seeds are the same at every call for a given trial seed.
pub fn evaluate<E: MacroEnv>(
    env: &mut E,
    learner: &Learner,
    trial_seed: u64,
    episodes: usize,
    at_episode: usize,
) -> Result<EvalPoint> {
    let mut returns = Vec::with_capacity(episodes);
    for j in 0..episodes {
        let opts = EpisodeOptions {
            epsilon: 0.0,
            gamma: learner.config().gamma,
            seed: derive_seed(trial_seed, EVAL_STREAM, j as u64),
        };
        let summary = run_episode(env, &mut learner.policy(), &opts, &mut NullRecorder)?;
        returns.push(summary.discounted_return);
    }
    Ok(EvalPoint::new(at_episode, returns))
}

pub(crate) fn eval_header(n: usize) -> Vec<String> {
    let mut h = vec!["episode".to_string(), "mean_return".to_string()];
    h.extend((0..n).map(|i| format!("ret_{i}")));
    h
}

struct TrialWriter {
    eval: csv::Writer<File>,
    diagnostics: csv::Writer<File>,
}

impl TrialWriter {
    fn create(dir: &Path, eval_episodes: usize) -> Result<Self> {
        let open = |name: &str| -> Result<csv::Writer<File>> {
            let path = dir.join(name);
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f))
        };
        let mut eval = open(EVAL_FILE)?;
        eval.write_record(eval_header(eval_episodes))?;
        eval.flush().map_err(|e| Error::io(dir.join(EVAL_FILE), e))?;
        let mut diagnostics = open(DIAGNOSTICS_FILE)?;
        diagnostics.write_record([
            "round",
            "episode",
            "train_return",
            "mean_abs_td",
            "critic_loss",
            "critic_grad_norm",
            "actor_loss",
            "actor_entropy",
            "actor_grad_norm",
        ])?;
        Ok(TrialWriter { eval, diagnostics })
    }

    fn eval_point(&mut self, p: &EvalPoint) -> Result<()> {
        let mut row = vec![p.episode.to_string(), p.mean_return.to_string()];
        row.extend(p.returns.iter().map(f64::to_string));
        self.eval.write_record(&row)?;
        self.eval.flush().map_err(|e| Error::Invalid(e.to_string()))
    }

    fn round(&mut self, episode: usize, train_return: f64, r: &RoundReport) -> Result<()> {
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        self.diagnostics.write_record([
            r.version.to_string(),
            episode.to_string(),
            train_return.to_string(),
            r.mean_abs_td.to_string(),
            mean(&r.critic_loss).to_string(),
            mean(&r.critic_grad_norm).to_string(),
            mean(&r.actor_loss).to_string(),
            mean(&r.actor_entropy).to_string(),
            mean(&r.actor_grad_norm).to_string(),
        ])?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.diagnostics.flush().map_err(|e| Error::Invalid(e.to_string()))?;
        self.eval.flush().map_err(|e| Error::Invalid(e.to_string()))
    }
}

fn train_in<E: MacroEnv>(mut env: E, cfg: &RunConfig, seed: u64, dir: &Path) -> Result<TrialResult> {
    let lc = &cfg.learner;
    let mut learner = Learner::new(lc.clone(), EnvDims::of(&env), seed)?;
    let mut out = TrialWriter::create(dir, cfg.eval_episodes)?;
    let mut buffer = EpisodeBuffer::default();
    let mut evals = Vec::new();
    let mut eval_at = |env: &mut E, learner: &Learner, ep: usize, out: &mut TrialWriter| -> Result<()> {
        let p = evaluate(env, learner, seed, cfg.eval_episodes, ep)?;
        out.eval_point(&p)?;
        evals.push(p);
        Ok(())
    };
    for ep in 0..cfg.episodes {
        if ep % cfg.eval_period == 0 {
            eval_at(&mut env, &learner, ep, &mut out)?;
        }
        let mut log = EpisodeLog::new(learner.version());
        let opts = EpisodeOptions {
            epsilon: lc.epsilon(ep),
            gamma: lc.gamma,
            seed: derive_seed(seed, TRAIN_STREAM, ep as u64),
        };
        run_episode(&mut env, &mut learner.policy(), &opts, &mut log)?;
        buffer.push(log);
        if buffer.len() == lc.episodes_per_train {
            let batch = buffer.drain();
            let mut train_return = 0.0;
            for e in &batch {
                train_return += cumulative_reward(&e.rewards(), lc.gamma).unwrap_or(0.0);
            }
            let report = learner.train_round(&batch)?;
            out.round(ep + 1, train_return / batch.len() as f64, &report)?;
        }
        if (ep + 1) % lc.target_update_episodes == 0 {
            learner.sync_targets();
        }
    }
    if cfg.episodes % cfg.eval_period == 0 {
        eval_at(&mut env, &learner, cfg.episodes, &mut out)?;
    }
    out.finish()?;
    learner.to_checkpoint(&cfg.hash()?).save(&dir.join(CHECKPOINT_FILE))?;
    Ok(TrialResult {
        seed,
        dir: dir.to_path_buf(),
        evals,
    })
}

/// Trains one seed into `dir`: config, evaluation CSV, diagnostics and the
/// final checkpoint.
pub fn run_trial(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<TrialResult> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut stored = cfg.clone();
    stored.seeds = vec![seed];
    stored.out_dir = None;
    stored.save(&dir.join(CONFIG_FILE))?;
    match &cfg.env {
        EnvConfig::BoxPushing { .. } => train_in(cfg.env.box_pushing()?, &stored, seed, dir),
        EnvConfig::Warehouse { .. } => train_in(cfg.env.warehouse()?, &stored, seed, dir),
    }
}

pub fn seed_dir(base: &Path, seed: u64) -> PathBuf {
    base.join(format!("seed_{seed}"))
}

/// Runs every configured seed under `base/seed_<s>`, using up to `threads`
/// worker threads. Results come back in seed order.
pub fn run_trials(cfg: &RunConfig, base: &Path, threads: usize) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrialResult>>>> =
        Mutex::new((0..cfg.seeds.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, cfg.seeds.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&seed) = cfg.seeds.get(k) else { break };
                let r = run_trial(cfg, seed, &seed_dir(base, seed));
                results.lock().expect("no poisoned workers")[k] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

/// Loads a trial directory's configuration and checkpoint into a learner.
pub fn load_trial(dir: &Path) -> Result<(RunConfig, Learner)> {
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let ck = Checkpoint::load(&dir.join(CHECKPOINT_FILE))?;
    let learner = learner_from_checkpoint(&cfg, &ck)?;
    Ok((cfg, learner))
}

pub fn learner_from_checkpoint(cfg: &RunConfig, ck: &Checkpoint) -> Result<Learner> {
    if ck.meta.config_hash != cfg.hash()? {
        return Err(Error::Checkpoint(
            "checkpoint was written by a different configuration".into(),
        ));
    }
    let dims = match &cfg.env {
        EnvConfig::BoxPushing { .. } => EnvDims::of(&cfg.env.box_pushing()?),
        EnvConfig::Warehouse { .. } => EnvDims::of(&cfg.env.warehouse()?),
    };
    Learner::from_checkpoint(cfg.learner.clone(), dims, ck)
}

/// Evaluates a trained learner on `episodes` fresh episodes derived from `seed`.
pub fn evaluate_config(cfg: &RunConfig, learner: &Learner, seed: u64, episodes: usize) -> Result<EvalPoint> {
    match &cfg.env {
        EnvConfig::BoxPushing { .. } => evaluate(&mut cfg.env.box_pushing()?, learner, seed, episodes, 0),
        EnvConfig::Warehouse { .. } => evaluate(&mut cfg.env.warehouse()?, learner, seed, episodes, 0),
    }
}
