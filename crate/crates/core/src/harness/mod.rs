//! Experiment driver: configuration, presets, trials, evaluation, summaries
//! and replays.

pub mod config;
pub mod presets;
pub mod replay;
pub mod summary;
pub mod trial;

pub use config::{EnvConfig, RunConfig};
pub use presets::{all_presets, preset, Method, Scale, PRESET_GAMMA};
pub use replay::{replay, replay_learner, Transcript};
pub use summary::{
    aggregate_curves, aggregate_dirs, read_eval_csv, read_summary, smooth, smooth_by_method,
    trial_dirs, write_summary, SummaryRow,
};
pub use trial::{
    derive_seed, evaluate, evaluate_config, learner_from_checkpoint, load_trial, run_trial, run_trials,
    seed_dir, EvalPoint, TrialResult, CHECKPOINT_FILE, CONFIG_FILE, DIAGNOSTICS_FILE, EVAL_FILE,
};
