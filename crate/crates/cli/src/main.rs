use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use macac_core::harness::{
    aggregate_dirs, all_presets, evaluate_config, load_trial, preset, read_summary, replay_learner,
    run_trials, smooth_by_method, write_summary, Method, RunConfig, Scale,
};

#[derive(Parser)]
#[command(name = "macac", version, about = "Macro-action multi-agent actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a run configuration.
    Train(TrainArgs),
    /// Evaluate trained checkpoints with exploration off.
    Eval(EvalArgs),
    /// Print a transcript of one episode of a trained policy.
    Replay(ReplayArgs),
    /// Mean and standard error across seeds per method.
    Aggregate(AggregateArgs),
    /// Smoothed plot-ready curves from an aggregate summary.
    Plotdata(PlotdataArgs),
    /// Write every preset configuration as a TOML file.
    Presets(PresetsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Full,
    Desk,
}

#[derive(Args)]
struct Selection {
    /// Run configuration file; overrides the preset selection.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment preset: box-pushing or warehouse.
    #[arg(long)]
    env: Option<String>,
    /// Box Pushing grid size.
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// Warehouse scenario.
    #[arg(long, default_value = "A")]
    scenario: String,
    /// Method: iac, cac, mac-iac, mac-cac, naive-mac-iacc or mac-iaicc.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
}

impl Selection {
    fn resolve(&self) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            return RunConfig::load(path).with_context(|| format!("loading {}", path.display()));
        }
        let (Some(env), Some(algo)) = (&self.env, &self.algo) else {
            bail!("either --config or both --env and --algo are required");
        };
        let scale = match self.scale {
            ScaleArg::Full => Scale::Full,
            ScaleArg::Desk => Scale::Desk,
        };
        let mut cfg = preset(env, self.size, Method::parse(algo)?, scale)?;
        if env == "warehouse" {
            cfg.env = macac_core::harness::EnvConfig::Warehouse {
                scenario: self.scenario.clone(),
            };
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    select: Selection,
    /// Train only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory; results go to `<out>/seed_<s>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (one seed per thread).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Trial directory, or a run directory holding `seed_*` trials.
    #[arg(long)]
    out: PathBuf,
    /// Seed of the evaluation episodes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trial directory holding `config.toml` and `checkpoint.bin`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
}

#[derive(Args)]
struct AggregateArgs {
    /// Run or trial directories.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Summary CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Summary CSV written by `aggregate`.
    summary: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Centered moving-average window.
    #[arg(long, default_value_t = 10)]
    window: usize,
}

#[derive(Args)]
struct PresetsArgs {
    #[arg(long)]
    out: PathBuf,
}

fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = args.select.resolve()?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(n) = args.episodes {
        cfg.episodes = n;
    }
    let out = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .context("--out is required when the config has no out_dir")?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let results = run_trials(&cfg, &out, args.threads)?;
    for r in results {
        println!(
            "seed {} final mean return {:.4} -> {}",
            r.seed,
            r.final_return().unwrap_or(f64::NAN),
            r.dir.display()
        );
    }
    Ok(())
}

fn trials_under(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join("checkpoint.bin").is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)
        .with_context(|| format!("reading {}", path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("checkpoint.bin").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no checkpoints under {}", path.display());
    }
    Ok(dirs)
}

fn eval(args: EvalArgs) -> Result<()> {
    for dir in trials_under(&args.out)? {
        let (cfg, learner) = load_trial(&dir)?;
        let p = evaluate_config(&cfg, &learner, args.seed, args.episodes)?;
        println!("{} {} mean discounted return {:.4}", dir.display(), cfg.method(), p.mean_return);
    }
    Ok(())
}

fn replay(args: ReplayArgs) -> Result<()> {
    let (cfg, learner) = load_trial(&args.out)?;
    let t = replay_learner(&cfg, &learner, args.seed, args.epsilon)?;
    print!("{}", t.text());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Replay(a) => replay(a),
        Command::Aggregate(a) => {
            let rows = aggregate_dirs(&a.runs)?;
            write_summary(&a.out, &rows)?;
            println!("{} rows -> {}", rows.len(), a.out.display());
            Ok(())
        }
        Command::Plotdata(a) => {
            let rows = smooth_by_method(&read_summary(&a.summary)?, a.window);
            write_summary(&a.out, &rows)?;
            println!("{} rows -> {}", rows.len(), a.out.display());
            Ok(())
        }
        Command::Presets(a) => {
            std::fs::create_dir_all(&a.out)?;
            for (name, cfg) in all_presets() {
                cfg.save(&a.out.join(format!("{name}.toml")))?;
            }
            Ok(())
        }
    }
}
