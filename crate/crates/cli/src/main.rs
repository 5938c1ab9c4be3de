use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use egoloc::data::{Direction, SceneSpec, Split};
use egoloc::seq2seq::{FaultInjection, SeedMode, Variant};
use egoloc_cli::commands::{eval, gradcheck, plot, predict, synth, train};
use egoloc_cli::config::{Preset, RunConfig};

#[derive(Parser)]
#[command(name = "egoloc", version, about = "Future person-location prediction for egocentric video")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic clips and a manifest.
    Synth(SynthArgs),
    /// Train an encoder-decoder model.
    Train(TrainArgs),
    /// Evaluate baselines and checkpoints on the test split.
    Eval(EvalArgs),
    /// Write per-window predictions of one method.
    Predict(PredictArgs),
    /// Render prediction overlays as PNG images.
    Plot(PlotArgs),
    /// Compare analytic and finite-difference gradients on a reduced network.
    Gradcheck(GradcheckArgs),
}

/// Options shared by commands that read a dataset.
#[derive(Args)]
struct Common {
    /// Dataset directory (clip files plus manifest.json).
    #[arg(long, env = "EGOLOC_DATA")]
    data: Option<PathBuf>,
    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Starting defaults: standard, per-direction or overfit.
    #[arg(long, default_value = "standard")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Sliding-window stride in frames.
    #[arg(long)]
    stride: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::layered(RunConfig::preset(self.preset), self.config.as_deref())?;
        if let Some(d) = &self.data {
            cfg.data.root = Some(d.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.stride {
            cfg.data.stride = s;
        }
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description (TOML). Defaults apply when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the clip count of every class.
    #[arg(long)]
    per_class: Option<usize>,
    /// Share of each class assigned to the test split.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory for checkpoints, loss log and resolved config.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    variant: Option<Variant>,
    /// Train on one or more walking directions only.
    #[arg(long = "direction")]
    directions: Vec<Direction>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    teacher_forcing: Option<f64>,
    /// Keep only the first N training windows.
    #[arg(long)]
    max_windows: Option<usize>,
    /// Stop once the dropout-free training loss is below this value.
    #[arg(long)]
    stop_below: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory for report.txt, report.jsonl and predictions.jsonl.
    #[arg(long)]
    out: PathBuf,
    /// Trained model checkpoints to evaluate.
    #[arg(long = "checkpoint")]
    checkpoints: Vec<PathBuf>,
    /// Include the STATS and LR baselines.
    #[arg(long)]
    baselines: bool,
    /// Include ground truth scored as a prediction.
    #[arg(long)]
    truth: bool,
    /// Decoder seed: last_observed or oracle_next.
    #[arg(long)]
    seed_mode: Option<SeedMode>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, conflicts_with = "method")]
    checkpoint: Option<PathBuf>,
    /// Baseline to run instead of a checkpoint: stats or lr.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long)]
    seed_mode: Option<SeedMode>,
    /// Output predictions file (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    /// Predictions files written by `eval` or `predict`.
    #[arg(long = "predictions", required = true)]
    predictions: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Render at most this many samples.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to check, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = gradcheck::THRESHOLD)]
    threshold: f64,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth(a) => {
            let mut spec = match &a.spec {
                Some(p) => SceneSpec::load(p)?,
                None => SceneSpec::default(),
            };
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            if let Some(n) = a.per_class {
                for d in Direction::ALL {
                    *spec.counts.get_mut(d) = n;
                }
            }
            let summary = synth::run(&spec, &a.out, a.test_fraction)?;
            for (d, n) in &summary.per_class {
                println!("{:<8} {n}", d.as_str());
            }
            println!("test clips {}", summary.test_clips);
        }
        Command::Train(a) => {
            let mut cfg = a.common.resolve()?;
            if let Some(v) = a.variant {
                cfg.model.variant = v;
            }
            if !a.directions.is_empty() {
                cfg.data.directions = a.directions.clone();
            }
            if let Some(v) = a.epochs {
                cfg.train.epochs = v;
            }
            if let Some(v) = a.batch_size {
                cfg.train.batch_size = v;
            }
            if let Some(v) = a.hidden {
                cfg.model.hidden = v;
            }
            if let Some(v) = a.dropout {
                cfg.model.dropout = v;
            }
            if let Some(v) = a.lr {
                cfg.train.adam.learning_rate = v;
            }
            if let Some(v) = a.teacher_forcing {
                cfg.train.teacher_forcing = v;
            }
            if let Some(v) = a.max_windows {
                cfg.data.max_windows = Some(v);
            }
            let outcome = train::run(&cfg, &a.out, a.stop_below)?;
            println!(
                "trained {} epochs on {} windows; final loss {:.6e}; checkpoint {}",
                outcome.history.len(),
                outcome.train_windows,
                outcome.final_eval_loss,
                outcome.final_checkpoint.display()
            );
        }
        Command::Eval(a) => {
            let mut cfg = a.common.resolve()?;
            if let Some(m) = a.seed_mode {
                cfg.eval.seed_mode = m;
            }
            let mut methods = Vec::new();
            if a.baselines {
                methods.push(eval::Method::Stats);
                methods.push(eval::Method::Lr);
            }
            methods.extend(a.checkpoints.iter().cloned().map(eval::Method::Learned));
            if a.truth {
                methods.push(eval::Method::Truth);
            }
            eval::run(&cfg, &methods, &a.out)?;
        }
        Command::Predict(a) => {
            let mut cfg = a.common.resolve()?;
            if let Some(m) = a.seed_mode {
                cfg.eval.seed_mode = m;
            }
            let method = match (&a.checkpoint, a.method.as_deref()) {
                (Some(p), _) => eval::Method::Learned(p.clone()),
                (None, Some("stats")) => eval::Method::Stats,
                (None, Some("lr")) => eval::Method::Lr,
                (None, Some(other)) => anyhow::bail!("unknown method `{other}` (expected stats or lr)"),
                (None, None) => anyhow::bail!("pass --checkpoint or --method"),
            };
            let split = match a.split.as_str() {
                "train" => Split::Train,
                "test" => Split::Test,
                other => anyhow::bail!("unknown split `{other}`"),
            };
            let n = predict::run(&cfg, &method, split, &a.out)?;
            println!("wrote {n} predictions to {}", a.out.display());
        }
        Command::Plot(a) => {
            let cfg = a.common.resolve()?;
            let written = plot::run(&cfg, &a.predictions, &a.out, a.limit)?;
            println!("wrote {} images to {}", written.len(), a.out.display());
        }
        Command::Gradcheck(a) => {
            let mut worst = 0.0f64;
            for seed in a.seed..a.seed + a.seeds.max(1) {
                let args = gradcheck::GradcheckArgs {
                    seed,
                    step: a.step,
                    fault: a.inject_fault.then_some(FaultInjection::FlipForgetGate),
                    ..Default::default()
                };
                let report = gradcheck::run(&args)?;
                print!("{}", gradcheck::format_report(seed, &report, a.threshold));
                worst = worst.max(report.max_relative_error());
            }
            println!("max relative error {worst:.3e} (threshold {:.0e})", a.threshold);
            if !(worst < a.threshold) {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
