use anyhow::{bail, Result};
use egoloc::data::{synth_generate, window_samples_with_len, ClassCounts, NormStats, SceneSpec};
use egoloc::numerics::GradCheckReport;
use egoloc::seq2seq::{FaultInjection, ModelConfig, Seq2Seq};

/// Default acceptance threshold on the relative gradient error.
pub const THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckArgs {
    pub seed: u64,
    pub step: f64,
    pub teacher_forcing: f64,
    pub fault: Option<FaultInjection>,
}

impl Default for GradcheckArgs {
    fn default() -> Self {
        Self {
            seed: 0,
            step: 1e-5,
            teacher_forcing: 0.5,
            fault: None,
        }
    }
}

/// Finite-difference check of the reduced full-cue network on two synthetic windows.
pub fn run(args: &GradcheckArgs) -> Result<GradCheckReport> {
    let cfg = ModelConfig::tiny();
    let spec = SceneSpec {
        seed: args.seed,
        counts: ClassCounts {
            toward: 1,
            away: 1,
            across: 1,
            still: 1,
        },
        ..SceneSpec::default()
    };
    let windows: Vec<_> = synth_generate(&spec)?
        .iter()
        .map(|c| window_samples_with_len(c, cfg.window_len(), 7))
        .collect::<egoloc::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .take(2)
        .collect();
    if windows.is_empty() {
        bail!("synthetic data produced no windows for the gradient check");
    }
    let norm = NormStats::fit(&windows);
    let mut model = Seq2Seq::init(cfg, args.seed)?;
    model.set_fault_injection(args.fault);
    let samples = windows
        .iter()
        .map(|w| model.prepare(&norm.normalize(w)))
        .collect::<egoloc::Result<Vec<_>>>()?;
    Ok(model.gradient_check(&samples, args.teacher_forcing, args.seed, args.step)?)
}

/// Human-readable per-group table.
pub fn format_report(seed: u64, report: &GradCheckReport, threshold: f64) -> String {
    let mut s = format!("seed {seed}\n");
    for g in &report.groups {
        let flag = if g.max_relative_error < threshold { "ok" } else { "FAIL" };
        s.push_str(&format!(
            "  {:<22} {:>6}  max rel err {:.3e}  {flag}\n",
            g.name, g.numel, g.max_relative_error
        ));
    }
    s
}
