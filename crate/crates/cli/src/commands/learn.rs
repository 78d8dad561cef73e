use std::io::Write;
use std::path::Path;

use bisim_core::learner::{
    train_separable_gaussian, train_tabular, HistoryRow, SeparableConfig, SeparableDistance, TabularConfig,
};
use bisim_core::mdp::{GaussianLinearMdp, StateBox, TanhGaussianPolicy};
use bisim_core::seed::derive_seed;
use bisim_core::textio::{format_metric, format_separable, MetricFile, MetricStatus};
use bisim_core::Error;

use super::{constant, emit, load_mdp, load_policy, out_dir, similarity, write_file};
use crate::config::Config;
use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "seed",
    "out",
    "workers",
    "mdp",
    "policy",
    "states",
    "actions",
    "reward_min",
    "reward_max",
    "discount",
    "model",
    "similarity",
    "c",
    "steps",
    "step_size",
    "batch_size",
    "samples",
    "tol",
    "state_dim",
    "action_dim",
    "max_power",
    "half_width",
];

pub fn write_history(path: &Path, history: &[HistoryRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let io = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(["step", "loss", "sup_error"]).map_err(io)?;
    for h in history {
        w.write_record([
            h.step.to_string(),
            h.loss.to_string(),
            h.sup_error.map_or_else(String::new, |e| e.to_string()),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes the partial history of a diverged run before reporting it.
fn on_divergence(dir: &Path, e: Error) -> CliError {
    if let Error::Diverged { step, history } = &e {
        if let Err(io) = write_history(&dir.join("history.csv"), history) {
            return io;
        }
        return CliError::Convergence(format!("training diverged at step {step}"));
    }
    e.into()
}

pub fn run(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    match cfg.str_or("model", "tabular") {
        "tabular" => tabular(cfg, out),
        "separable" => separable(cfg, out),
        other => Err(CliError::config(format!("unknown model `{other}` (tabular | separable)"))),
    }
}

fn tabular(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let mdp = load_mdp(cfg)?;
    let policy = load_policy(cfg, &mdp)?;
    let g = similarity(cfg, &mdp, &policy)?;
    let seed = super::seed(cfg)?;
    let defaults = TabularConfig::default();
    let tc = TabularConfig {
        c: constant(cfg, &mdp)?,
        steps: cfg.get_or("steps", defaults.steps)?,
        step_size: cfg.get_or("step_size", defaults.step_size)?,
        batch_size: cfg.get_or("batch_size", mdp.n_states())?,
        target_samples: cfg.get_or("samples", defaults.target_samples)?,
        batch_seed: seed,
        noise_seed: seed,
        reference_tol: cfg.get_or("tol", defaults.reference_tol)?,
        ..defaults
    };
    let t = train_tabular(&mdp, &policy, &g, &tc).map_err(|e| on_divergence(&dir, e))?;
    write_history(&dir.join("history.csv"), &t.history)?;
    let sup = t.sup_error();
    let file = MetricFile {
        metric: t.params.to_metric(),
        status: MetricStatus::Learned,
        iterations: tc.steps,
        residual: sup,
    };
    write_file(&dir.join("learned.txt"), format_metric(&file))?;
    let last = t.history.last().expect("steps >= 1");
    let mut line = format!(
        "learn tabular: {} steps, final loss {:.3e}, sup error vs exact {:.3e}",
        tc.steps, last.loss, sup
    );
    if mdp.n_states() >= 2 {
        line.push_str(&format!(", d(0,1) = {:.6}", t.params.distance(0, 1)));
    }
    emit(out, &line)
}

fn separable(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let seed = super::seed(cfg)?;
    let defaults = SeparableConfig::default();
    let c = cfg.get_or("c", defaults.c)?;
    if !(0.0..1.0).contains(&c) {
        return Err(CliError::config(format!("c = {c} must lie in [0, 1)")));
    }
    let n = cfg.get_or("state_dim", 3usize)?;
    let m = cfg.get_or("action_dim", 2usize)?;
    let testbed = GaussianLinearMdp::random(n, m, c, derive_seed(seed, "gen/testbed", 0))?;
    let policy = TanhGaussianPolicy::random(&testbed, derive_seed(seed, "gen/testbed-policy", 0));
    let states = StateBox::cube(n, cfg.get_or("half_width", 1.0)?)?;
    let sc = SeparableConfig {
        c,
        max_power: cfg.get_or("max_power", defaults.max_power)?,
        steps: cfg.get_or("steps", defaults.steps)?,
        step_size: cfg.get_or("step_size", defaults.step_size)?,
        batch_size: cfg.get_or("batch_size", defaults.batch_size)?,
        target_samples: cfg.get_or("samples", defaults.target_samples)?,
        batch_seed: seed,
        noise_seed: seed,
    };
    let init = SeparableDistance::zeros(n, sc.max_power)?;
    let t = train_separable_gaussian(&testbed, &policy, &states, init, &sc).map_err(|e| on_divergence(&dir, e))?;
    write_history(&dir.join("history.csv"), &t.history)?;
    write_file(&dir.join("separable.txt"), format_separable(&t.distance))?;
    let last = t.history.last().expect("steps >= 1");
    emit(
        out,
        &format!(
            "learn separable: {} steps, final loss {:.3e}, weight sum {:.6}",
            sc.steps,
            last.loss,
            t.distance.weights().iter().sum::<f64>()
        ),
    )
}
