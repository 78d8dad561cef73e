use std::io::Write;
use std::path::Path;

use bisim_core::estimators::{bias_audit, EstimatorKind, EstimatorReport, SamplingMode};
use bisim_core::operators::{solve, ActionEmbedding, OperatorKind, StateMetric};
use bisim_core::textio::parse_metric;

use super::{constant, emit, load_mdp, load_policy, out_dir, read_file, similarity, write_file};
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
    "method",
    "mode",
    "similarity",
    "c",
    "samples",
    "pairs",
    "metric",
    "tol",
    "max_iter",
];

/// Column order of the estimate CSV.
pub const CSV_HEADER: [&str; 10] = ["method", "mode", "z", "z_prime", "n", "mean", "stderr", "exact", "bias", "seed"];

/// `all`, `diagonal`, `off-diagonal` or an explicit list `0-1,2-2`.
fn parse_pairs(text: &str, n: usize) -> CliResult<Vec<(usize, usize)>> {
    let all = (0..n).flat_map(|i| (i..n).map(move |j| (i, j)));
    Ok(match text {
        "all" => all.collect(),
        "diagonal" => (0..n).map(|i| (i, i)).collect(),
        "off-diagonal" => all.filter(|(i, j)| i != j).collect(),
        list => list
            .split(',')
            .map(|item| {
                let (a, b) = item
                    .split_once('-')
                    .ok_or_else(|| CliError::config(format!("pair `{item}` is not `i-j`")))?;
                let p = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&v| v < n)
                        .ok_or_else(|| CliError::config(format!("pair `{item}` is out of range")))
                };
                Ok((p(a)?, p(b)?))
            })
            .collect::<CliResult<_>>()?,
    })
}

pub fn write_csv(path: &Path, reports: &[EstimatorReport]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    let io = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record([
            r.method.to_string(),
            r.mode.to_string(),
            r.z.to_string(),
            r.z_prime.to_string(),
            r.n.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.exact.to_string(),
            r.bias.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let mdp = load_mdp(cfg)?;
    let policy = load_policy(cfg, &mdp)?;
    let g = similarity(cfg, &mdp, &policy)?;
    let c = constant(cfg, &mdp)?;
    let method = cfg.str_or("method", "eps");
    // dbc and psm only sample independently, so that is their default
    let default_mode = if method == "eps" { "entangled" } else { "independent" };
    let mode: SamplingMode = cfg
        .str_or("mode", default_mode)
        .parse()
        .map_err(|e: bisim_core::Error| CliError::config(e.to_string()))?;
    let embedding = ActionEmbedding::one_hot(mdp.n_actions());
    let (kind, reference_op) = match method {
        "eps" => (EstimatorKind::Eps { g: g.clone(), mode }, OperatorKind::EpsBar(g)),
        "dbc" => (EstimatorKind::Dbc, OperatorKind::DbcStyle),
        "psm" => (EstimatorKind::Psm(embedding.clone()), OperatorKind::PsmStyle(embedding)),
        other => return Err(CliError::config(format!("unknown method `{other}` (eps | dbc | psm)"))),
    };
    if kind.mode() != mode {
        return Err(CliError::config(format!("method {} only samples independently", kind.method())));
    }
    // the metric d plugged into the target; defaults to the method's own fixed point
    let d: StateMetric = match cfg.str("metric") {
        Some(path) => parse_metric(&read_file(Path::new(path))?)?.metric,
        None => {
            let tol = cfg.get_or("tol", 1e-10)?;
            let max_iter = cfg.get_or("max_iter", 100_000usize)?;
            solve(&reference_op, &mdp, &policy, c, tol, max_iter)?.metric
        }
    };
    let pairs = parse_pairs(cfg.str_or("pairs", "all"), mdp.n_states())?;
    let samples = cfg.get_or("samples", 10_000usize)?;
    let seed = super::seed(cfg)?;
    let reports = bias_audit(&kind, &mdp, &policy, c, &d, &pairs, samples, seed)?;

    write_csv(&dir.join("estimate.csv"), &reports)?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write_file(&dir.join("estimate.json"), json + "\n")?;
    let worst = reports.iter().map(|r| r.z_score()).fold(0.0, f64::max);
    let max_bias = reports.iter().map(|r| r.bias.abs()).fold(0.0, f64::max);
    emit(
        out,
        &format!(
            "estimate {}/{}: {} pairs x {} samples, max |bias| {:.3e}, max |bias|/stderr {:.3}",
            kind.method(),
            mode.name(),
            reports.len(),
            samples,
            max_bias,
            worst
        ),
    )
}
