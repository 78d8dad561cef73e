use std::io::Write;

use bisim_core::operators::solve;
use bisim_core::textio::{format_metric, MetricFile, MetricStatus};
use bisim_core::Error;
use serde::Serialize;

use super::{constant, emit, load_mdp, load_policy, operator_kind, out_dir, parse_tag, similarity, write_file};
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
    "operator",
    "similarity",
    "c",
    "tol",
    "max_iter",
    "compare",
];

#[derive(Serialize)]
struct Summary<'a> {
    operator: &'a str,
    status: &'a str,
    c: f64,
    iterations: usize,
    residual: f64,
    compare: Option<Comparison<'a>>,
}

#[derive(Serialize)]
struct Comparison<'a> {
    operator: &'a str,
    /// `min (d − d_other)`
    min_gap: f64,
    /// `max |d − d_other|`
    sup_distance: f64,
}

pub fn run(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let mdp = load_mdp(cfg)?;
    let policy = load_policy(cfg, &mdp)?;
    let g = similarity(cfg, &mdp, &policy)?;
    let tag = parse_tag(cfg.str_or("operator", "eps"))?;
    let c = constant(cfg, &mdp)?;
    let tol = cfg.get_or("tol", 1e-10)?;
    let max_iter = cfg.get_or("max_iter", 100_000usize)?;
    let kind = operator_kind(tag, &g, mdp.n_actions());

    let (file, failure) = match solve(&kind, &mdp, &policy, c, tol, max_iter) {
        Ok(fp) => (
            MetricFile {
                metric: fp.metric,
                status: MetricStatus::Converged,
                iterations: fp.iterations,
                residual: fp.residual,
            },
            None,
        ),
        Err(Error::NotConverged {
            iterations,
            residual,
            last,
        }) => (
            MetricFile {
                metric: *last,
                status: MetricStatus::Failed,
                iterations,
                residual,
            },
            Some(format!(
                "{} did not converge in {iterations} iterations (residual {residual:.3e})",
                tag.name()
            )),
        ),
        Err(e) => return Err(e.into()),
    };
    write_file(&dir.join("metric.txt"), format_metric(&file))?;

    let other_tag = cfg.str("compare").map(parse_tag).transpose()?;
    let comparison = match (other_tag, failure.is_none()) {
        (Some(t), true) => {
            let other = solve(&operator_kind(t, &g, mdp.n_actions()), &mdp, &policy, c, tol, max_iter)?.metric;
            Some(Comparison {
                operator: t.name(),
                min_gap: other.min_gap_to(&file.metric),
                sup_distance: other.sup_distance(&file.metric),
            })
        }
        _ => None,
    };
    let mut line = format!(
        "solve {}: status {} iterations {} residual {:.3e} c {}",
        tag.name(),
        file.status.name(),
        file.iterations,
        file.residual,
        c
    );
    if let Some(cmp) = &comparison {
        line.push_str(&format!(
            "; min(d - d_{}) = {:.3e}, sup|d - d_{}| = {:.3e}",
            cmp.operator, cmp.min_gap, cmp.operator, cmp.sup_distance
        ));
    }
    let summary = Summary {
        operator: tag.name(),
        status: file.status.name(),
        c,
        iterations: file.iterations,
        residual: file.residual,
        compare: comparison,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&dir.join("solve.json"), json + "\n")?;
    emit(out, &line)?;
    match failure {
        Some(msg) => Err(CliError::Convergence(msg)),
        None => Ok(()),
    }
}
