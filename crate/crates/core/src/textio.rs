//! Plain-text tensor formats.
//!
//! Every file is a sequence of whitespace-separated lines; blank lines and
//! lines starting with `#` are ignored. Reals are written with 17
//! significant digits (`{:.16e}`), which round-trips every `f64` exactly.
//!
//! ```text
//! mdp <states> <actions>          policy <states> <actions>
//! discount <c>                    <one row per state>
//! reward
//! <one row per state>             metric <n>
//! transition                      status converged|failed|learned
//! <one row per (state, action),   iterations <k>
//!  state-major>                   residual <r>
//!                                 <n rows>
//! pairs <count>
//! <i> <j>                         separable <dim> <max_power>
//!                                 <one row of weights per coordinate>
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::learner::SeparableDistance;
use crate::mdp::{BisimilarPairSet, FiniteMdp, TabularPolicy};
use crate::operators::StateMetric;

fn push_row(out: &mut String, row: &[f64]) {
    let mut first = true;
    for v in row {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn next_tokens(&mut self) -> Result<Vec<&'a str>> {
        for (i, raw) in self.inner.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Ok(t.split_whitespace().collect());
        }
        Err(Error::parse(self.line + 1, "unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn header(&mut self, keyword: &str, args: usize) -> Result<Vec<&'a str>> {
        let t = self.next_tokens()?;
        if t.first() != Some(&keyword) || t.len() != args + 1 {
            return Err(self.err(format!("expected `{keyword}` with {args} argument(s)")));
        }
        Ok(t[1..].to_vec())
    }

    fn usize(&self, tok: &str) -> Result<usize> {
        tok.parse().map_err(|_| self.err(format!("`{tok}` is not a nonnegative integer")))
    }

    fn f64(&self, tok: &str) -> Result<f64> {
        tok.parse().map_err(|_| self.err(format!("`{tok}` is not a number")))
    }

    fn row(&mut self, len: usize) -> Result<Vec<f64>> {
        let t = self.next_tokens()?;
        if t.len() != len {
            return Err(self.err(format!("expected {len} values, found {}", t.len())));
        }
        t.iter().map(|s| self.f64(s)).collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.next_tokens() {
            Ok(_) => Err(self.err("trailing content")),
            Err(_) => Ok(()),
        }
    }

    fn wrap<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            e @ Error::Parse { .. } => e,
            other => self.err(other.to_string()),
        })
    }
}

pub fn format_mdp(mdp: &FiniteMdp) -> String {
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let mut out = format!("mdp {n} {na}\n");
    let _ = writeln!(out, "discount {:.16e}", mdp.discount());
    out.push_str("reward\n");
    for z in 0..n {
        push_row(&mut out, &mdp.rewards()[z * na..(z + 1) * na]);
    }
    out.push_str("transition\n");
    for z in 0..n {
        for a in 0..na {
            push_row(&mut out, mdp.transition_row(z, a));
        }
    }
    out
}

pub fn parse_mdp(text: &str) -> Result<FiniteMdp> {
    let mut l = Lines::new(text);
    let h = l.header("mdp", 2)?;
    let (n, na) = (l.usize(h[0])?, l.usize(h[1])?);
    let d = l.header("discount", 1)?;
    let discount = l.f64(d[0])?;
    l.header("reward", 0)?;
    let mut reward = Vec::with_capacity(n * na);
    for _ in 0..n {
        reward.extend(l.row(na)?);
    }
    l.header("transition", 0)?;
    let mut transition = Vec::with_capacity(n * na * n);
    for _ in 0..n * na {
        transition.extend(l.row(n)?);
    }
    let mdp = l.wrap(FiniteMdp::new(n, na, transition, reward, discount))?;
    l.finish()?;
    Ok(mdp)
}

pub fn format_policy(policy: &TabularPolicy) -> String {
    let mut out = format!("policy {} {}\n", policy.n_states(), policy.n_actions());
    for z in 0..policy.n_states() {
        push_row(&mut out, policy.row(z));
    }
    out
}

pub fn parse_policy(text: &str) -> Result<TabularPolicy> {
    let mut l = Lines::new(text);
    let h = l.header("policy", 2)?;
    let (n, na) = (l.usize(h[0])?, l.usize(h[1])?);
    let mut probs = Vec::with_capacity(n * na);
    for _ in 0..n {
        probs.extend(l.row(na)?);
    }
    let p = l.wrap(TabularPolicy::new(n, na, probs))?;
    l.finish()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricStatus {
    Converged,
    Failed,
    Learned,
}

impl MetricStatus {
    pub fn name(self) -> &'static str {
        match self {
            MetricStatus::Converged => "converged",
            MetricStatus::Failed => "failed",
            MetricStatus::Learned => "learned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricFile {
    pub metric: StateMetric,
    pub status: MetricStatus,
    pub iterations: usize,
    pub residual: f64,
}

pub fn format_metric(file: &MetricFile) -> String {
    let n = file.metric.n();
    let mut out = format!("metric {n}\nstatus {}\niterations {}\n", file.status.name(), file.iterations);
    let _ = writeln!(out, "residual {:.16e}", file.residual);
    for row in file.metric.matrix().to_rows() {
        push_row(&mut out, &row);
    }
    out
}

pub fn parse_metric(text: &str) -> Result<MetricFile> {
    let mut l = Lines::new(text);
    let n = {
        let h = l.header("metric", 1)?;
        l.usize(h[0])?
    };
    let s = l.header("status", 1)?;
    let status = match s[0] {
        "converged" => MetricStatus::Converged,
        "failed" => MetricStatus::Failed,
        "learned" => MetricStatus::Learned,
        other => return Err(l.err(format!("unknown status `{other}`"))),
    };
    let it = l.header("iterations", 1)?;
    let iterations = l.usize(it[0])?;
    let r = l.header("residual", 1)?;
    let residual = l.f64(r[0])?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        rows.push(l.row(n)?);
    }
    let metric = if n == 0 {
        StateMetric::zeros(0)
    } else {
        l.wrap(StateMetric::from_rows(&rows))?
    };
    l.finish()?;
    Ok(MetricFile {
        metric,
        status,
        iterations,
        residual,
    })
}

pub fn format_pairs(pairs: &BisimilarPairSet) -> String {
    let mut out = format!("pairs {}\n", pairs.pairs.len());
    for (i, j) in &pairs.pairs {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn parse_pairs(text: &str) -> Result<BisimilarPairSet> {
    let mut l = Lines::new(text);
    let count = {
        let h = l.header("pairs", 1)?;
        l.usize(h[0])?
    };
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let t = l.next_tokens()?;
        if t.len() != 2 {
            return Err(l.err("expected two state indices"));
        }
        pairs.push((l.usize(t[0])?, l.usize(t[1])?));
    }
    l.finish()?;
    Ok(BisimilarPairSet { pairs })
}

pub fn format_separable(d: &SeparableDistance) -> String {
    let p = d.max_power();
    let mut out = format!("separable {} {p}\n", d.dim());
    for row in d.weights().chunks(p) {
        push_row(&mut out, row);
    }
    out
}

pub fn parse_separable(text: &str) -> Result<SeparableDistance> {
    let mut l = Lines::new(text);
    let h = l.header("separable", 2)?;
    let (dim, p) = (l.usize(h[0])?, l.usize(h[1])?);
    let mut w = Vec::with_capacity(dim * p);
    for _ in 0..dim {
        w.extend(l.row(p)?);
    }
    let d = l.wrap(SeparableDistance::new(dim, p, w))?;
    l.finish()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, random_policy};

    #[test]
    fn mdp_and_policy_round_trip_exactly() {
        let mdp = random_mdp(3, 2, (-1.0, 1.0), 0.87, 5).unwrap();
        let pol = random_policy(&mdp, 6).unwrap();
        assert_eq!(parse_mdp(&format_mdp(&mdp)).unwrap(), mdp);
        assert_eq!(parse_policy(&format_policy(&pol)).unwrap(), pol);
    }

    #[test]
    fn metric_round_trip_and_status() {
        let m = StateMetric::from_pairs(3, |i, j| if i == j { 0.0 } else { 1.0 / (1 + i + j) as f64 }).unwrap();
        let f = MetricFile {
            metric: m,
            status: MetricStatus::Failed,
            iterations: 12,
            residual: 3.5e-4,
        };
        let text = format_metric(&f);
        assert!(text.contains("status failed"));
        assert_eq!(parse_metric(&text).unwrap(), f);
    }

    #[test]
    fn pairs_and_separable_round_trip() {
        let p = BisimilarPairSet {
            pairs: vec![(0, 1), (2, 4)],
        };
        assert_eq!(parse_pairs(&format_pairs(&p)).unwrap(), p);
        let d = SeparableDistance::new(2, 3, vec![0.1, 0.0, 2.0, 1.0 / 3.0, 0.5, 0.25]).unwrap();
        assert_eq!(parse_separable(&format_separable(&d)).unwrap(), d);
    }

    #[test]
    fn comments_are_skipped_and_errors_carry_lines() {
        let text = "# header\nmdp 1 1\n\ndiscount 0.5\nreward\n2.0\ntransition\n1.0\n";
        let mdp = parse_mdp(text).unwrap();
        assert_eq!(mdp.reward(0, 0), 2.0);
        match parse_mdp("mdp 1 1\ndiscount 0.5\nreward\nabc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_mdp("mdp 1 1\ndiscount 1.5\nreward\n0\ntransition\n1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        assert!(parse_mdp("mdp 1 1\ndiscount 0.5\nreward\n0\ntransition\n1\nextra\n").is_err());
        assert!(parse_policy("policy 1 2\n0.5 0.6\n").is_err());
    }
}
