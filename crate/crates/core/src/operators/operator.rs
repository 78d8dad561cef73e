use rayon::prelude::*;

use super::metric::StateMetric;
use super::similarity::{ActionEmbedding, SimilarityG};
use crate::coupling::{entangled_segments, InverseSampler};
use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;
use crate::mdp::{policy_averaged_dynamics, FiniteMdp, TabularPolicy};
use crate::transport::solve_transport;

/// Pair count above which `apply` fans out over threads.
const PARALLEL_PAIRS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Pi,
    Eps(SimilarityG),
    EpsBar(SimilarityG),
    DbcStyle,
    PsmStyle(ActionEmbedding),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorTag {
    Pi,
    Eps,
    EpsBar,
    DbcStyle,
    PsmStyle,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 5] = [
        OperatorTag::Pi,
        OperatorTag::Eps,
        OperatorTag::EpsBar,
        OperatorTag::DbcStyle,
        OperatorTag::PsmStyle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorTag::Pi => "pi",
            OperatorTag::Eps => "eps",
            OperatorTag::EpsBar => "eps-bar",
            OperatorTag::DbcStyle => "dbc",
            OperatorTag::PsmStyle => "psm",
        }
    }

    /// Whether `apply` is evaluated on the diagonal as well.
    pub fn has_self_distance(self) -> bool {
        matches!(self, OperatorTag::DbcStyle | OperatorTag::PsmStyle)
    }
}

impl std::str::FromStr for OperatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown operator `{s}`")))
    }
}

impl OperatorKind {
    pub fn tag(&self) -> OperatorTag {
        match self {
            OperatorKind::Pi => OperatorTag::Pi,
            OperatorKind::Eps(_) => OperatorTag::Eps,
            OperatorKind::EpsBar(_) => OperatorTag::EpsBar,
            OperatorKind::DbcStyle => OperatorTag::DbcStyle,
            OperatorKind::PsmStyle(_) => OperatorTag::PsmStyle,
        }
    }
}

/// `(weight, row_a, row_b)`: a coupled pair of transition rows.
type RowPair = (f64, usize, usize);
/// `(weight, next_a, next_b)`: a coupled pair of next states.
type StatePair = (f64, usize, usize);

#[derive(Debug, Clone)]
enum PairPlan {
    /// `constant + c · Σ w · W1(row_a, row_b; d)`
    Transport { constant: f64, rows: Vec<RowPair> },
    /// `constant + c · Σ w · d(s, s')`
    Expectation { constant: f64, states: Vec<StatePair> },
}

/// An operator prepared for repeated application on one MDP and policy.
///
/// Everything that does not depend on `d` (coupling segments, expected
/// similarity terms) is computed once here.
#[derive(Debug, Clone)]
pub struct BisimOperator {
    tag: OperatorTag,
    c: f64,
    n: usize,
    /// Transition rows, either per `(z, a)` or policy-averaged per `z`.
    rows: Matrix,
    pairs: Vec<(usize, usize)>,
    plans: Vec<PairPlan>,
}

impl BisimOperator {
    pub fn new(mdp: &FiniteMdp, policy: &TabularPolicy, kind: &OperatorKind, c: f64) -> Result<Self> {
        policy.check_compatible(mdp)?;
        if !(0.0..1.0).contains(&c) {
            return Err(Error::invalid(format!("operator constant c = {c} is outside [0, 1)")));
        }
        let n = mdp.n_states();
        let na = mdp.n_actions();
        let tag = kind.tag();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| {
                let start = if tag.has_self_distance() { i } else { i + 1 };
                (start..n).map(move |j| (i, j))
            })
            .collect();
        let sa_rows = || Matrix::from_fn(n * na, n, |r, s| mdp.transition_row(r / na, r % na)[s]);

        let (rows, plans) = match kind {
            OperatorKind::Pi => {
                let dy = policy_averaged_dynamics(mdp, policy)?;
                let plans = pairs
                    .iter()
                    .map(|&(z, w)| PairPlan::Transport {
                        constant: (dy.reward[z] - dy.reward[w]).abs(),
                        rows: vec![(1.0, z, w)],
                    })
                    .collect();
                (dy.transition, plans)
            }
            OperatorKind::Eps(g) | OperatorKind::EpsBar(g) => {
                g.check_compatible(mdp)?;
                let samplers: Vec<InverseSampler> =
                    (0..n).map(|z| InverseSampler::canonical(policy.row(z))).collect();
                let rows = sa_rows();
                let row_samplers: Vec<InverseSampler> =
                    (0..n * na).map(|r| InverseSampler::canonical(rows.row(r))).collect();
                let plans = pairs
                    .iter()
                    .map(|&(z, w)| {
                        let segs = entangled_segments(&samplers[z], &samplers[w]);
                        let constant = segs
                            .iter()
                            .map(|s| s.weight * g.eval_unchecked(z, s.x, w, s.y))
                            .sum();
                        let row_pairs = segs.iter().map(|s| (s.weight, z * na + s.x, w * na + s.y));
                        if matches!(kind, OperatorKind::Eps(_)) {
                            PairPlan::Transport {
                                constant,
                                rows: row_pairs.collect(),
                            }
                        } else {
                            let states = row_pairs
                                .flat_map(|(wa, ra, rb)| {
                                    entangled_segments(&row_samplers[ra], &row_samplers[rb])
                                        .into_iter()
                                        .map(move |s| (wa * s.weight, s.x, s.y))
                                })
                                .collect();
                            PairPlan::Expectation { constant, states }
                        }
                    })
                    .collect();
                (rows, plans)
            }
            OperatorKind::DbcStyle => {
                let plans = pairs
                    .iter()
                    .map(|&(z, w)| {
                        let mut constant = 0.0;
                        let mut row_pairs = Vec::new();
                        for a in 0..na {
                            for b in 0..na {
                                let p = policy.prob(z, a) * policy.prob(w, b);
                                if p > 0.0 {
                                    constant += p * (mdp.reward(z, a) - mdp.reward(w, b)).abs();
                                    row_pairs.push((p, z * na + a, w * na + b));
                                }
                            }
                        }
                        PairPlan::Transport {
                            constant,
                            rows: row_pairs,
                        }
                    })
                    .collect();
                (sa_rows(), plans)
            }
            OperatorKind::PsmStyle(embedding) => {
                let g = SimilarityG::policy_mean_diff(policy, embedding)?;
                let dy = policy_averaged_dynamics(mdp, policy)?;
                let plans = pairs
                    .iter()
                    .map(|&(z, w)| {
                        let (pz, pw) = (dy.transition.row(z), dy.transition.row(w));
                        let mut states = Vec::new();
                        for (s, &x) in pz.iter().enumerate() {
                            for (t, &y) in pw.iter().enumerate() {
                                if x * y > 0.0 {
                                    states.push((x * y, s, t));
                                }
                            }
                        }
                        PairPlan::Expectation {
                            constant: g.eval_unchecked(z, 0, w, 0),
                            states,
                        }
                    })
                    .collect();
                (dy.transition, plans)
            }
        };
        Ok(BisimOperator {
            tag,
            c,
            n,
            rows,
            pairs,
            plans,
        })
    }

    pub fn tag(&self) -> OperatorTag {
        self.tag
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    fn eval_pair(&self, plan: &PairPlan, d: &StateMetric) -> Result<f64> {
        match plan {
            PairPlan::Transport { constant, rows } => {
                let mut acc = 0.0;
                if self.c > 0.0 {
                    for &(w, ra, rb) in rows {
                        let sol = solve_transport(self.rows.row(ra), self.rows.row(rb), d.matrix())?;
                        acc += w * sol.cost;
                    }
                }
                Ok(constant + self.c * acc)
            }
            PairPlan::Expectation { constant, states } => {
                let acc: f64 = states.iter().map(|&(w, s, t)| w * d.get(s, t)).sum();
                Ok(constant + self.c * acc)
            }
        }
    }

    pub fn apply(&self, d: &StateMetric) -> Result<StateMetric> {
        ensure_len("operator input metric", self.n, d.n())?;
        let values: Vec<f64> = if self.plans.len() >= PARALLEL_PAIRS {
            self.plans
                .par_iter()
                .map(|p| self.eval_pair(p, d))
                .collect::<Result<_>>()?
        } else {
            self.plans
                .iter()
                .map(|p| self.eval_pair(p, d))
                .collect::<Result<_>>()?
        };
        let mut out = Matrix::zeros(self.n, self.n);
        for (&(i, j), v) in self.pairs.iter().zip(values) {
            out.set(i, j, v);
            out.set(j, i, v);
        }
        StateMetric::from_matrix(out)
    }
}

pub fn apply_f_pi(mdp: &FiniteMdp, policy: &TabularPolicy, c: f64, d: &StateMetric) -> Result<StateMetric> {
    BisimOperator::new(mdp, policy, &OperatorKind::Pi, c)?.apply(d)
}

pub fn apply_f_eps(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    g: &SimilarityG,
    c: f64,
    d: &StateMetric,
) -> Result<StateMetric> {
    BisimOperator::new(mdp, policy, &OperatorKind::Eps(g.clone()), c)?.apply(d)
}

pub fn apply_f_eps_bar(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    g: &SimilarityG,
    c: f64,
    d: &StateMetric,
) -> Result<StateMetric> {
    BisimOperator::new(mdp, policy, &OperatorKind::EpsBar(g.clone()), c)?.apply(d)
}

pub fn apply_f_dbc_style(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    d: &StateMetric,
) -> Result<StateMetric> {
    BisimOperator::new(mdp, policy, &OperatorKind::DbcStyle, c)?.apply(d)
}

pub fn apply_f_psm_style(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    embedding: &ActionEmbedding,
    c: f64,
    d: &StateMetric,
) -> Result<StateMetric> {
    BisimOperator::new(mdp, policy, &OperatorKind::PsmStyle(embedding.clone()), c)?.apply(d)
}
