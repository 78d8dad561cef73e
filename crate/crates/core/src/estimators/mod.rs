//! Monte-Carlo estimators of bisimulation targets and bias audits against
//! exact operator references.

mod gaussian;
mod tabular;

pub use gaussian::{draw_dbc_gaussian, draw_eps_gaussian};
pub use tabular::TabularSampler;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, TabularPolicy};
use crate::operators::{ActionEmbedding, BisimOperator, OperatorKind, SimilarityG, StateMetric};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    Entangled,
    Independent,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::Entangled => "entangled",
            SamplingMode::Independent => "independent",
        }
    }
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entangled" => Ok(SamplingMode::Entangled),
            "independent" => Ok(SamplingMode::Independent),
            _ => Err(Error::invalid(format!("unknown sampling mode `{s}`"))),
        }
    }
}

/// Which single-sample target to draw.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    /// `G + c · d(z₊, z'₊)`; entangled or fully independent sampling.
    Eps { g: SimilarityG, mode: SamplingMode },
    /// Independent actions, exact W1 per sampled action pair.
    Dbc,
    /// Exact mean-action gap, independent next states.
    Psm(ActionEmbedding),
}

impl EstimatorKind {
    pub fn method(&self) -> &'static str {
        match self {
            EstimatorKind::Eps { .. } => "eps",
            EstimatorKind::Dbc => "dbc",
            EstimatorKind::Psm(_) => "psm",
        }
    }

    pub fn mode(&self) -> SamplingMode {
        match self {
            EstimatorKind::Eps { mode, .. } => *mode,
            EstimatorKind::Dbc | EstimatorKind::Psm(_) => SamplingMode::Independent,
        }
    }
}

/// Running mean and unbiased variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    m2: f64,
}

impl SampleStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn collect(iter: impl IntoIterator<Item = f64>) -> Self {
        let mut s = SampleStats::default();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub method: &'static str,
    pub mode: &'static str,
    pub z: usize,
    pub z_prime: usize,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub exact: f64,
    pub bias: f64,
    pub seed: u64,
}

impl EstimatorReport {
    /// `|bias| / stderr`, infinite when a nonzero bias has zero spread.
    pub fn z_score(&self) -> f64 {
        if self.bias == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            self.bias.abs() / self.stderr
        }
    }
}

/// A sampler bound to one estimator, MDP, policy, constant and metric.
pub struct PreparedEstimator<'a> {
    kind: &'a EstimatorKind,
    sampler: TabularSampler,
    c: f64,
    d: &'a StateMetric,
    means: Option<SimilarityG>,
}

impl<'a> PreparedEstimator<'a> {
    pub fn new(
        kind: &'a EstimatorKind,
        mdp: &FiniteMdp,
        policy: &TabularPolicy,
        c: f64,
        d: &'a StateMetric,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::invalid(format!("c = {c} is outside [0, 1)")));
        }
        let sampler = TabularSampler::new(mdp, policy)?;
        sampler.check_metric(d)?;
        let means = match kind {
            EstimatorKind::Eps { g, .. } => {
                crate::error::ensure_len("similarity states", mdp.n_states(), g.n_states())?;
                crate::error::ensure_len("similarity actions", mdp.n_actions(), g.n_actions())?;
                None
            }
            EstimatorKind::Dbc => None,
            EstimatorKind::Psm(e) => Some(SimilarityG::policy_mean_diff(policy, e)?),
        };
        Ok(PreparedEstimator {
            kind,
            sampler,
            c,
            d,
            means,
        })
    }

    /// Draws `n` samples at `(z, w)` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, z: usize, w: usize, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.sampler.check_pair(z, w)?;
        let s = &self.sampler;
        let (c, d) = (self.c, self.d);
        Ok(match self.kind {
            EstimatorKind::Eps { g, mode } => match mode {
                SamplingMode::Entangled => (0..n).map(|_| s.draw_eps(g, c, d, z, w, rng)).collect(),
                SamplingMode::Independent => (0..n).map(|_| s.draw_eps_independent(g, c, d, z, w, rng)).collect(),
            },
            EstimatorKind::Dbc => {
                let w1 = s.action_pair_w1(d, z, w)?;
                (0..n).map(|_| s.draw_dbc(c, &w1, z, w, rng)).collect()
            }
            EstimatorKind::Psm(_) => {
                let means = self.means.as_ref().expect("psm means prepared");
                (0..n).map(|_| s.draw_psm(means, c, d, z, w, rng)).collect()
            }
        })
    }
}

/// One entangled draw of the ε-target at `pair`, seeded by `noise_seed`.
pub fn sample_f_hat_eps(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    g: &SimilarityG,
    c: f64,
    d: &StateMetric,
    pair: (usize, usize),
    noise_seed: u64,
) -> Result<f64> {
    let kind = EstimatorKind::Eps {
        g: g.clone(),
        mode: SamplingMode::Entangled,
    };
    one_draw(&kind, mdp, policy, c, d, pair, noise_seed)
}

pub fn sample_f_hat_dbc(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    d: &StateMetric,
    pair: (usize, usize),
    seed: u64,
) -> Result<f64> {
    one_draw(&EstimatorKind::Dbc, mdp, policy, c, d, pair, seed)
}

pub fn sample_f_hat_psm(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    embedding: &ActionEmbedding,
    c: f64,
    d: &StateMetric,
    pair: (usize, usize),
    seed: u64,
) -> Result<f64> {
    one_draw(&EstimatorKind::Psm(embedding.clone()), mdp, policy, c, d, pair, seed)
}

fn one_draw(
    kind: &EstimatorKind,
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    d: &StateMetric,
    pair: (usize, usize),
    seed: u64,
) -> Result<f64> {
    let est = PreparedEstimator::new(kind, mdp, policy, c, d)?;
    Ok(est.sample(pair.0, pair.1, 1, &mut rng_from_seed(seed))?[0])
}

/// Exact expectation of the estimator at every pair.
pub fn exact_reference(
    kind: &EstimatorKind,
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    d: &StateMetric,
) -> Result<StateMetric> {
    let op = |k: OperatorKind| BisimOperator::new(mdp, policy, &k, c)?.apply(d);
    match kind {
        EstimatorKind::Eps {
            g,
            mode: SamplingMode::Entangled,
        } => op(OperatorKind::EpsBar(g.clone())),
        EstimatorKind::Eps {
            g,
            mode: SamplingMode::Independent,
        } => {
            let s = TabularSampler::new(mdp, policy)?;
            StateMetric::from_pairs(mdp.n_states(), |z, w| s.independent_eps_expectation(g, c, d, z, w))
        }
        EstimatorKind::Dbc => op(OperatorKind::DbcStyle),
        EstimatorKind::Psm(e) => op(OperatorKind::PsmStyle(e.clone())),
    }
}

/// Stream label for the per-pair generators of an audit.
pub fn audit_label(kind: &EstimatorKind) -> String {
    format!("estimate/{}/{}", kind.method(), kind.mode().name())
}

/// Estimates every pair with `n_samples` draws and compares against the
/// exact reference. Pair `k` draws from the stream
/// `derive_seed(seed, audit_label(kind), k)`; the output order follows
/// `pairs` regardless of thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn bias_audit(
    kind: &EstimatorKind,
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    d: &StateMetric,
    pairs: &[(usize, usize)],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<EstimatorReport>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let est = PreparedEstimator::new(kind, mdp, policy, c, d)?;
    let exact = exact_reference(kind, mdp, policy, c, d)?;
    let label = audit_label(kind);
    pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(z, w))| {
            let pair_seed = derive_seed(seed, &label, k as u64);
            let draws = est.sample(z, w, n_samples, &mut rng_from_seed(pair_seed))?;
            let stats = SampleStats::collect(draws);
            let reference = exact.get(z, w);
            Ok(EstimatorReport {
                method: kind.method(),
                mode: kind.mode().name(),
                z,
                z_prime: w,
                n: stats.n,
                mean: stats.mean,
                variance: stats.variance(),
                stderr: stats.std_error(),
                exact: reference,
                bias: stats.mean - reference,
                seed: pair_seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::entangled_segments_of;
    use crate::mdp::{random_mdp, random_policy};
    use crate::operators::solve;

    fn setup(seed: u64) -> (FiniteMdp, TabularPolicy, SimilarityG, StateMetric) {
        let mdp = random_mdp(4, 3, (0.0, 1.0), 0.9, seed).unwrap();
        let pol = random_policy(&mdp, seed + 1).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let d = solve(&OperatorKind::EpsBar(g.clone()), &mdp, &pol, 0.8, 1e-10, 10_000)
            .unwrap()
            .metric;
        (mdp, pol, g, d)
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 0.25];
        let s = SampleStats::collect(xs);
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean - mean).abs() < 1e-15);
        assert!((s.variance() - var).abs() < 1e-14);
    }

    #[test]
    fn entangled_diagonal_draws_are_exactly_zero() {
        let (mdp, pol, g, d) = setup(3);
        let kind = EstimatorKind::Eps {
            g,
            mode: SamplingMode::Entangled,
        };
        let est = PreparedEstimator::new(&kind, &mdp, &pol, 0.8, &d).unwrap();
        let mut rng = rng_from_seed(5);
        for z in 0..4 {
            assert!(est.sample(z, z, 2000, &mut rng).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_constant_variance_is_that_of_g() {
        let (mdp, pol, g, d) = setup(7);
        let kind = EstimatorKind::Eps {
            g: g.clone(),
            mode: SamplingMode::Entangled,
        };
        let (z, w) = (0, 2);
        let segs = entangled_segments_of(pol.row(z), pol.row(w));
        let m: f64 = segs.iter().map(|s| s.weight * g.eval(z, s.x, w, s.y).unwrap()).sum();
        let v: f64 = segs
            .iter()
            .map(|s| s.weight * (g.eval(z, s.x, w, s.y).unwrap() - m).powi(2))
            .sum();
        let est = PreparedEstimator::new(&kind, &mdp, &pol, 0.0, &d).unwrap();
        let stats = SampleStats::collect(est.sample(z, w, 200_000, &mut rng_from_seed(1)).unwrap());
        assert!((stats.mean - m).abs() < 4.0 * stats.std_error());
        assert!((stats.variance() - v).abs() < 0.02 * v.max(1e-3));
    }

    #[test]
    fn audit_is_deterministic_and_ordered() {
        let (mdp, pol, g, d) = setup(11);
        let kind = EstimatorKind::Eps {
            g,
            mode: SamplingMode::Entangled,
        };
        let pairs = [(0, 1), (2, 3), (1, 1), (3, 0)];
        let a = bias_audit(&kind, &mdp, &pol, 0.8, &d, &pairs, 500, 42).unwrap();
        let b = bias_audit(&kind, &mdp, &pol, 0.8, &d, &pairs, 500, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| (r.z, r.z_prime)).collect::<Vec<_>>(), pairs);
        assert_eq!(a[2].mean, 0.0);
        assert_eq!(a[2].exact, 0.0);
    }

    #[test]
    fn independent_reference_matches_samples() {
        let (mdp, pol, g, d) = setup(13);
        let kind = EstimatorKind::Eps {
            g,
            mode: SamplingMode::Independent,
        };
        let r = bias_audit(&kind, &mdp, &pol, 0.8, &d, &[(0, 0), (1, 3)], 50_000, 9).unwrap();
        for rep in &r {
            assert!(rep.z_score() < 4.0, "{rep:?}");
        }
        assert!(r[0].exact > 0.0);
    }

    #[test]
    fn dbc_on_two_action_state() {
        let mdp = FiniteMdp::from_tables(&[vec![vec![1.0], vec![1.0]]], &[vec![0.0, 1.0]], 0.9).unwrap();
        let pol = TabularPolicy::uniform(1, 2).unwrap();
        let d = StateMetric::zeros(1);
        let r = bias_audit(&EstimatorKind::Dbc, &mdp, &pol, 0.0, &d, &[(0, 0)], 20_000, 3).unwrap();
        assert_eq!(r[0].exact, 0.5);
        assert!((r[0].mean - 0.5).abs() < 0.01);
        let one = sample_f_hat_dbc(&mdp, &pol, 0.0, &d, (0, 0), 4).unwrap();
        assert!(one == 0.0 || one == 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (mdp, pol, g, d) = setup(17);
        assert!(sample_f_hat_eps(&mdp, &pol, &g, 1.0, &d, (0, 1), 1).is_err());
        assert!(sample_f_hat_eps(&mdp, &pol, &g, 0.5, &d, (0, 9), 1).is_err());
        assert!(sample_f_hat_eps(&mdp, &pol, &g, 0.5, &StateMetric::zeros(2), (0, 1), 1).is_err());
        assert!(bias_audit(&EstimatorKind::Dbc, &mdp, &pol, 0.5, &d, &[(0, 1)], 0, 1).is_err());
    }
}
