use rand::Rng;

use super::{permuted_pairs, HistoryRow};
use crate::error::{ensure_len, Error, Result};
use crate::estimators::{SampleStats, TabularSampler};
use crate::mdp::{FiniteMdp, TabularPolicy};
use crate::operators::{solve, OperatorKind, SimilarityG, StateMetric};
use crate::seed::{derive_seed, rng_from_seed, stream};

/// Learned distance `d(i, j) = raw_{ij}²` over unordered pairs `i < j`;
/// `d(i, i) = 0` has no parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDistanceParams {
    n: usize,
    raw: Vec<f64>,
}

impl TabularDistanceParams {
    pub fn constant(n: usize, raw: f64) -> Self {
        TabularDistanceParams {
            n,
            raw: vec![raw; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn from_raw(n: usize, raw: Vec<f64>) -> Result<Self> {
        ensure_len("tabular raw parameters", n * n.saturating_sub(1) / 2, raw.len())?;
        if raw.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("raw parameters must be finite"));
        }
        Ok(TabularDistanceParams { n, raw })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.raw
    }

    /// Index of unordered pair `{i, j}`, `i != j`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            let r = self.raw[self.index(i, j)];
            r * r
        }
    }

    pub fn to_metric(&self) -> StateMetric {
        StateMetric::from_pairs(self.n, |i, j| self.distance(i, j)).expect("squares are a valid metric matrix")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Mean over `samples` entangled draws of `G + c · d(z₊, z'₊)` for each
/// batch pair; pair `k` uses the stream seeded by `noise_seeds[k]`.
pub fn sample_targets(
    sampler: &TabularSampler,
    g: &SimilarityG,
    c: f64,
    d: &StateMetric,
    batch: &[(usize, usize)],
    noise_seeds: &[u64],
    samples: usize,
) -> Result<Vec<f64>> {
    ensure_len("noise seeds", batch.len(), noise_seeds.len())?;
    batch
        .iter()
        .zip(noise_seeds)
        .map(|(&(z, w), &seed)| {
            sampler.check_pair(z, w)?;
            let mut rng = rng_from_seed(seed);
            let s = SampleStats::collect((0..samples).map(|_| sampler.draw_eps(g, c, d, z, w, &mut rng)));
            Ok(s.mean)
        })
        .collect()
}

/// Batch mean of `(d(z, z') − target)²` and its gradient with the targets
/// held constant.
pub fn loss_with_targets(params: &TabularDistanceParams, batch: &[(usize, usize)], targets: &[f64]) -> Result<LossGrad> {
    ensure_len("targets", batch.len(), targets.len())?;
    if batch.is_empty() {
        return Err(Error::invalid("batch must be nonempty"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.raw.len()];
    for (&(z, w), &t) in batch.iter().zip(targets) {
        let r = params.distance(z, w) - t;
        loss += scale * r * r;
        if z != w {
            let k = params.index(z, w);
            grad[k] += scale * 2.0 * r * 2.0 * params.raw[k];
        }
    }
    Ok(LossGrad { loss, grad })
}

/// Stop-gradient loss: targets are sampled from the current distance and
/// then frozen, so the gradient only flows through the prediction term.
#[allow(clippy::too_many_arguments)]
pub fn bisim_loss_batch(
    params: &TabularDistanceParams,
    sampler: &TabularSampler,
    g: &SimilarityG,
    c: f64,
    batch: &[(usize, usize)],
    noise_seeds: &[u64],
    target_samples: usize,
) -> Result<LossGrad> {
    ensure_len("learned distance states", sampler.n_states(), params.n)?;
    let d = params.to_metric();
    let targets = sample_targets(sampler, g, c, &d, batch, noise_seeds, target_samples)?;
    loss_with_targets(params, batch, &targets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularConfig {
    pub c: f64,
    pub steps: usize,
    pub step_size: f64,
    pub batch_size: usize,
    /// Entangled draws averaged into each target.
    pub target_samples: usize,
    pub init_raw: f64,
    /// Seeds the batch composition.
    pub batch_seed: u64,
    /// Seeds the target noise.
    pub noise_seed: u64,
    /// Tolerance for the exact reference used in the history.
    pub reference_tol: f64,
}

impl Default for TabularConfig {
    fn default() -> Self {
        TabularConfig {
            c: 0.9,
            steps: 20_000,
            step_size: 1e-2,
            batch_size: 8,
            target_samples: 1024,
            init_raw: 1.0,
            batch_seed: 0,
            noise_seed: 1,
            reference_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularTraining {
    pub params: TabularDistanceParams,
    pub history: Vec<HistoryRow>,
    pub reference: StateMetric,
}

impl TabularTraining {
    pub fn sup_error(&self) -> f64 {
        self.params.to_metric().sup_distance(&self.reference)
    }
}

/// Plain gradient descent on the stop-gradient loss. Each step draws a batch
/// of states, pairs it with a random permutation of itself and refreshes the
/// targets from the current parameters.
pub fn train_tabular(
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    g: &SimilarityG,
    cfg: &TabularConfig,
) -> Result<TabularTraining> {
    if cfg.steps == 0 || cfg.batch_size == 0 || cfg.target_samples == 0 {
        return Err(Error::invalid("steps, batch_size and target_samples must be positive"));
    }
    if !(cfg.step_size > 0.0) {
        return Err(Error::invalid("step_size must be positive"));
    }
    let sampler = TabularSampler::new(mdp, policy)?;
    let reference = solve(&OperatorKind::EpsBar(g.clone()), mdp, policy, cfg.c, cfg.reference_tol, 1_000_000)?.metric;
    let n = mdp.n_states();
    let mut params = TabularDistanceParams::constant(n, cfg.init_raw);
    let mut batch_rng = stream(cfg.batch_seed, "learn/batch", 0);
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let batch = permuted_pairs(&mut batch_rng, cfg.batch_size, |r| r.random_range(0..n));
        let seeds: Vec<u64> = (0..batch.len())
            .map(|k| derive_seed(cfg.noise_seed, "learn/noise", (step * cfg.batch_size + k) as u64))
            .collect();
        let lg = bisim_loss_batch(&params, &sampler, g, cfg.c, &batch, &seeds, cfg.target_samples)?;
        for (r, gr) in params.raw.iter_mut().zip(&lg.grad) {
            *r -= cfg.step_size * gr;
        }
        if !lg.loss.is_finite() || params.raw.iter().any(|r| !r.is_finite()) {
            return Err(Error::Diverged { step, history });
        }
        history.push(HistoryRow {
            step,
            loss: lg.loss,
            sup_error: Some(params.to_metric().sup_distance(&reference)),
        });
    }
    Ok(TabularTraining {
        params,
        history,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, random_policy};

    #[test]
    fn pair_indexing_is_a_bijection() {
        let p = TabularDistanceParams::constant(6, 0.0);
        let mut seen = vec![false; 15];
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_eq!(p.index(i, j), p.index(j, i));
                assert!(!std::mem::replace(&mut seen[p.index(i, j)], true));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mdp = random_mdp(5, 3, (0.0, 1.0), 0.9, 2).unwrap();
        let pol = random_policy(&mdp, 3).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let sampler = TabularSampler::new(&mdp, &pol).unwrap();
        let mut rng = rng_from_seed(4);
        let raw: Vec<f64> = (0..10).map(|_| rng.random_range(-1.5..1.5)).collect();
        let params = TabularDistanceParams::from_raw(5, raw).unwrap();
        let batch = [(0, 1), (3, 2), (4, 4), (1, 0), (2, 4)];
        let seeds = [1, 2, 3, 4, 5];
        let targets = sample_targets(&sampler, &g, 0.9, &params.to_metric(), &batch, &seeds, 16).unwrap();
        let lg = loss_with_targets(&params, &batch, &targets).unwrap();
        let h = 1e-5;
        for k in 0..params.raw.len() {
            let mut up = params.clone();
            up.raw[k] += h;
            let mut dn = params.clone();
            dn.raw[k] -= h;
            let fd = (loss_with_targets(&up, &batch, &targets).unwrap().loss
                - loss_with_targets(&dn, &batch, &targets).unwrap().loss)
                / (2.0 * h);
            let denom = fd.abs().max(lg.grad[k].abs()).max(1e-8);
            assert!((fd - lg.grad[k]).abs() / denom <= 1e-5, "k={k} fd={fd} an={}", lg.grad[k]);
        }
    }

    #[test]
    fn zero_constant_minimum_has_zero_gradient() {
        let mdp = random_mdp(3, 2, (0.0, 1.0), 0.9, 8).unwrap();
        let pol = random_policy(&mdp, 9).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let sampler = TabularSampler::new(&mdp, &pol).unwrap();
        let zero = TabularDistanceParams::constant(3, 0.0);
        let batch = [(0, 1), (1, 2)];
        let t = sample_targets(&sampler, &g, 0.0, &zero.to_metric(), &batch, &[7, 8], 4).unwrap();
        let lg = loss_with_targets(&zero, &batch, &t).unwrap();
        assert!(lg.loss > 0.0);
        let mut at_target = zero.clone();
        for (&(z, w), &tt) in batch.iter().zip(&t) {
            let k = at_target.index(z, w);
            at_target.raw[k] = tt.sqrt();
        }
        let lg = loss_with_targets(&at_target, &batch, &t).unwrap();
        assert!(lg.loss < 1e-28);
        assert!(lg.grad.iter().all(|g| g.abs() < 1e-14));
    }

    #[test]
    fn deterministic_mdp_ignores_noise_seed() {
        let mdp = FiniteMdp::from_tables(
            &[vec![vec![0.0, 1.0, 0.0]], vec![vec![0.0, 0.0, 1.0]], vec![vec![1.0, 0.0, 0.0]]],
            &[vec![1.0], vec![0.0], vec![0.5]],
            0.9,
        )
        .unwrap();
        let pol = TabularPolicy::uniform(3, 1).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let cfg = TabularConfig {
            steps: 200,
            ..TabularConfig::default()
        };
        let a = train_tabular(&mdp, &pol, &g, &cfg).unwrap();
        let b = train_tabular(&mdp, &pol, &g, &TabularConfig { noise_seed: 99, ..cfg }).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn self_loop_pair_reaches_closed_form() {
        let mdp = FiniteMdp::from_tables(
            &[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            &[vec![1.0], vec![0.0]],
            0.9,
        )
        .unwrap();
        let pol = TabularPolicy::uniform(2, 1).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let cfg = TabularConfig {
            steps: 5000,
            batch_size: 2,
            target_samples: 1,
            ..TabularConfig::default()
        };
        let t = train_tabular(&mdp, &pol, &g, &cfg).unwrap();
        assert!((t.params.distance(0, 1) - 10.0).abs() < 0.05, "{}", t.params.distance(0, 1));
    }

    #[test]
    fn duplicated_pairs_learn_near_zero() {
        use crate::mdp::duplicate_states;
        use std::collections::BTreeMap;
        let base = random_mdp(3, 2, (0.0, 1.0), 0.9, 31).unwrap();
        let dup = duplicate_states(&base, &BTreeMap::from([(1, 2), (2, 2)])).unwrap();
        let pol = random_policy(&base, 32).unwrap().lift(&dup.origin).unwrap();
        let g = SimilarityG::reward_diff(&dup.mdp);
        let cfg = TabularConfig {
            c: 0.5,
            steps: 20_000,
            batch_size: 5,
            target_samples: 64,
            ..TabularConfig::default()
        };
        let t = train_tabular(&dup.mdp, &pol, &g, &cfg).unwrap();
        for &(i, j) in &dup.pairs.pairs {
            assert!(t.params.distance(i, j) <= 1e-2, "{}", t.params.distance(i, j));
        }
    }

    #[test]
    fn zero_constant_learns_expected_g() {
        let mdp = random_mdp(4, 3, (0.0, 1.0), 0.9, 41).unwrap();
        let pol = random_policy(&mdp, 42).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let cfg = TabularConfig {
            c: 0.0,
            steps: 20_000,
            batch_size: 4,
            target_samples: 1024,
            ..TabularConfig::default()
        };
        let t = train_tabular(&mdp, &pol, &g, &cfg).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let exact: f64 = crate::coupling::entangled_segments_of(pol.row(i), pol.row(j))
                    .iter()
                    .map(|s| s.weight * g.eval(i, s.x, j, s.y).unwrap())
                    .sum();
                assert!((t.params.distance(i, j) - exact).abs() < 1e-3, "{} vs {exact}", t.params.distance(i, j));
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_history() {
        let mdp = FiniteMdp::from_tables(
            &[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            &[vec![1.0], vec![0.0]],
            0.9,
        )
        .unwrap();
        let pol = TabularPolicy::uniform(2, 1).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let cfg = TabularConfig {
            steps: 500,
            step_size: 10.0,
            ..TabularConfig::default()
        };
        match train_tabular(&mdp, &pol, &g, &cfg) {
            Err(Error::Diverged { step, history }) => assert_eq!(history.len(), step - 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
