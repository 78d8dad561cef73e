use rand::Rng;

use super::{permuted_pairs, HistoryRow};
use crate::error::{ensure_len, Error, Result};
use crate::estimators::{draw_eps_gaussian, SampleStats};
use crate::mdp::{GaussianLinearMdp, StateBox, TanhGaussianPolicy};
use crate::seed::{derive_seed, rng_from_seed, stream};

/// `d(x, y) = Σ_i Σ_{j=1..p} w_{ij} |x_i − y_i|^j` with `w ≥ 0`.
///
/// Every term is convex in the coordinate gap because `j ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableDistance {
    dim: usize,
    max_power: usize,
    weights: Vec<f64>,
}

impl SeparableDistance {
    pub fn zeros(dim: usize, max_power: usize) -> Result<Self> {
        Self::new(dim, max_power, vec![0.0; dim * max_power])
    }

    /// `weights[i * max_power + (j − 1)]` holds `w_{ij}`.
    pub fn new(dim: usize, max_power: usize, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("separable distance needs at least one coordinate"));
        }
        if max_power == 0 {
            return Err(Error::invalid("powers must be at least 1 for convex coordinate terms"));
        }
        ensure_len("separable weights", dim * max_power, weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("separable weights must be finite and nonnegative"));
        }
        Ok(SeparableDistance {
            dim,
            max_power,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w_{ij}` for power `j ∈ 1..=max_power`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.max_power + j - 1]
    }

    /// `|x_i − y_i|^j` in weight order.
    pub fn features(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.weights.len());
        for i in 0..self.dim {
            let gap = (x[i] - y[i]).abs();
            let mut acc = 1.0;
            for _ in 0..self.max_power {
                acc *= gap;
                out.push(acc);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.features(x, y).iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableConfig {
    pub c: f64,
    pub max_power: usize,
    pub steps: usize,
    pub step_size: f64,
    /// States drawn per step; pairs come from a permutation of the batch.
    pub batch_size: usize,
    /// Entangled draws averaged into each target.
    pub target_samples: usize,
    pub batch_seed: u64,
    pub noise_seed: u64,
}

impl Default for SeparableConfig {
    fn default() -> Self {
        SeparableConfig {
            c: 0.5,
            max_power: 2,
            steps: 5_000,
            step_size: 1e-3,
            batch_size: 32,
            target_samples: 8,
            batch_seed: 0,
            noise_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTraining {
    pub distance: SeparableDistance,
    pub history: Vec<HistoryRow>,
}

/// Stop-gradient descent on the separable weights from `init`, with
/// projection onto `w ≥ 0` after every step.
pub fn train_separable_gaussian(
    mdp: &GaussianLinearMdp,
    policy: &TanhGaussianPolicy,
    states: &StateBox,
    init: SeparableDistance,
    cfg: &SeparableConfig,
) -> Result<SeparableTraining> {
    mdp.validate()?;
    policy.validate(mdp)?;
    ensure_len("state box", mdp.state_dim(), states.dim())?;
    ensure_len("separable distance", mdp.state_dim(), init.dim())?;
    if cfg.steps == 0 || cfg.batch_size == 0 || cfg.target_samples == 0 {
        return Err(Error::invalid("steps, batch_size and target_samples must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.c) || !(cfg.step_size > 0.0) {
        return Err(Error::invalid("need c in [0, 1) and a positive step size"));
    }
    let mut d = init;
    let mut batch_rng = stream(cfg.batch_seed, "learn/batch", 0);
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let zs: Vec<Vec<f64>> = (0..cfg.batch_size).map(|_| states.sample(&mut batch_rng)).collect();
        let pairs = permuted_pairs(&mut batch_rng, cfg.batch_size, {
            let mut k = 0;
            move |_| {
                k += 1;
                k - 1
            }
        });
        let scale = 1.0 / pairs.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; d.weights.len()];
        for (slot, &(p, q)) in pairs.iter().enumerate() {
            let (z, w) = (&zs[p], &zs[q]);
            let seed = derive_seed(cfg.noise_seed, "learn/noise", (step * cfg.batch_size + slot) as u64);
            let mut rng = rng_from_seed(seed);
            let eval = |x: &[f64], y: &[f64]| d.eval(x, y);
            let mut target = 0.0;
            for _ in 0..cfg.target_samples {
                target += draw_eps_gaussian(mdp, policy, cfg.c, &eval, z, w, &mut rng)?;
            }
            target /= cfg.target_samples as f64;
            let feats = d.features(z, w);
            let pred: f64 = feats.iter().zip(&d.weights).map(|(f, w)| f * w).sum();
            let r = pred - target;
            loss += scale * r * r;
            grad.iter_mut().zip(&feats).for_each(|(g, f)| *g += scale * 2.0 * r * f);
        }
        for (w, g) in d.weights.iter_mut().zip(&grad) {
            *w = (*w - cfg.step_size * g).max(0.0);
        }
        if !loss.is_finite() || d.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { step, history });
        }
        history.push(HistoryRow {
            step,
            loss,
            sup_error: None,
        });
    }
    Ok(SeparableTraining { distance: d, history })
}

/// Residual between `d(z, z')` and a Monte-Carlo estimate of the entangled
/// target `E[G + c · d(z₊, z'₊)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub distance: f64,
    pub target_mean: f64,
    pub target_stderr: f64,
}

impl ConsistencyRow {
    pub fn residual(&self) -> f64 {
        (self.distance - self.target_mean).abs()
    }
}

pub fn consistency_check(
    mdp: &GaussianLinearMdp,
    policy: &TanhGaussianPolicy,
    c: f64,
    d: &SeparableDistance,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n_mc: usize,
    seed: u64,
) -> Result<Vec<ConsistencyRow>> {
    let eval = |x: &[f64], y: &[f64]| d.eval(x, y);
    pairs
        .iter()
        .enumerate()
        .map(|(k, (z, w))| {
            let mut rng = stream(seed, "learn/consistency", k as u64);
            let mut stats = SampleStats::default();
            for _ in 0..n_mc {
                stats.push(draw_eps_gaussian(mdp, policy, c, &eval, z, w, &mut rng)?);
            }
            Ok(ConsistencyRow {
                distance: d.eval(z, w),
                target_mean: stats.mean,
                target_stderr: stats.std_error(),
            })
        })
        .collect()
}

/// Draws `count` state pairs from `states`.
pub fn sample_state_pairs<R: Rng + ?Sized>(
    states: &StateBox,
    count: usize,
    rng: &mut R,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count).map(|_| (states.sample(rng), states.sample(rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    /// Rewards read coordinate 0 only; coordinate 0 evolves as
    /// `z₊ = α z + (σ₀ + τ z) ε`, the others are pinned.
    fn one_coordinate_testbed(alpha: f64, sigma0: f64, tau: f64, rho: f64, c: f64) -> GaussianLinearMdp {
        let n = 3;
        GaussianLinearMdp {
            state_gain: Matrix::from_fn(n, n, |i, j| if i == 0 && j == 0 { alpha } else { 0.0 }),
            action_gain: Matrix::zeros(n, 1),
            offset: vec![0.0; n],
            stddev_base: vec![sigma0, 0.3, 0.3],
            stddev_slope: vec![tau, 0.0, 0.0],
            reward_state: vec![rho, 0.0, 0.0],
            reward_action: vec![0.0],
            reward_bias: 0.0,
            discount: c,
        }
    }

    fn still_policy() -> TanhGaussianPolicy {
        TanhGaussianPolicy {
            gain: Matrix::zeros(1, 3),
            bias: vec![0.0],
            stddev: vec![0.5],
        }
    }

    #[test]
    fn features_and_eval() {
        let d = SeparableDistance::new(2, 2, vec![1.0, 0.5, 0.0, 2.0]).unwrap();
        assert_eq!(d.features(&[1.0, 0.0], &[-1.0, 3.0]), vec![2.0, 4.0, 3.0, 9.0]);
        assert_eq!(d.eval(&[1.0, 0.0], &[-1.0, 3.0]), 2.0 + 2.0 + 18.0);
        assert!(SeparableDistance::new(2, 0, vec![]).is_err());
        assert!(SeparableDistance::new(1, 1, vec![-1.0]).is_err());
    }

    #[test]
    fn zero_constant_fit_matches_reward_gap() {
        let rho = 0.8;
        let mdp = one_coordinate_testbed(0.5, 1e-9, 0.0, rho, 0.0);
        let pol = still_policy();
        let states = StateBox::cube(3, 1.0).unwrap();
        let cfg = SeparableConfig {
            c: 0.0,
            max_power: 2,
            steps: 4000,
            step_size: 0.05,
            batch_size: 16,
            target_samples: 1,
            ..SeparableConfig::default()
        };
        let fit = train_separable_gaussian(&mdp, &pol, &states, SeparableDistance::zeros(3, 2).unwrap(), &cfg).unwrap();
        let mut rng = rng_from_seed(77);
        for (z, w) in sample_state_pairs(&states, 50, &mut rng) {
            let g = rho * (z[0] - w[0]).abs();
            if g > 0.05 {
                assert!((fit.distance.eval(&z, &w) - g).abs() <= 0.02 * g, "{} vs {g}", fit.distance.eval(&z, &w));
            }
        }
    }

    #[test]
    fn pinned_coordinate_gets_no_weight() {
        let mdp = one_coordinate_testbed(0.5, 0.4, 0.0, 1.0, 0.5);
        let pol = still_policy();
        let states = StateBox::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]).unwrap();
        let cfg = SeparableConfig {
            steps: 300,
            ..SeparableConfig::default()
        };
        let fit = train_separable_gaussian(&mdp, &pol, &states, SeparableDistance::zeros(3, 2).unwrap(), &cfg).unwrap();
        for i in 1..3 {
            for j in 1..=2 {
                assert!(fit.distance.weight(i, j) <= 1e-3);
            }
        }
    }

    #[test]
    fn learned_fixed_point_is_consistent() {
        // target = |Δ|(ρ + c w E|α + τ ε|), so w* = ρ / (1 − c E|α + τ ε|)
        let (alpha, tau, rho, c) = (0.6, 0.2, 1.0, 0.7);
        let mdp = one_coordinate_testbed(alpha, 0.5, tau, rho, c);
        let pol = still_policy();
        let states = StateBox::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]).unwrap();
        let cfg = SeparableConfig {
            c,
            max_power: 1,
            steps: 4000,
            step_size: 0.01,
            batch_size: 32,
            target_samples: 4,
            ..SeparableConfig::default()
        };
        let fit = train_separable_gaussian(&mdp, &pol, &states, SeparableDistance::zeros(3, 1).unwrap(), &cfg).unwrap();
        let grid = crate::transport::NormalQuantileGrid::new(200_000);
        let e_abs = grid.wp_pow(alpha, tau, 0.0, 0.0, 1.0).unwrap();
        let w_star = rho / (1.0 - c * e_abs);
        assert!((fit.distance.weight(0, 1) - w_star).abs() < 0.02 * w_star, "{} vs {w_star}", fit.distance.weight(0, 1));
        let mut rng = rng_from_seed(5);
        let held_out = sample_state_pairs(&states, 20, &mut rng);
        let rows = consistency_check(&mdp, &pol, c, &fit.distance, &held_out, 2_000, 6).unwrap();
        let bad = rows
            .iter()
            .filter(|r| r.residual() > 3.0 * r.target_stderr)
            .count();
        assert_eq!(bad, 0, "{rows:?}");
    }
}
