use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;
use crate::seed::rng_from_seed;
use crate::transport::DiagonalGaussian;

/// Continuous MDP whose next-state law is a diagonal Gaussian:
///
/// ```text
/// z₊ ~ N(A z + B a + b, diag(σ(z))²),   σ_i(z) = σ⁰_i + s_i · z_i
/// r(z, a) = ρ·z + κ·a + r₀
/// ```
///
/// Each coordinate of `z₊` is drawn independently given `(z, a)`, so the
/// transition kernel factorizes over coordinates by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinearMdp {
    pub state_gain: Matrix,
    pub action_gain: Matrix,
    pub offset: Vec<f64>,
    pub stddev_base: Vec<f64>,
    pub stddev_slope: Vec<f64>,
    pub reward_state: Vec<f64>,
    pub reward_action: Vec<f64>,
    pub reward_bias: f64,
    pub discount: f64,
}

impl GaussianLinearMdp {
    pub fn validate(&self) -> Result<()> {
        let n = self.state_dim();
        let m = self.action_dim();
        if n == 0 || m == 0 {
            return Err(Error::invalid("state and action dimensions must be positive"));
        }
        ensure_len("state gain columns", n, self.state_gain.cols())?;
        ensure_len("action gain rows", n, self.action_gain.rows())?;
        ensure_len("offset", n, self.offset.len())?;
        ensure_len("stddev base", n, self.stddev_base.len())?;
        ensure_len("stddev slope", n, self.stddev_slope.len())?;
        ensure_len("reward state weights", n, self.reward_state.len())?;
        ensure_len("reward action weights", m, self.reward_action.len())?;
        if self.stddev_base.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("stddev must be strictly positive in every coordinate"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::invalid(format!("discount {} outside [0, 1)", self.discount)));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.state_gain.rows()
    }

    pub fn action_dim(&self) -> usize {
        self.action_gain.cols()
    }

    pub fn next_state(&self, z: &[f64], a: &[f64]) -> Result<DiagonalGaussian> {
        let n = self.state_dim();
        ensure_len("state", n, z.len())?;
        ensure_len("action", self.action_dim(), a.len())?;
        let mut mean = self.offset.clone();
        let mut stddev = Vec::with_capacity(n);
        for i in 0..n {
            mean[i] += dot(self.state_gain.row(i), z) + dot(self.action_gain.row(i), a);
            stddev.push(self.stddev_base[i] + self.stddev_slope[i] * z[i]);
        }
        DiagonalGaussian::new(mean, stddev)
    }

    pub fn reward(&self, z: &[f64], a: &[f64]) -> f64 {
        dot(&self.reward_state, z) + dot(&self.reward_action, a) + self.reward_bias
    }

    /// Random testbed with constant-ish stddevs, for states in `[-2, 2]^n`.
    pub fn random(state_dim: usize, action_dim: usize, discount: f64, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut unif = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        let state_gain = Matrix::from_fn(state_dim, state_dim, |_, _| unif(-0.5, 0.5));
        let action_gain = Matrix::from_fn(state_dim, action_dim, |_, _| unif(-1.0, 1.0));
        let offset = (0..state_dim).map(|_| unif(-0.5, 0.5)).collect();
        let stddev_base = (0..state_dim).map(|_| unif(0.2, 1.0)).collect();
        let stddev_slope = (0..state_dim).map(|_| unif(-0.05, 0.05)).collect();
        let reward_state = (0..state_dim).map(|_| unif(-1.0, 1.0)).collect();
        let reward_action = (0..action_dim).map(|_| unif(-1.0, 1.0)).collect();
        let mdp = GaussianLinearMdp {
            state_gain,
            action_gain,
            offset,
            stddev_base,
            stddev_slope,
            reward_state,
            reward_action,
            reward_bias: 0.0,
            discount,
        };
        mdp.validate()?;
        Ok(mdp)
    }
}

/// Tanh-squashed Gaussian policy, `a_i = tanh(μ_i(z) + ε_i σ_i)` with
/// `μ(z) = K z + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhGaussianPolicy {
    pub gain: Matrix,
    pub bias: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl TanhGaussianPolicy {
    pub fn validate(&self, mdp: &GaussianLinearMdp) -> Result<()> {
        ensure_len("policy gain rows", mdp.action_dim(), self.gain.rows())?;
        ensure_len("policy gain columns", mdp.state_dim(), self.gain.cols())?;
        ensure_len("policy bias", mdp.action_dim(), self.bias.len())?;
        ensure_len("policy stddev", mdp.action_dim(), self.stddev.len())?;
        if self.stddev.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("policy stddev must be positive"));
        }
        Ok(())
    }

    /// Pre-squash mean `K z + k`.
    pub fn mean(&self, z: &[f64]) -> Vec<f64> {
        (0..self.gain.rows())
            .map(|i| dot(self.gain.row(i), z) + self.bias[i])
            .collect()
    }

    pub fn random(mdp: &GaussianLinearMdp, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut unif = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        let m = mdp.action_dim();
        TanhGaussianPolicy {
            gain: Matrix::from_fn(m, mdp.state_dim(), |_, _| unif(-0.5, 0.5)),
            bias: (0..m).map(|_| unif(-0.3, 0.3)).collect(),
            stddev: (0..m).map(|_| unif(0.2, 0.8)).collect(),
        }
    }
}

/// Axis-aligned box `center ± spread` from which training states are drawn
/// uniformly. A zero spread pins that coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    pub center: Vec<f64>,
    pub spread: Vec<f64>,
}

impl StateBox {
    pub fn new(center: Vec<f64>, spread: Vec<f64>) -> Result<Self> {
        ensure_len("state box", center.len(), spread.len())?;
        if spread.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::invalid("state box spread must be nonnegative"));
        }
        Ok(StateBox { center, spread })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.spread)
            .map(|(c, s)| c + s * (2.0 * rng.random::<f64>() - 1.0))
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residuals_are_coordinate_independent() {
        let mdp = GaussianLinearMdp::random(3, 2, 0.9, 4).unwrap();
        let z = [0.3, -0.2, 1.0];
        let a = [0.1, -0.4];
        let law = mdp.next_state(&z, &a).unwrap();
        let mut rng = rng_from_seed(9);
        let n = 200_000;
        let mut cov = [[0.0; 3]; 3];
        for _ in 0..n {
            let x: Vec<f64> = law.sample(&mut rng).iter().zip(&law.mean).map(|(s, m)| s - m).collect();
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += x[i] * x[j] / n as f64;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let corr = cov[i][j] / (cov[i][i] * cov[j][j]).sqrt();
                if i != j {
                    assert!(corr.abs() < 0.01, "corr[{i}][{j}] = {corr}");
                }
            }
        }
    }

    #[test]
    fn nonpositive_stddev_is_rejected() {
        let mut mdp = GaussianLinearMdp::random(2, 1, 0.9, 4).unwrap();
        mdp.stddev_slope = vec![1.0, 0.0];
        assert!(mdp.next_state(&[-10.0, 0.0], &[0.0]).is_err());
        mdp.stddev_base[1] = 0.0;
        assert!(mdp.validate().is_err());
    }
}
