//! Wasserstein computations: exact discrete W1, univariate W_p by
//! inverse-CDF quadrature, and the diagonal-Gaussian W2 closed form.

mod bruteforce;
mod discrete;
mod univariate;

pub use bruteforce::{w1_discrete_bruteforce, BRUTEFORCE_MAX_CELLS};
pub use discrete::{w1_discrete, w1_discrete_with_plan, TransportSolution};
pub use univariate::{normal_quantile, wp_univariate, NormalQuantileGrid, QUANTILE_CLAMP};

pub(crate) use discrete::solve_transport;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_len, Error, Result};

/// Probability weights over an indexed atom set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("distribution has no atoms"));
        }
        crate::mdp::check_distribution(&weights, "distribution")?;
        Ok(DiscreteDistribution { weights })
    }

    pub fn point_mass(len: usize, atom: usize) -> Result<Self> {
        if atom >= len {
            return Err(Error::invalid(format!("atom {atom} out of range")));
        }
        let mut w = vec![0.0; len];
        w[atom] = 1.0;
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gaussian with independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, stddev: Vec<f64>) -> Result<Self> {
        ensure_len("gaussian stddev", mean.len(), stddev.len())?;
        if let Some(s) = stddev.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("stddev {s} must be positive and finite")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("gaussian mean must be finite"));
        }
        Ok(DiagonalGaussian { mean, stddev })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Reparametrized sample `μ + ε ∘ σ`.
    pub fn transform(&self, noise: &[f64]) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.stddev)
            .zip(noise)
            .map(|((m, s), e)| m + e * s)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let noise: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        self.transform(&noise)
    }
}

/// `sqrt(Σ_i (μ_p,i − μ_q,i)² + (σ_p,i − σ_q,i)²)`, the W2 distance (under
/// the Euclidean ground metric) between coordinate-independent Gaussians.
pub fn w2_diag_gaussian(p: &DiagonalGaussian, q: &DiagonalGaussian) -> Result<f64> {
    ensure_len("w2_diag_gaussian", p.dim(), q.dim())?;
    let sq: f64 = (0..p.dim())
        .map(|i| {
            let dm = p.mean[i] - q.mean[i];
            let ds = p.stddev[i] - q.stddev[i];
            dm * dm + ds * ds
        })
        .sum();
    Ok(sq.sqrt())
}
