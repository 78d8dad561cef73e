//! Univariate W_p via the inverse-CDF integral
//! `W_p(P, Q)^p = ∫₀¹ |F⁻¹(u) − G⁻¹(u)|^p du`, approximated by the midpoint
//! rule on `n_quad` uniform cells. Evaluation points are clamped to
//! `[δ, 1 − δ]` so unbounded quantile tails stay finite.

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Clamp `δ` applied to quadrature nodes.
pub const QUANTILE_CLAMP: f64 = 1e-12;

/// Standard normal quantile `Φ⁻¹(u)`.
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

fn check_power(power: f64, n_quad: usize) -> Result<()> {
    if !(power >= 1.0 && power.is_finite()) {
        return Err(Error::invalid(format!("power {power} must be a finite value >= 1")));
    }
    if n_quad == 0 {
        return Err(Error::invalid("n_quad must be positive"));
    }
    Ok(())
}

#[inline]
fn node(k: usize, n_quad: usize) -> f64 {
    ((k as f64 + 0.5) / n_quad as f64).clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP)
}

#[inline]
fn finish(sum: f64, n_quad: usize, power: f64) -> f64 {
    let mean = sum / n_quad as f64;
    if power == 1.0 {
        mean
    } else {
        mean.powf(1.0 / power)
    }
}

#[inline]
fn gap_pow(gap: f64, power: f64) -> f64 {
    let g = gap.abs();
    if power == 1.0 {
        g
    } else if power == 2.0 {
        g * g
    } else {
        g.powf(power)
    }
}

pub fn wp_univariate<F, G>(p_inv_cdf: F, q_inv_cdf: G, power: f64, n_quad: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_power(power, n_quad)?;
    let mut sum = 0.0;
    for k in 0..n_quad {
        let u = node(k, n_quad);
        let (x, y) = (p_inv_cdf(u), q_inv_cdf(u));
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::Numerical(format!(
                "inverse CDF evaluated to a non-finite value at u = {u}"
            )));
        }
        sum += gap_pow(x - y, power);
    }
    Ok(finish(sum, n_quad, power))
}

/// Cached standard-normal quantiles at the midpoint nodes, for repeated
/// Gaussian W_p quadratures on the same grid.
#[derive(Debug, Clone)]
pub struct NormalQuantileGrid {
    quantiles: Vec<f64>,
}

impl NormalQuantileGrid {
    pub fn new(n_quad: usize) -> Self {
        NormalQuantileGrid {
            quantiles: (0..n_quad).map(|k| normal_quantile(node(k, n_quad))).collect(),
        }
    }

    pub fn n_quad(&self) -> usize {
        self.quantiles.len()
    }

    /// Same midpoint sum as [`wp_univariate`] for `N(μ_p, σ_p²)` against
    /// `N(μ_q, σ_q²)`, using `F⁻¹(u) = μ + σ Φ⁻¹(u)`.
    pub fn wp(&self, mean_p: f64, std_p: f64, mean_q: f64, std_q: f64, power: f64) -> Result<f64> {
        Ok(finish(self.wp_pow_sum(mean_p, std_p, mean_q, std_q, power)?, self.n_quad(), power))
    }

    /// `W_p^p`, skipping the final root.
    pub fn wp_pow(&self, mean_p: f64, std_p: f64, mean_q: f64, std_q: f64, power: f64) -> Result<f64> {
        Ok(self.wp_pow_sum(mean_p, std_p, mean_q, std_q, power)? / self.n_quad() as f64)
    }

    fn wp_pow_sum(&self, mean_p: f64, std_p: f64, mean_q: f64, std_q: f64, power: f64) -> Result<f64> {
        check_power(power, self.n_quad())?;
        let dm = mean_p - mean_q;
        let ds = std_p - std_q;
        let sum: f64 = self.quantiles.iter().map(|&x| gap_pow(dm + ds * x, power)).sum();
        if sum.is_finite() {
            Ok(sum)
        } else {
            Err(Error::Numerical("gaussian quadrature overflowed".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inverse_cdfs() {
        let w = wp_univariate(normal_quantile, normal_quantile, 1.0, 1000).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn shift_gives_mean_gap() {
        let mu = 1.7;
        let w = wp_univariate(normal_quantile, |u| mu + normal_quantile(u), 1.0, 1_000_000).unwrap();
        assert!((w - mu).abs() < 1e-6, "{w}");
    }

    #[test]
    fn scale_gives_stddev_gap() {
        let w = wp_univariate(normal_quantile, |u| 2.0 * normal_quantile(u), 2.0, 1_000_000).unwrap();
        assert!((w - 1.0).abs() < 1e-5, "{w}");
        let grid = NormalQuantileGrid::new(1_000_000);
        assert!((grid.wp(0.0, 1.0, 0.0, 2.0, 2.0).unwrap() - w).abs() < 1e-12);
    }

    #[test]
    fn refinement_shrinks_changes() {
        let f = |u: f64| normal_quantile(u);
        let g = |u: f64| 0.3 + 1.5 * normal_quantile(u);
        let vals: Vec<f64> = [1_000, 2_000, 4_000, 8_000]
            .iter()
            .map(|&n| wp_univariate(f, g, 2.0, n).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs());
        }
    }

    #[test]
    fn rejects_bad_power_and_nan() {
        assert!(wp_univariate(|u| u, |u| u, 0.5, 10).is_err());
        assert!(wp_univariate(|u| u, |u| u, 1.0, 0).is_err());
        assert!(wp_univariate(|_| f64::NAN, |u| u, 1.0, 10).is_err());
    }

    #[test]
    fn quantile_sanity() {
        assert!(normal_quantile(0.5).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }
}
