use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SeparableDistance;
use crate::coupling::squash;
use crate::error::{ensure_len, Result};
use crate::estimators::SampleStats;
use crate::mdp::{GaussianLinearMdp, TanhGaussianPolicy};
use crate::seed::stream;
use crate::transport::NormalQuantileGrid;

/// Allowance for midpoint-quadrature error in the reference.
pub const QUADRATURE_TOL: f64 = 1e-5;

/// Entangled Monte-Carlo estimate of `E d(z₊, z'₊)` against the sum of
/// per-coordinate optimal transport costs, for one pair and one realized
/// action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TightnessRow {
    pub pair: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub reference: f64,
    pub passed: bool,
}

impl TightnessRow {
    pub fn gap(&self) -> f64 {
        (self.mc_mean - self.reference).abs()
    }
}

/// For each pair, draws one entangled action pair, then compares the
/// entangled next-state expectation of `d` (from `n_mc` shared-noise draws)
/// with `Σ w_ij W_j^j` of the coordinate marginals computed on `grid`.
pub fn verify_tightness(
    mdp: &GaussianLinearMdp,
    policy: &TanhGaussianPolicy,
    d: &SeparableDistance,
    pairs: &[(Vec<f64>, Vec<f64>)],
    n_mc: usize,
    grid: &NormalQuantileGrid,
    seed: u64,
) -> Result<Vec<TightnessRow>> {
    mdp.validate()?;
    policy.validate(mdp)?;
    ensure_len("separable distance", mdp.state_dim(), d.dim())?;
    let n = mdp.state_dim();
    pairs
        .iter()
        .enumerate()
        .map(|(k, (z, w))| {
            ensure_len("state", n, z.len())?;
            ensure_len("state", n, w.len())?;
            let mut rng = stream(seed, "verify/tightness", k as u64);
            let eps: Vec<f64> = (0..mdp.action_dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let act = |s: &[f64]| -> Vec<f64> {
                policy
                    .mean(s)
                    .iter()
                    .zip(&policy.stddev)
                    .zip(&eps)
                    .map(|((m, sd), e)| squash(m + e * sd))
                    .collect()
            };
            let p = mdp.next_state(z, &act(z))?;
            let q = mdp.next_state(w, &act(w))?;

            let mut stats = SampleStats::default();
            let mut noise = vec![0.0; n];
            for _ in 0..n_mc {
                noise.iter_mut().for_each(|e| *e = StandardNormal.sample(&mut rng));
                stats.push(d.eval(&p.transform(&noise), &q.transform(&noise)));
            }
            let mut reference = 0.0;
            for i in 0..n {
                for j in 1..=d.max_power() {
                    let wij = d.weight(i, j);
                    if wij > 0.0 {
                        reference += wij * grid.wp_pow(p.mean[i], p.stddev[i], q.mean[i], q.stddev[i], j as f64)?;
                    }
                }
            }
            let se = stats.std_error();
            Ok(TightnessRow {
                pair: k,
                mc_mean: stats.mean,
                mc_stderr: se,
                reference,
                passed: (stats.mean - reference).abs() <= 3.0 * se + QUADRATURE_TOL,
            })
        })
        .collect()
}

/// Random separable distance with every weight drawn from `[0, 1)`.
pub fn random_separable<R: Rng + ?Sized>(dim: usize, max_power: usize, rng: &mut R) -> Result<SeparableDistance> {
    SeparableDistance::new(dim, max_power, (0..dim * max_power).map(|_| rng.random::<f64>()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::mdp::StateBox;
    use crate::seed::rng_from_seed;

    fn shift_testbed() -> (GaussianLinearMdp, TanhGaussianPolicy) {
        let mdp = GaussianLinearMdp {
            state_gain: Matrix::from_rows(&[vec![1.0]]).unwrap(),
            action_gain: Matrix::zeros(1, 1),
            offset: vec![0.0],
            stddev_base: vec![1.0],
            stddev_slope: vec![0.0],
            reward_state: vec![0.0],
            reward_action: vec![0.0],
            reward_bias: 0.0,
            discount: 0.5,
        };
        let pol = TanhGaussianPolicy {
            gain: Matrix::zeros(1, 1),
            bias: vec![0.0],
            stddev: vec![1.0],
        };
        (mdp, pol)
    }

    #[test]
    fn shifted_unit_gaussians() {
        let (mdp, pol) = shift_testbed();
        let d = SeparableDistance::new(1, 1, vec![1.0]).unwrap();
        let grid = NormalQuantileGrid::new(100_000);
        let rows = verify_tightness(&mdp, &pol, &d, &[(vec![0.0], vec![2.0])], 1000, &grid, 3).unwrap();
        assert!((rows[0].mc_mean - 2.0).abs() < 1e-12);
        assert!((rows[0].reference - 2.0).abs() < 1e-9);
        assert!(rows[0].passed);
    }

    #[test]
    fn equal_laws_give_zero() {
        let (mdp, pol) = shift_testbed();
        let d = SeparableDistance::new(1, 2, vec![0.7, 0.4]).unwrap();
        let grid = NormalQuantileGrid::new(1000);
        let rows = verify_tightness(&mdp, &pol, &d, &[(vec![1.5], vec![1.5])], 100, &grid, 3).unwrap();
        assert_eq!(rows[0].mc_mean, 0.0);
        assert_eq!(rows[0].reference, 0.0);
    }

    #[test]
    fn mixed_powers_in_three_dimensions() {
        let mdp = GaussianLinearMdp::random(3, 2, 0.9, 12).unwrap();
        let pol = TanhGaussianPolicy::random(&mdp, 13);
        let mut rng = rng_from_seed(14);
        let d = random_separable(3, 2, &mut rng).unwrap();
        let states = StateBox::cube(3, 2.0).unwrap();
        let pairs: Vec<_> = (0..10).map(|_| (states.sample(&mut rng), states.sample(&mut rng))).collect();
        let grid = NormalQuantileGrid::new(200_000);
        let rows = verify_tightness(&mdp, &pol, &d, &pairs, 20_000, &grid, 15).unwrap();
        let failures = rows.iter().filter(|r| !r.passed).count();
        assert!(failures <= 1, "{rows:?}");
    }
}
