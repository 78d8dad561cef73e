use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coupling::squash;
use crate::error::{ensure_len, Result};
use crate::mdp::{GaussianLinearMdp, TanhGaussianPolicy};
use crate::transport::w2_diag_gaussian;

fn normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn act(policy: &TanhGaussianPolicy, z: &[f64], noise: &[f64]) -> Vec<f64> {
    policy
        .mean(z)
        .iter()
        .zip(&policy.stddev)
        .zip(noise)
        .map(|((m, s), e)| squash(m + e * s))
        .collect()
}

fn check(mdp: &GaussianLinearMdp, policy: &TanhGaussianPolicy, z: &[f64], w: &[f64]) -> Result<()> {
    policy.validate(mdp)?;
    ensure_len("state", mdp.state_dim(), z.len())?;
    ensure_len("state", mdp.state_dim(), w.len())
}

/// Entangled draw on the continuous testbed: one noise vector drives both
/// actions, a second one drives both next states. Returns
/// `|r(z, a) − r(z', a')| + c · d(z₊, z'₊)`.
pub fn draw_eps_gaussian<R, D>(
    mdp: &GaussianLinearMdp,
    policy: &TanhGaussianPolicy,
    c: f64,
    d: &D,
    z: &[f64],
    w: &[f64],
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    D: Fn(&[f64], &[f64]) -> f64 + ?Sized,
{
    check(mdp, policy, z, w)?;
    let e = normals(rng, mdp.action_dim());
    let (a, b) = (act(policy, z, &e), act(policy, w, &e));
    let g = (mdp.reward(z, &a) - mdp.reward(w, &b)).abs();
    let e = normals(rng, mdp.state_dim());
    let s = mdp.next_state(z, &a)?.transform(&e);
    let t = mdp.next_state(w, &b)?.transform(&e);
    Ok(g + c * d(&s, &t))
}

/// DBC-style draw on the continuous testbed: independent actions, reward
/// gap plus `c` times the closed-form W2 between the two next-state
/// Gaussians.
pub fn draw_dbc_gaussian<R: Rng + ?Sized>(
    mdp: &GaussianLinearMdp,
    policy: &TanhGaussianPolicy,
    c: f64,
    z: &[f64],
    w: &[f64],
    rng: &mut R,
) -> Result<f64> {
    check(mdp, policy, z, w)?;
    let m = mdp.action_dim();
    let a = act(policy, z, &normals(rng, m));
    let b = act(policy, w, &normals(rng, m));
    let g = (mdp.reward(z, &a) - mdp.reward(w, &b)).abs();
    Ok(g + c * w2_diag_gaussian(&mdp.next_state(z, &a)?, &mdp.next_state(w, &b)?)?)
}
