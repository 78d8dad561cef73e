use rand::Rng;

use crate::coupling::InverseSampler;
use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;
use crate::mdp::{FiniteMdp, TabularPolicy};
use crate::operators::{SimilarityG, StateMetric};
use crate::transport::solve_transport;

/// Inverse-CDF samplers for a policy and an MDP's transition rows, in
/// canonical atom order.
#[derive(Debug, Clone)]
pub struct TabularSampler {
    n_states: usize,
    n_actions: usize,
    rewards: Vec<f64>,
    rows: Matrix,
    probs: Matrix,
    policy: Vec<InverseSampler>,
    transitions: Vec<InverseSampler>,
}

impl TabularSampler {
    pub fn new(mdp: &FiniteMdp, policy: &TabularPolicy) -> Result<Self> {
        policy.check_compatible(mdp)?;
        let (n, na) = (mdp.n_states(), mdp.n_actions());
        let rows = Matrix::from_fn(n * na, n, |r, s| mdp.transition_row(r / na, r % na)[s]);
        Ok(TabularSampler {
            n_states: n,
            n_actions: na,
            rewards: mdp.rewards().to_vec(),
            policy: (0..n).map(|z| InverseSampler::canonical(policy.row(z))).collect(),
            transitions: (0..n * na).map(|r| InverseSampler::canonical(rows.row(r))).collect(),
            rows,
            probs: Matrix::from_fn(n, na, |z, a| policy.prob(z, a)),
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub(crate) fn check_pair(&self, z: usize, w: usize) -> Result<()> {
        if z >= self.n_states || w >= self.n_states {
            return Err(Error::invalid(format!("pair ({z}, {w}) out of range")));
        }
        Ok(())
    }

    pub(crate) fn check_metric(&self, d: &StateMetric) -> Result<()> {
        ensure_len("estimator metric", self.n_states, d.n())
    }

    #[inline]
    fn next(&self, z: usize, a: usize, u: f64) -> usize {
        self.transitions[z * self.n_actions + a].sample(u)
    }

    /// One draw of `G(z, a, z', a') + c · d(z₊, z'₊)` with the action pair and
    /// the next-state pair each taken from the entangled coupling.
    pub fn draw_eps<R: Rng + ?Sized>(
        &self,
        g: &SimilarityG,
        c: f64,
        d: &StateMetric,
        z: usize,
        w: usize,
        rng: &mut R,
    ) -> f64 {
        let u: f64 = rng.random();
        let (a, b) = (self.policy[z].sample(u), self.policy[w].sample(u));
        let v: f64 = rng.random();
        let (s, t) = (self.next(z, a, v), self.next(w, b, v));
        g.eval_unchecked(z, a, w, b) + c * d.get(s, t)
    }

    /// Same target with independent actions and independent next states.
    pub fn draw_eps_independent<R: Rng + ?Sized>(
        &self,
        g: &SimilarityG,
        c: f64,
        d: &StateMetric,
        z: usize,
        w: usize,
        rng: &mut R,
    ) -> f64 {
        let a = self.policy[z].sample(rng.random());
        let b = self.policy[w].sample(rng.random());
        let s = self.next(z, a, rng.random());
        let t = self.next(w, b, rng.random());
        g.eval_unchecked(z, a, w, b) + c * d.get(s, t)
    }

    /// Exact `W1(P(·|z, a), P(·|w, b); d)` for every action pair.
    pub fn action_pair_w1(&self, d: &StateMetric, z: usize, w: usize) -> Result<Matrix> {
        let na = self.n_actions;
        let mut out = Matrix::zeros(na, na);
        for a in 0..na {
            for b in 0..na {
                let sol = solve_transport(self.rows.row(z * na + a), self.rows.row(w * na + b), d.matrix())?;
                out.set(a, b, sol.cost);
            }
        }
        Ok(out)
    }

    /// One DBC-style draw: independent actions, reward gap plus `c` times
    /// the exact W1 for that action pair (looked up in `w1`, see
    /// [`Self::action_pair_w1`]).
    pub fn draw_dbc<R: Rng + ?Sized>(&self, c: f64, w1: &Matrix, z: usize, w: usize, rng: &mut R) -> f64 {
        let na = self.n_actions;
        let a = self.policy[z].sample(rng.random());
        let b = self.policy[w].sample(rng.random());
        (self.rewards[z * na + a] - self.rewards[w * na + b]).abs() + c * w1.get(a, b)
    }

    /// One PSM-style draw: exact mean-action gap plus `c · d(z₊, z'₊)` for
    /// independently sampled actions and next states.
    pub fn draw_psm<R: Rng + ?Sized>(
        &self,
        means: &SimilarityG,
        c: f64,
        d: &StateMetric,
        z: usize,
        w: usize,
        rng: &mut R,
    ) -> f64 {
        let a = self.policy[z].sample(rng.random());
        let b = self.policy[w].sample(rng.random());
        let s = self.next(z, a, rng.random());
        let t = self.next(w, b, rng.random());
        means.eval_unchecked(z, 0, w, 0) + c * d.get(s, t)
    }

    /// Exact expectation of [`Self::draw_eps_independent`].
    pub fn independent_eps_expectation(&self, g: &SimilarityG, c: f64, d: &StateMetric, z: usize, w: usize) -> f64 {
        let na = self.n_actions;
        let mut acc = 0.0;
        for a in 0..na {
            for b in 0..na {
                let p = self.probs.get(z, a) * self.probs.get(w, b);
                if p == 0.0 {
                    continue;
                }
                let (ra, rb) = (self.rows.row(z * na + a), self.rows.row(w * na + b));
                let mut next = 0.0;
                for (s, &x) in ra.iter().enumerate() {
                    for (t, &y) in rb.iter().enumerate() {
                        next += x * y * d.get(s, t);
                    }
                }
                acc += p * (g.eval_unchecked(z, a, w, b) + c * next);
            }
        }
        acc
    }
}
