use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;

use super::check_distribution;

/// Tabular MDP with rewards `R(z, a)` and transitions `P(z' | z, a)`.
///
/// `discount` doubles as the operator constant `c` wherever an operator is
/// built straight from the MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    // [state][action][next_state]
    transition: Vec<f64>,
    // [state][action]
    reward: Vec<f64>,
    discount: f64,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("an MDP needs at least one state and one action"));
        }
        ensure_len("transition tensor", n_states * n_actions * n_states, transition.len())?;
        ensure_len("reward table", n_states * n_actions, reward.len())?;
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::invalid(format!("discount {discount} outside [0, 1)")));
        }
        if let Some(r) = reward.iter().find(|r| !r.is_finite()) {
            return Err(Error::invalid(format!("reward {r} is not finite")));
        }
        for (k, row) in transition.chunks(n_states).enumerate() {
            check_distribution(row, &format!("transition row (z={}, a={})", k / n_actions, k % n_actions))?;
        }
        Ok(FiniteMdp {
            n_states,
            n_actions,
            transition,
            reward,
            discount,
        })
    }

    /// Builds an MDP from nested `[state][action][next]` and `[state][action]` tables.
    pub fn from_tables(
        transition: &[Vec<Vec<f64>>],
        reward: &[Vec<f64>],
        discount: f64,
    ) -> Result<Self> {
        let n_states = transition.len();
        let n_actions = transition.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        for per_state in transition {
            ensure_len("transition actions", n_actions, per_state.len())?;
            for row in per_state {
                ensure_len("transition row", n_states, row.len())?;
                flat.extend_from_slice(row);
            }
        }
        let mut r = Vec::with_capacity(n_states * n_actions);
        ensure_len("reward states", n_states, reward.len())?;
        for row in reward {
            ensure_len("reward actions", n_actions, row.len())?;
            r.extend_from_slice(row);
        }
        Self::new(n_states, n_actions, flat, r, discount)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::invalid(format!("discount {discount} outside [0, 1)")));
        }
        self.discount = discount;
        Ok(self)
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.n_actions + action]
    }

    /// Next-state distribution `P(· | state, action)`.
    #[inline]
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.n_actions + action) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    /// True when every transition row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.transition
            .chunks(self.n_states)
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1)
    }

    pub(crate) fn check_state(&self, state: usize) -> Result<()> {
        if state < self.n_states {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "state index {state} out of range (n_states = {})",
                self.n_states
            )))
        }
    }
}

/// Stochastic policy `π(a | z)` over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::invalid("a policy needs at least one state and one action"));
        }
        ensure_len("policy table", n_states * n_actions, probs.len())?;
        for (z, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row, &format!("policy row (z={z})"))?;
        }
        Ok(TabularPolicy {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(rows.len() * n_actions);
        for row in rows {
            ensure_len("policy row", n_actions, row.len())?;
            probs.extend_from_slice(row);
        }
        Self::new(rows.len(), n_actions, probs)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Result<Self> {
        let p = 1.0 / n_actions as f64;
        Self::new(n_states, n_actions, vec![p; n_states * n_actions])
    }

    /// Deterministic policy choosing `actions[z]` in state `z`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (z, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::invalid(format!("action {a} out of range")));
            }
            probs[z * n_actions + a] = 1.0;
        }
        Self::new(actions.len(), n_actions, probs)
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state * self.n_actions + action]
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Copies the rows of the original states onto a relabelled state set,
    /// `origin[new] = old`.
    pub fn lift(&self, origin: &[usize]) -> Result<Self> {
        let mut probs = Vec::with_capacity(origin.len() * self.n_actions);
        for &o in origin {
            if o >= self.n_states {
                return Err(Error::invalid(format!("origin state {o} out of range")));
            }
            probs.extend_from_slice(self.row(o));
        }
        Self::new(origin.len(), self.n_actions, probs)
    }

    pub(crate) fn check_compatible(&self, mdp: &FiniteMdp) -> Result<()> {
        ensure_len("policy states", mdp.n_states(), self.n_states)?;
        ensure_len("policy actions", mdp.n_actions(), self.n_actions)
    }
}

/// Policy-averaged reward vector and transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDynamics {
    pub reward: Vec<f64>,
    pub transition: Matrix,
}

/// `R(z, π) = Σ_a π(a|z) R(z, a)` and `P(z' | z, π) = Σ_a π(a|z) P(z' | z, a)`.
pub fn policy_averaged_dynamics(mdp: &FiniteMdp, policy: &TabularPolicy) -> Result<PolicyDynamics> {
    policy.check_compatible(mdp)?;
    let n = mdp.n_states();
    let mut reward = vec![0.0; n];
    let mut transition = Matrix::zeros(n, n);
    for z in 0..n {
        for a in 0..mdp.n_actions() {
            let w = policy.prob(z, a);
            if w == 0.0 {
                continue;
            }
            reward[z] += w * mdp.reward(z, a);
            for (next, &p) in mdp.transition_row(z, a).iter().enumerate() {
                transition.set(z, next, transition.get(z, next) + w * p);
            }
        }
    }
    Ok(PolicyDynamics { reward, transition })
}

/// On-policy state values `V = R_π + γ P_π V`, solved by successive
/// approximation until the sup-norm change drops below `tol`.
pub fn policy_value(mdp: &FiniteMdp, policy: &TabularPolicy, tol: f64) -> Result<Vec<f64>> {
    let dyn_ = policy_averaged_dynamics(mdp, policy)?;
    let n = mdp.n_states();
    let gamma = mdp.discount();
    let mut v = vec![0.0; n];
    for _ in 0..1_000_000 {
        let next: Vec<f64> = (0..n)
            .map(|z| {
                dyn_.reward[z]
                    + gamma
                        * dyn_
                            .transition
                            .row(z)
                            .iter()
                            .zip(&v)
                            .map(|(p, x)| p * x)
                            .sum::<f64>()
            })
            .collect();
        let change = next
            .iter()
            .zip(&v)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if change <= tol {
            return Ok(v);
        }
    }
    Err(Error::Numerical("policy evaluation did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_action_mdp() -> FiniteMdp {
        FiniteMdp::from_tables(
            &[
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            ],
            &[vec![0.0, 1.0], vec![2.0, 3.0]],
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        assert!(FiniteMdp::new(1, 1, vec![0.5], vec![0.0], 0.5).is_err());
        assert!(FiniteMdp::new(1, 1, vec![1.0], vec![0.0], 1.0).is_err());
        assert!(FiniteMdp::new(1, 1, vec![1.0], vec![f64::NAN], 0.5).is_err());
        assert!(FiniteMdp::new(0, 1, vec![], vec![], 0.5).is_err());
    }

    #[test]
    fn deterministic_policy_selects_rows() {
        let mdp = two_action_mdp();
        let pol = TabularPolicy::deterministic(2, &[1, 0]).unwrap();
        let d = policy_averaged_dynamics(&mdp, &pol).unwrap();
        assert_eq!(d.reward, vec![1.0, 2.0]);
        assert_eq!(d.transition.row(0), mdp.transition_row(0, 1));
        assert_eq!(d.transition.row(1), mdp.transition_row(1, 0));
    }

    #[test]
    fn uniform_policy_averages_rewards() {
        let mdp = two_action_mdp();
        let pol = TabularPolicy::uniform(2, 2).unwrap();
        let d = policy_averaged_dynamics(&mdp, &pol).unwrap();
        assert_eq!(d.reward[0], 0.5);
        for z in 0..2 {
            let s: f64 = d.transition.row(z).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mdp = two_action_mdp();
        let pol = TabularPolicy::uniform(3, 2).unwrap();
        assert!(policy_averaged_dynamics(&mdp, &pol).is_err());
    }
}
