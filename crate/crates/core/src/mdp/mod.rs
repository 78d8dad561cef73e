//! Finite and Gaussian-linear MDP data model, tabular policies and
//! generators.

mod finite;
mod gaussian;
mod generate;

pub use finite::{policy_averaged_dynamics, policy_value, FiniteMdp, PolicyDynamics, TabularPolicy};
pub use gaussian::{GaussianLinearMdp, StateBox, TanhGaussianPolicy};
pub use generate::{
    duplicate_states, random_mdp, random_policy, BisimilarPairSet, Duplication, ROW_FLOOR,
};

/// Tolerance on probability rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

pub(crate) fn check_distribution(row: &[f64], what: &str) -> crate::Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(crate::Error::invalid(format!(
                "{what}: probability {p} is negative or non-finite"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(crate::Error::invalid(format!(
            "{what}: probabilities sum to {sum:.17}, expected 1"
        )));
    }
    Ok(())
}
