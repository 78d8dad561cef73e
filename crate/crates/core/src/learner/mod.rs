//! Stop-gradient learning of bisimulation distances: a tabular
//! parametrization on finite MDPs and a separable one on the
//! linear-Gaussian testbed.

mod separable;
mod tabular;
mod tightness;

pub use separable::{
    consistency_check, sample_state_pairs, train_separable_gaussian, ConsistencyRow, SeparableConfig, SeparableDistance,
    SeparableTraining,
};
pub use tabular::{
    bisim_loss_batch, loss_with_targets, sample_targets, train_tabular, LossGrad, TabularConfig,
    TabularDistanceParams, TabularTraining,
};
pub use tightness::{random_separable, verify_tightness, TightnessRow, QUADRATURE_TOL};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

/// One line of a training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryRow {
    pub step: usize,
    pub loss: f64,
    /// Sup-norm distance to the exact fixed point, when one is known.
    pub sup_error: Option<f64>,
}

/// Draws `batch_size` items uniformly and pairs each with the item at the
/// same position of a random permutation of the batch.
pub(crate) fn permuted_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    batch_size: usize,
    mut draw: impl FnMut(&mut R) -> usize,
) -> Vec<(usize, usize)> {
    let batch: Vec<usize> = (0..batch_size).map(|_| draw(rng)).collect();
    let mut perm = batch.clone();
    perm.shuffle(rng);
    batch.into_iter().zip(perm).collect()
}
