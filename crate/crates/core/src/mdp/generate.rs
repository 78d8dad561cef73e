use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

use super::{FiniteMdp, TabularPolicy};

/// Lower bound of the uniform draws normalized into probability rows, so
/// generated rows have full support.
pub const ROW_FLOOR: f64 = 1e-6;

fn random_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    // uniform on (ROW_FLOOR, 1]
    let mut row: Vec<f64> = (0..len)
        .map(|_| ROW_FLOOR + (1.0 - ROW_FLOOR) * (1.0 - rng.random::<f64>()))
        .collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

/// Random full-support MDP. Rewards are uniform on `reward_range`; a point
/// interval gives constant rewards.
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    reward_range: (f64, f64),
    discount: f64,
    seed: u64,
) -> Result<FiniteMdp> {
    let (lo, hi) = reward_range;
    if n_states == 0 || n_actions == 0 {
        return Err(Error::invalid("n_states and n_actions must be positive"));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("empty reward interval [{lo}, {hi}]")));
    }
    let mut rng = rng_from_seed(seed);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        transition.extend(random_row(&mut rng, n_states));
    }
    let reward = (0..n_states * n_actions)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    FiniteMdp::new(n_states, n_actions, transition, reward, discount)
}

pub fn random_policy(mdp: &FiniteMdp, seed: u64) -> Result<TabularPolicy> {
    let mut rng = rng_from_seed(seed);
    let mut probs = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
    for _ in 0..mdp.n_states() {
        probs.extend(random_row(&mut rng, mdp.n_actions()));
    }
    TabularPolicy::new(mdp.n_states(), mdp.n_actions(), probs)
}

/// Unordered state pairs that are behaviorally equivalent by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BisimilarPairSet {
    pub pairs: Vec<(usize, usize)>,
}

/// Result of [`duplicate_states`]. `origin[new_state]` is the state of the
/// input MDP that `new_state` copies.
#[derive(Debug, Clone)]
pub struct Duplication {
    pub mdp: FiniteMdp,
    pub pairs: BisimilarPairSet,
    pub origin: Vec<usize>,
}

/// Replaces each state `z` with `copies[z]` identical copies (states absent
/// from the map keep a single copy). Copies share reward and transition
/// rows; mass flowing into a duplicated state is split uniformly among its
/// copies. New states are laid out original-major: all copies of state 0,
/// then all copies of state 1, and so on.
pub fn duplicate_states(mdp: &FiniteMdp, copies: &BTreeMap<usize, usize>) -> Result<Duplication> {
    let n = mdp.n_states();
    let mut count = vec![1usize; n];
    for (&z, &k) in copies {
        mdp.check_state(z)?;
        if k == 0 {
            return Err(Error::invalid(format!("copy count 0 for state {z}")));
        }
        count[z] = k;
    }
    let origin: Vec<usize> = (0..n)
        .flat_map(|z| std::iter::repeat_n(z, count[z]))
        .collect();
    let m = origin.len();
    let n_actions = mdp.n_actions();

    let mut transition = Vec::with_capacity(m * n_actions * m);
    let mut reward = Vec::with_capacity(m * n_actions);
    for &src in &origin {
        for a in 0..n_actions {
            let row = mdp.transition_row(src, a);
            transition.extend(origin.iter().map(|&dst| row[dst] / count[dst] as f64));
            reward.push(mdp.reward(src, a));
        }
    }

    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if origin[i] == origin[j] {
                pairs.push((i, j));
            }
        }
    }

    Ok(Duplication {
        mdp: FiniteMdp::new(m, n_actions, transition, reward, mdp.discount())?,
        pairs: BisimilarPairSet { pairs },
        origin,
    })
}
