use crate::error::{ensure_len, Error, Result};
use crate::mdp::{FiniteMdp, TabularPolicy};

/// Real vectors attached to each discrete action, used to form policy mean
/// actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEmbedding {
    vectors: Vec<Vec<f64>>,
}

impl ActionEmbedding {
    pub fn one_hot(n_actions: usize) -> Self {
        ActionEmbedding {
            vectors: (0..n_actions)
                .map(|a| (0..n_actions).map(|k| if k == a { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.is_empty() || dim == 0 {
            return Err(Error::invalid("action embedding must be non-empty"));
        }
        for v in &vectors {
            ensure_len("action embedding", dim, v.len())?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("action embedding must be finite"));
            }
        }
        Ok(ActionEmbedding { vectors })
    }

    pub fn n_actions(&self) -> usize {
        self.vectors.len()
    }

    /// `E_{a ~ π(·|z)}[e(a)]` for every state.
    pub fn policy_means(&self, policy: &TabularPolicy) -> Result<Vec<Vec<f64>>> {
        ensure_len("action embedding", policy.n_actions(), self.vectors.len())?;
        let dim = self.vectors[0].len();
        Ok((0..policy.n_states())
            .map(|z| {
                let mut mean = vec![0.0; dim];
                for (a, e) in self.vectors.iter().enumerate() {
                    let w = policy.prob(z, a);
                    mean.iter_mut().zip(e).for_each(|(m, x)| *m += w * x);
                }
                mean
            })
            .collect())
    }
}

/// State-action similarity `G(z, a, z', a')`.
#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityG {
    /// `|R(z, a) − R(z', a')|`
    RewardDiff { n_actions: usize, reward: Vec<f64> },
    /// `‖E_π[a | z] − E_π[a' | z']‖₁`; independent of the actions themselves.
    PolicyMeanDiff { n_actions: usize, means: Vec<Vec<f64>> },
}

/// Worst violations of the state-action metric axioms over a finite domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityAxioms {
    pub min_value: f64,
    pub max_self_distance: f64,
    pub max_asymmetry: f64,
    pub max_triangle_violation: f64,
}

impl SimilarityAxioms {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_value >= -tol
            && self.max_self_distance <= tol
            && self.max_asymmetry <= tol
            && self.max_triangle_violation <= tol
    }
}

impl SimilarityG {
    pub fn reward_diff(mdp: &FiniteMdp) -> Self {
        SimilarityG::RewardDiff {
            n_actions: mdp.n_actions(),
            reward: mdp.rewards().to_vec(),
        }
    }

    pub fn policy_mean_diff(policy: &TabularPolicy, embedding: &ActionEmbedding) -> Result<Self> {
        Ok(SimilarityG::PolicyMeanDiff {
            n_actions: policy.n_actions(),
            means: embedding.policy_means(policy)?,
        })
    }

    pub fn n_states(&self) -> usize {
        match self {
            SimilarityG::RewardDiff { n_actions, reward } => reward.len() / n_actions,
            SimilarityG::PolicyMeanDiff { means, .. } => means.len(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            SimilarityG::RewardDiff { n_actions, .. } | SimilarityG::PolicyMeanDiff { n_actions, .. } => {
                *n_actions
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimilarityG::RewardDiff { .. } => "reward",
            SimilarityG::PolicyMeanDiff { .. } => "policy-mean",
        }
    }

    pub fn eval(&self, z: usize, a: usize, z2: usize, a2: usize) -> Result<f64> {
        let (ns, na) = (self.n_states(), self.n_actions());
        if z >= ns || z2 >= ns || a >= na || a2 >= na {
            return Err(Error::invalid(format!(
                "G({z}, {a}, {z2}, {a2}) out of range for {ns} states and {na} actions"
            )));
        }
        Ok(self.eval_unchecked(z, a, z2, a2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, z: usize, a: usize, z2: usize, a2: usize) -> f64 {
        match self {
            SimilarityG::RewardDiff { n_actions, reward } => {
                (reward[z * n_actions + a] - reward[z2 * n_actions + a2]).abs()
            }
            SimilarityG::PolicyMeanDiff { means, .. } => {
                means[z].iter().zip(&means[z2]).map(|(x, y)| (x - y).abs()).sum()
            }
        }
    }

    pub(crate) fn check_compatible(&self, mdp: &FiniteMdp) -> Result<()> {
        ensure_len("similarity states", mdp.n_states(), self.n_states())?;
        ensure_len("similarity actions", mdp.n_actions(), self.n_actions())
    }

    /// Exhaustive check of nonnegativity, self-similarity, symmetry and the
    /// triangle inequality over every state-action triple.
    pub fn axioms(&self) -> SimilarityAxioms {
        let (ns, na) = (self.n_states(), self.n_actions());
        let sa: Vec<(usize, usize)> = (0..ns).flat_map(|z| (0..na).map(move |a| (z, a))).collect();
        let g = |x: (usize, usize), y: (usize, usize)| self.eval_unchecked(x.0, x.1, y.0, y.1);
        let mut out = SimilarityAxioms {
            min_value: f64::INFINITY,
            max_self_distance: 0.0,
            max_asymmetry: 0.0,
            max_triangle_violation: 0.0,
        };
        for &x in &sa {
            out.max_self_distance = out.max_self_distance.max(g(x, x).abs());
            for &y in &sa {
                let gxy = g(x, y);
                out.min_value = out.min_value.min(gxy);
                out.max_asymmetry = out.max_asymmetry.max((gxy - g(y, x)).abs());
                for &w in &sa {
                    out.max_triangle_violation = out.max_triangle_violation.max(g(x, w) - gxy - g(y, w));
                }
            }
        }
        out
    }
}
