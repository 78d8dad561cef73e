use super::metric::StateMetric;
use super::operator::{BisimOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, TabularPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub metric: StateMetric,
    pub iterations: usize,
    /// Sup-norm change of the last application.
    pub residual: f64,
    /// Sup-norm change of every application, in order.
    pub residuals: Vec<f64>,
}

/// Iterates `op` from the all-zero matrix until the sup-norm change is at
/// most `tol`. With `c = 0` one application is already exact.
pub fn fixed_point(op: &BisimOperator, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    let mut d = StateMetric::zeros(op.n_states());
    let mut residuals = Vec::new();
    for k in 1..=max_iter {
        let next = op.apply(&d)?;
        let change = next.sup_distance(&d);
        residuals.push(change);
        d = next;
        if change <= tol || op.c() == 0.0 {
            return Ok(FixedPoint {
                metric: d,
                iterations: k,
                residual: change,
                residuals,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
        last: Box::new(d),
    })
}

pub fn solve(
    kind: &OperatorKind,
    mdp: &FiniteMdp,
    policy: &TabularPolicy,
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    fixed_point(&BisimOperator::new(mdp, policy, kind, c)?, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{duplicate_states, random_mdp, random_policy};
    use crate::operators::SimilarityG;
    use std::collections::BTreeMap;

    #[test]
    fn self_loop_closed_form() {
        let mdp = FiniteMdp::from_tables(
            &[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            &[vec![1.0], vec![0.0]],
            0.9,
        )
        .unwrap();
        let pol = TabularPolicy::uniform(2, 1).unwrap();
        let fp = solve(&OperatorKind::Pi, &mdp, &pol, 0.9, 1e-10, 10_000).unwrap();
        assert!((fp.metric.get(0, 1) - 10.0).abs() < 1e-8);
    }

    #[test]
    fn zero_constant_stops_after_one_step() {
        let mdp = random_mdp(4, 2, (0.0, 1.0), 0.9, 1).unwrap();
        let pol = random_policy(&mdp, 2).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let fp = solve(&OperatorKind::Eps(g.clone()), &mdp, &pol, 0.0, 1e-10, 10).unwrap();
        assert_eq!(fp.iterations, 1);
        for i in 0..4 {
            for j in 0..4 {
                let mut expect = 0.0;
                for s in crate::coupling::entangled_segments_of(pol.row(i), pol.row(j)) {
                    expect += s.weight * g.eval(i, s.x, j, s.y).unwrap();
                }
                if i == j {
                    expect = 0.0;
                }
                assert!((fp.metric.get(i, j) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let mdp = random_mdp(3, 2, (0.0, 1.0), 0.9, 8).unwrap();
        let pol = random_policy(&mdp, 9).unwrap();
        match solve(&OperatorKind::Pi, &mdp, &pol, 0.95, 1e-14, 3) {
            Err(Error::NotConverged { iterations, last, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.n(), 3);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
        assert!(solve(&OperatorKind::Pi, &mdp, &pol, 0.5, 0.0, 3).is_err());
    }

    #[test]
    fn duplicated_pairs_collapse() {
        let base = random_mdp(3, 2, (0.0, 1.0), 0.9, 21).unwrap();
        let copies = BTreeMap::from([(0, 2), (2, 3)]);
        let dup = duplicate_states(&base, &copies).unwrap();
        let pol = random_policy(&base, 22).unwrap().lift(&dup.origin).unwrap();
        let g = SimilarityG::reward_diff(&dup.mdp);
        for kind in [OperatorKind::Pi, OperatorKind::Eps(g.clone()), OperatorKind::EpsBar(g)] {
            let fp = solve(&kind, &dup.mdp, &pol, 0.9, 1e-10, 10_000).unwrap();
            for &(i, j) in &dup.pairs.pairs {
                assert!(fp.metric.get(i, j) <= 1e-8);
            }
        }
    }
}
