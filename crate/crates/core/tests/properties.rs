use bisim_core::coupling::{entangled_segments_of, InverseSampler};
use bisim_core::mdp::{random_mdp, random_policy};
use bisim_core::operators::{BisimOperator, OperatorKind, SimilarityG, StateMetric};
use bisim_core::transport::{w1_discrete, w1_discrete_bruteforce, DiscreteDistribution};
use bisim_core::Matrix;
use proptest::prelude::*;

fn distribution(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], len).prop_filter_map("needs mass", |w| {
        let t: f64 = w.iter().sum();
        (t > 0.0).then(|| w.iter().map(|x| x / t).collect())
    })
}

/// Euclidean distances between random planar points: a genuine metric.
fn metric_costs(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n).prop_map(move |pts| {
        Matrix::from_fn(n, n, |i, j| {
            let (a, b) = (pts[i], pts[j]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
    })
}

fn dd(w: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::new(w.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn w1_matches_vertex_enumeration(
        (p, q, cost) in (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
            (distribution(m), distribution(n), prop::collection::vec(0.0f64..5.0, m * n))
        })
    ) {
        let (m, n) = (p.len(), q.len());
        let cost = Matrix::from_fn(m, n, |i, j| cost[i * n + j]);
        let fast = w1_discrete(&dd(&p), &dd(&q), &cost).unwrap();
        let slow = w1_discrete_bruteforce(&dd(&p), &dd(&q), &cost).unwrap();
        prop_assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
    }

    #[test]
    fn w1_is_a_metric_on_distributions(
        (p, q, r, cost) in (1usize..=6).prop_flat_map(|n| (distribution(n), distribution(n), distribution(n), metric_costs(n)))
    ) {
        let w = |a: &[f64], b: &[f64]| w1_discrete(&dd(a), &dd(b), &cost).unwrap();
        prop_assert!(w(&p, &p).abs() <= 1e-12);
        prop_assert!((w(&p, &q) - w(&q, &p)).abs() <= 1e-9);
        prop_assert!(w(&p, &r) <= w(&p, &q) + w(&q, &r) + 1e-9);
        let product: f64 = (0..p.len()).flat_map(|i| (0..q.len()).map(move |j| (i, j)))
            .map(|(i, j)| p[i] * q[j] * cost.get(i, j)).sum();
        prop_assert!(w(&p, &q) <= product + 1e-9);
    }

    #[test]
    fn entangled_segments_have_the_right_marginals(
        (p, q) in (1usize..=7).prop_flat_map(|n| (distribution(n), distribution(n)))
    ) {
        let segs = entangled_segments_of(&p, &q);
        prop_assert!(segs.len() + 1 <= p.iter().filter(|x| **x > 0.0).count() + q.iter().filter(|x| **x > 0.0).count());
        let mut mp = vec![0.0; p.len()];
        let mut mq = vec![0.0; q.len()];
        for s in &segs {
            prop_assert!(s.weight > 0.0);
            mp[s.x] += s.weight;
            mq[s.y] += s.weight;
        }
        for i in 0..p.len() {
            prop_assert!((mp[i] - p[i]).abs() <= 1e-12);
            prop_assert!((mq[i] - q[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn shared_uniform_realizes_the_segments(p in distribution(5), q in distribution(5), u in 1e-9f64..1.0) {
        let (sp, sq) = (InverseSampler::canonical(&p), InverseSampler::canonical(&q));
        let (x, y) = (sp.sample(u), sq.sample(u));
        let mut lo = 0.0;
        let mut hit = None;
        for s in entangled_segments_of(&p, &q) {
            if u > lo && u <= lo + s.weight {
                hit = Some((s.x, s.y));
            }
            lo += s.weight;
        }
        if let Some(h) = hit {
            prop_assert_eq!(h, (x, y));
        }
    }

    #[test]
    fn operators_are_monotone(
        seed in 0u64..10_000,
        n in 2usize..=5,
        na in 1usize..=3,
        c in 0.1f64..0.95,
        bumps in prop::collection::vec(0.0f64..1.0, 15),
    ) {
        let mdp = random_mdp(n, na, (0.0, 1.0), 0.9, seed).unwrap();
        let pol = random_policy(&mdp, seed ^ 0xabc).unwrap();
        let g = SimilarityG::reward_diff(&mdp);
        let lo = StateMetric::from_pairs(n, |i, j| if i == j { 0.0 } else { 0.2 + 0.1 * ((i * 7 + j * 3) % 5) as f64 }).unwrap();
        let mut k = 0;
        let hi = StateMetric::from_pairs(n, |i, j| {
            if i == j { 0.0 } else { k += 1; lo.get(i, j) + bumps[k % bumps.len()] }
        }).unwrap();
        for kind in [OperatorKind::Pi, OperatorKind::Eps(g.clone()), OperatorKind::EpsBar(g.clone())] {
            let op = BisimOperator::new(&mdp, &pol, &kind, c).unwrap();
            let (a, b) = (op.apply(&lo).unwrap(), op.apply(&hi).unwrap());
            prop_assert!(a.min_gap_to(&b) >= -1e-12, "{:?}", kind.tag());
        }
    }
}
