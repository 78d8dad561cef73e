//! The property suite behind `bisim verify` and the acceptance target.
//!
//! Every check draws its randomness from streams derived from one root seed
//! and reports measured values in a fixed order, so the report text is a
//! pure function of [`VerifyOptions`]. Wall-clock times are returned
//! separately and never enter the report.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use bisim_core::estimators::{bias_audit, EstimatorKind, PreparedEstimator, SampleStats, SamplingMode};
use bisim_core::learner::{
    loss_with_targets, random_separable, sample_targets, train_tabular, verify_tightness, TabularConfig,
    TabularDistanceParams,
};
use bisim_core::mdp::{duplicate_states, random_mdp, random_policy, GaussianLinearMdp, StateBox, TanhGaussianPolicy};
use bisim_core::coupling::{entangled_discrete, independent_discrete};
use bisim_core::estimators::TabularSampler;
use bisim_core::operators::{solve, ActionEmbedding, OperatorKind, SimilarityG, StateMetric};
use bisim_core::seed::{derive_seed, stream};
use bisim_core::transport::{w1_discrete, w1_discrete_bruteforce, DiscreteDistribution, NormalQuantileGrid};
use bisim_core::{FiniteMdp, Matrix, TabularPolicy};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{self_loop_mdp, two_action_mdp};

/// Bias added to the fast transport solver when the corruption hook is on.
pub const CORRUPTION: f64 = 1e-6;

const SOLVE_TOL: f64 = 1e-11;
const MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplies instance and sample counts; 1.0 is the documented scale.
    pub scale: f64,
    /// Test hook: perturbs every fast W1 value before the oracle comparison.
    pub corrupt_transport: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 7,
            scale: 1.0,
            corrupt_transport: false,
        }
    }
}

impl VerifyOptions {
    fn count(&self, n: usize) -> usize {
        ((n as f64 * self.scale).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

pub const CHECK_NAMES: [&str; 10] = [
    "transport oracle equivalence",
    "mixture of distant atoms",
    "self-similarity",
    "fixed-point correctness",
    "operator ordering",
    "bisimilar states at zero",
    "separable tightness",
    "estimator unbiasedness and rate",
    "learner convergence",
    "metric axioms",
];

type Body = fn(&VerifyOptions) -> bisim_core::Result<(bool, String)>;

const BODIES: [Body; 10] = [
    transport_oracle,
    distant_atoms,
    self_similarity,
    fixed_points,
    ordering,
    bisimilar_zero,
    tightness,
    unbiasedness,
    learner,
    axioms,
];

/// Runs check `id` (1-based). Library errors count as failures.
pub fn run_check(id: usize, opts: &VerifyOptions) -> CheckOutcome {
    assert!((1..=10).contains(&id), "check id {id} out of range");
    let start = Instant::now();
    let (passed, detail) = match BODIES[id - 1](opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome {
        id,
        name: CHECK_NAMES[id - 1],
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    (1..=10).map(|id| run_check(id, opts)).collect()
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

/// Random MDP with `states` and `actions` drawn from the given ranges, a
/// random policy and `c` uniform on [0.5, 0.9]. The MDP discount equals `c`.
fn instance(
    root: u64,
    label: &str,
    k: usize,
    states: (usize, usize),
    actions: (usize, usize),
) -> bisim_core::Result<(FiniteMdp, TabularPolicy, f64)> {
    let mut rng = stream(root, label, k as u64);
    let n = rng.random_range(states.0..=states.1);
    let na = rng.random_range(actions.0..=actions.1);
    let c = rng.random_range(0.5..=0.9);
    let mdp = random_mdp(n, na, (0.0, 1.0), c, derive_seed(root, &format!("{label}/mdp"), k as u64))?;
    let policy = random_policy(&mdp, derive_seed(root, &format!("{label}/policy"), k as u64))?;
    Ok((mdp, policy, c))
}

fn chain(mdp: &FiniteMdp) -> [OperatorKind; 3] {
    let g = SimilarityG::reward_diff(mdp);
    [OperatorKind::Pi, OperatorKind::Eps(g.clone()), OperatorKind::EpsBar(g)]
}

fn random_weights<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn transport_oracle(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(1000);
    let start = Instant::now();
    let gaps = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(opts.seed, "verify/transport", k as u64);
            let m = rng.random_range(1..=4);
            let l = rng.random_range(1..=4);
            // atoms of both sides live in one plane, so the cost is a metric
            let pts: Vec<[f64; 2]> = (0..m + l)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let cost = Matrix::from_fn(m, l, |i, j| {
                let (a, b) = (pts[i], pts[m + j]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            });
            let p = DiscreteDistribution::new(random_weights(&mut rng, m))?;
            let q = DiscreteDistribution::new(random_weights(&mut rng, l))?;
            let mut fast = w1_discrete(&p, &q, &cost)?;
            if opts.corrupt_transport {
                fast += CORRUPTION;
            }
            Ok((fast - w1_discrete_bruteforce(&p, &q, &cost)?).abs())
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let max_gap = gaps.iter().fold(0.0_f64, |a, &b| a.max(b));
    let fast_enough = within(Duration::from_secs(30), start.elapsed());
    Ok((
        max_gap <= 1e-9 && fast_enough,
        format!("{n} instances, max |fast - oracle| = {max_gap:.3e} (tol 1e-9), runtime under 30 s: {fast_enough}"),
    ))
}

fn distant_atoms(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let d = 3.0;
    let n = opts.count(100_000);
    let p = [0.5, 0.5];
    let cost = Matrix::from_rows(&[vec![0.0, d], vec![d, 0.0]])?;
    let dist = DiscreteDistribution::new(p.to_vec())?;
    let w1 = w1_discrete(&dist, &dist, &cost)?;

    let mut rng = stream(opts.seed, "verify/atoms/independent", 0);
    let mut indep = SampleStats::default();
    for _ in 0..n {
        let pair = independent_discrete(&p, &p, &mut rng)?;
        indep.push(cost.get(pair.x, pair.y));
    }
    let mut rng = stream(opts.seed, "verify/atoms/entangled", 0);
    let mut ent_max = 0.0_f64;
    for _ in 0..n {
        let pair = entangled_discrete(&p, &p, &[0, 1], rng.random::<f64>())?;
        ent_max = ent_max.max(cost.get(pair.x, pair.y));
    }
    let se = indep.std_error();
    let gap = (indep.mean - d / 2.0).abs();
    Ok((
        w1 == 0.0 && gap <= 3.0 * se && ent_max == 0.0,
        format!(
            "D = {d}, W1 = {w1:.3e}, independent mean = {:.6} (D/2 = {:.6}, 3 SE = {:.6}), entangled max = {ent_max:.3e}, n = {n}",
            indep.mean,
            d / 2.0,
            3.0 * se
        ),
    ))
}

fn self_similarity(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n_mdps = opts.count(20);
    let draws = opts.count(10_000);
    let nonzero = (0..n_mdps)
        .into_par_iter()
        .map(|k| {
            let (mdp, policy, c) = instance(opts.seed, "verify/self-similarity", k, (2, 6), (1, 3))?;
            let g = SimilarityG::reward_diff(&mdp);
            let d = solve(&OperatorKind::EpsBar(g.clone()), &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric;
            let kind = EstimatorKind::Eps {
                g,
                mode: SamplingMode::Entangled,
            };
            let est = PreparedEstimator::new(&kind, &mdp, &policy, c, &d)?;
            let mut rng = stream(opts.seed, "verify/self-similarity/draws", k as u64);
            let mut count = 0usize;
            for z in 0..mdp.n_states() {
                count += est.sample(z, z, draws, &mut rng)?.iter().filter(|&&x| x != 0.0).count();
            }
            Ok(count)
        })
        .collect::<bisim_core::Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();

    let dbc_n = opts.count(100_000);
    let mdp = two_action_mdp();
    let policy = TabularPolicy::uniform(1, 2)?;
    let dbc = bias_audit(&EstimatorKind::Dbc, &mdp, &policy, 0.0, &StateMetric::zeros(1), &[(0, 0)], dbc_n, opts.seed)?
        .remove(0);
    let dbc_ok = (dbc.mean - 0.5).abs() <= 0.01;

    // two states with identical stochastic rows: the entangled fixed point
    // separates them by their reward gap only
    let mdp = FiniteMdp::from_tables(
        &[vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]],
        &[vec![1.0], vec![0.0]],
        0.9,
    )?;
    let policy = TabularPolicy::uniform(2, 1)?;
    let d = solve(&OperatorKind::EpsBar(SimilarityG::reward_diff(&mdp)), &mdp, &policy, 0.9, SOLVE_TOL, MAX_ITER)?.metric;
    let psm_kind = EstimatorKind::Psm(ActionEmbedding::one_hot(1));
    let psm = bias_audit(&psm_kind, &mdp, &policy, 0.9, &d, &[(0, 0)], draws, opts.seed)?.remove(0);
    let psm_z = psm.mean / psm.stderr;
    let psm_ok = psm_z > 2.326;

    Ok((
        nonzero == 0 && dbc_ok && psm_ok,
        format!(
            "entangled nonzero diagonal draws = {nonzero} over {n_mdps} MDPs x {draws} draws; dbc diagonal mean = {:.5} (0.5 +- 0.01); psm diagonal mean = {:.5}, z = {psm_z:.2} (> 2.326)",
            dbc.mean, psm.mean
        ),
    ))
}

fn fixed_points(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let mdp = self_loop_mdp();
    let policy = TabularPolicy::uniform(2, 1)?;
    let mut worst = 0.0_f64;
    for kind in &chain(&mdp) {
        let fp = solve(kind, &mdp, &policy, 0.9, 1e-10, MAX_ITER)?;
        worst = worst.max((fp.metric.get(0, 1) - 10.0).abs());
    }
    let closed_ok = worst <= 1e-8;

    let n = opts.count(100);
    let violations = (0..n)
        .into_par_iter()
        .map(|k| {
            let (mdp, policy, c) = instance(opts.seed, "verify/contraction", k, (2, 6), (1, 3))?;
            let mut worst = f64::NEG_INFINITY;
            for kind in &chain(&mdp) {
                let fp = solve(kind, &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?;
                for w in fp.residuals.windows(2) {
                    worst = worst.max(w[1] - c * w[0]);
                }
            }
            Ok(worst)
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let max_excess = violations.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    Ok((
        closed_ok && max_excess <= 1e-12,
        format!(
            "self-loop max |d(0,1) - 10| = {worst:.3e} (tol 1e-8); max residual[k+1] - c residual[k] = {max_excess:.3e} over {n} MDPs (tol 1e-12)"
        ),
    ))
}

fn ordering(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(100);
    let slacks = (0..n)
        .into_par_iter()
        .map(|k| {
            let (mdp, policy, c) = instance(opts.seed, "verify/ordering", k, (2, 6), (1, 3))?;
            let sols = chain(&mdp)
                .iter()
                .map(|kind| Ok(solve(kind, &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric))
                .collect::<bisim_core::Result<Vec<StateMetric>>>()?;
            Ok((sols[0].min_gap_to(&sols[1]), sols[1].min_gap_to(&sols[2])))
        })
        .collect::<bisim_core::Result<Vec<(f64, f64)>>>()?;
    let lo = slacks.iter().fold(f64::INFINITY, |a, s| a.min(s.0));
    let hi = slacks.iter().fold(f64::INFINITY, |a, s| a.min(s.1));
    Ok((
        lo >= -1e-8 && hi >= -1e-8,
        format!("{n} MDPs, min slack d_eps - d_pi = {lo:.3e}, min slack d_eps_bar - d_eps = {hi:.3e} (tol -1e-8)"),
    ))
}

fn bisimilar_zero(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(50);
    let worst = (0..n)
        .into_par_iter()
        .map(|k| {
            let (base, _, c) = instance(opts.seed, "verify/duplicates", k, (2, 5), (1, 3))?;
            let mut rng = stream(opts.seed, "verify/duplicates/copies", k as u64);
            let mut copies = BTreeMap::new();
            for z in 0..base.n_states() {
                if rng.random::<f64>() < 0.5 {
                    copies.insert(z, rng.random_range(2..=3));
                }
            }
            if copies.is_empty() {
                copies.insert(rng.random_range(0..base.n_states()), 2);
            }
            let dup = duplicate_states(&base, &copies)?;
            let base_policy = random_policy(&base, derive_seed(opts.seed, "verify/duplicates/policy", k as u64))?;
            let policy = base_policy.lift(&dup.origin)?;
            let mut worst = 0.0_f64;
            for kind in &chain(&dup.mdp) {
                let d = solve(kind, &dup.mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric;
                for &(i, j) in &dup.pairs.pairs {
                    worst = worst.max(d.get(i, j));
                }
            }
            Ok(worst)
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let max_d = worst.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok((
        max_d <= 1e-8,
        format!("{n} duplicated MDPs, max distance between bisimilar states = {max_d:.3e} (tol 1e-8)"),
    ))
}

fn tightness(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(50);
    let n_mc = opts.count(100_000);
    let grid = NormalQuantileGrid::new(1_000_000);
    let start = Instant::now();
    let rows = (0..n)
        .into_par_iter()
        .map(|k| {
            let key = k as u64;
            let mdp = GaussianLinearMdp::random(3, 2, 0.9, derive_seed(opts.seed, "verify/tightness/mdp", key))?;
            let policy = TanhGaussianPolicy::random(&mdp, derive_seed(opts.seed, "verify/tightness/policy", key));
            let mut rng = stream(opts.seed, "verify/tightness/instance", key);
            let d = random_separable(3, 2, &mut rng)?;
            let states = StateBox::cube(3, 1.5)?;
            let pair = vec![(states.sample(&mut rng), states.sample(&mut rng))];
            let row = verify_tightness(&mdp, &policy, &d, &pair, n_mc, &grid, derive_seed(opts.seed, "verify/tightness/mc", key))?
                .remove(0);
            Ok(row)
        })
        .collect::<bisim_core::Result<Vec<_>>>()?;
    let failures = rows.iter().filter(|r| !r.passed).count();
    let worst = rows
        .iter()
        .map(|r| r.gap() / (3.0 * r.mc_stderr + bisim_core::learner::QUADRATURE_TOL))
        .fold(0.0_f64, f64::max);
    let fast_enough = within(Duration::from_secs(300), start.elapsed());
    Ok((
        failures == 0 && fast_enough,
        format!(
            "{n} pairs x {n_mc} draws, {failures} outside 3 SE + 1e-5, max gap / allowance = {worst:.3}, runtime under 5 min: {fast_enough}"
        ),
    ))
}

fn unbiasedness(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(100);
    let samples = opts.count(10_000);
    let z_scores = (0..n)
        .into_par_iter()
        .map(|k| {
            let (mdp, policy, c) = instance(opts.seed, "verify/unbiased", k, (2, 6), (1, 3))?;
            let g = SimilarityG::reward_diff(&mdp);
            let d = solve(&OperatorKind::EpsBar(g.clone()), &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric;
            let mut rng = stream(opts.seed, "verify/unbiased/pair", k as u64);
            let z = rng.random_range(0..mdp.n_states());
            let w = (z + rng.random_range(1..mdp.n_states())) % mdp.n_states();
            let kind = EstimatorKind::Eps {
                g,
                mode: SamplingMode::Entangled,
            };
            let seed = derive_seed(opts.seed, "verify/unbiased/draws", k as u64);
            let report = bias_audit(&kind, &mdp, &policy, c, &d, &[(z, w)], samples, seed)?.remove(0);
            Ok(report.z_score())
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let covered = z_scores.iter().filter(|&&z| z <= 3.0).count();
    let rate_ok = covered * 100 >= 95 * n;

    let (mdp, policy, c) = instance(opts.seed, "verify/rate", 0, (4, 6), (2, 3))?;
    let g = SimilarityG::reward_diff(&mdp);
    let d = solve(&OperatorKind::EpsBar(g.clone()), &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric;
    let kind = EstimatorKind::Eps {
        g,
        mode: SamplingMode::Entangled,
    };
    let est = PreparedEstimator::new(&kind, &mdp, &policy, c, &d)?;
    let sizes = [100usize, 1_000, 10_000, 100_000];
    let mut pts = Vec::with_capacity(sizes.len());
    for (k, &m) in sizes.iter().enumerate() {
        let mut rng = stream(opts.seed, "verify/rate/draws", k as u64);
        let se = SampleStats::collect(est.sample(0, 1, m, &mut rng)?).std_error();
        pts.push(((m as f64).log10(), se.log10()));
    }
    let slope = least_squares_slope(&pts);
    let slope_ok = (slope + 0.5).abs() <= 0.1;
    Ok((
        rate_ok && slope_ok,
        format!(
            "{covered}/{n} cases with |bias| <= 3 SE at {samples} samples (need 95%); log-log SE slope = {slope:.4} (-0.5 +- 0.1)"
        ),
    ))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn learner(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let sizes = [5usize, 8];
    let errors = sizes
        .par_iter()
        .enumerate()
        .map(|(k, &n)| {
            let key = k as u64;
            let mdp = random_mdp(n, 2, (0.0, 1.0), 0.9, derive_seed(opts.seed, "verify/learn/mdp", key))?;
            let policy = random_policy(&mdp, derive_seed(opts.seed, "verify/learn/policy", key))?;
            let cfg = TabularConfig {
                c: 0.9,
                batch_seed: derive_seed(opts.seed, "verify/learn/batch", key),
                noise_seed: derive_seed(opts.seed, "verify/learn/noise", key),
                ..TabularConfig::default()
            };
            Ok(train_tabular(&mdp, &policy, &SimilarityG::reward_diff(&mdp), &cfg)?.sup_error())
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let sup_ok = errors.iter().all(|&e| e <= 5e-3);

    let mdp = self_loop_mdp();
    let cfg = TabularConfig {
        c: 0.9,
        steps: 5000,
        batch_size: 2,
        target_samples: 1,
        batch_seed: derive_seed(opts.seed, "verify/learn/batch", 2),
        noise_seed: derive_seed(opts.seed, "verify/learn/noise", 2),
        ..TabularConfig::default()
    };
    let policy = TabularPolicy::uniform(2, 1)?;
    let closed = train_tabular(&mdp, &policy, &SimilarityG::reward_diff(&mdp), &cfg)?
        .params
        .distance(0, 1);
    let closed_ok = (closed - 10.0).abs() <= 0.05;

    let grad_err = gradient_check(opts.seed)?;
    let grad_ok = grad_err <= 1e-4;
    Ok((
        sup_ok && closed_ok && grad_ok,
        format!(
            "sup error 5-state = {:.3e}, 8-state = {:.3e} (tol 5e-3); self-loop d(0,1) = {closed:.5} (10 +- 0.05); max gradient relative error = {grad_err:.3e} (tol 1e-4)",
            errors[0], errors[1]
        ),
    ))
}

/// Largest relative gap between the analytic gradient and central
/// differences of the loss with frozen targets.
fn gradient_check(root: u64) -> bisim_core::Result<f64> {
    let mdp = random_mdp(6, 3, (0.0, 1.0), 0.9, derive_seed(root, "verify/gradient/mdp", 0))?;
    let policy = random_policy(&mdp, derive_seed(root, "verify/gradient/policy", 0))?;
    let g = SimilarityG::reward_diff(&mdp);
    let sampler = TabularSampler::new(&mdp, &policy)?;
    let mut rng = stream(root, "verify/gradient/params", 0);
    let raw: Vec<f64> = (0..15).map(|_| rng.random_range(-1.5..1.5)).collect();
    let params = TabularDistanceParams::from_raw(6, raw)?;
    let batch: Vec<(usize, usize)> = (0..12).map(|_| (rng.random_range(0..6), rng.random_range(0..6))).collect();
    let seeds: Vec<u64> = (0..batch.len() as u64).map(|k| derive_seed(root, "verify/gradient/noise", k)).collect();
    let targets = sample_targets(&sampler, &g, 0.9, &params.to_metric(), &batch, &seeds, 16)?;
    let analytic = loss_with_targets(&params, &batch, &targets)?.grad;
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for k in 0..params.raw().len() {
        let mut up = params.clone();
        up.raw_mut()[k] += h;
        let mut dn = params.clone();
        dn.raw_mut()[k] -= h;
        let fd = (loss_with_targets(&up, &batch, &targets)?.loss - loss_with_targets(&dn, &batch, &targets)?.loss)
            / (2.0 * h);
        let denom = fd.abs().max(analytic[k].abs()).max(1e-8);
        worst = worst.max((fd - analytic[k]).abs() / denom);
    }
    Ok(worst)
}

fn axioms(opts: &VerifyOptions) -> bisim_core::Result<(bool, String)> {
    let n = opts.count(100);
    let worst = (0..n)
        .into_par_iter()
        .map(|k| {
            let (mdp, policy, c) = instance(opts.seed, "verify/axioms", k, (2, 8), (1, 3))?;
            let mut worst = 0.0_f64;
            for kind in &chain(&mdp) {
                let a = solve(kind, &mdp, &policy, c, SOLVE_TOL, MAX_ITER)?.metric.axioms();
                worst = worst
                    .max(-a.min_value)
                    .max(a.max_asymmetry)
                    .max(a.max_diagonal)
                    .max(a.max_triangle_violation);
            }
            Ok(worst)
        })
        .collect::<bisim_core::Result<Vec<f64>>>()?;
    let metric_worst = worst.iter().fold(0.0_f64, |a, &b| a.max(b));

    let domains = opts.count(20);
    let mut g_worst = 0.0_f64;
    for k in 0..domains {
        let key = k as u64;
        let mdp = random_mdp(4, 3, (0.0, 1.0), 0.9, derive_seed(opts.seed, "verify/similarity/mdp", key))?;
        let policy = random_policy(&mdp, derive_seed(opts.seed, "verify/similarity/policy", key))?;
        let mut rng = stream(opts.seed, "verify/similarity/embedding", key);
        let embedding = ActionEmbedding::new(
            (0..3)
                .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        )?;
        for g in [
            SimilarityG::reward_diff(&mdp),
            SimilarityG::policy_mean_diff(&policy, &ActionEmbedding::one_hot(3))?,
            SimilarityG::policy_mean_diff(&policy, &embedding)?,
        ] {
            let a = g.axioms();
            g_worst = g_worst
                .max(-a.min_value)
                .max(a.max_self_distance)
                .max(a.max_asymmetry)
                .max(a.max_triangle_violation);
        }
    }
    Ok((
        metric_worst <= 1e-8 && g_worst <= 1e-8,
        format!(
            "{n} MDPs up to 8 states, max axiom violation = {metric_worst:.3e}; {domains} 4x3 domains x 3 similarities, max violation = {g_worst:.3e} (tol 1e-8)"
        ),
    ))
}

/// Report text: one line per check, then a summary line.
pub fn report(outcomes: &[CheckOutcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&o.line());
        s.push('\n');
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    s.push_str(&format!("summary: {passed}/{} checks passed\n", outcomes.len()));
    s
}
