//! Entangled (comonotone) and independent couplings.
//!
//! An entangled pair pushes one shared noise draw through the inverse
//! sampling maps of both distributions. For discrete laws this is inverse-CDF
//! sampling against a fixed atom order; for Gaussians it is the
//! reparametrization `μ + ε σ` with shared standard-normal `ε`, which induces
//! the same coupling because the normal quantile map is monotone.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_len, Error, Result};
use crate::transport::DiagonalGaussian;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseLaw {
    Uniform,
    StandardNormal,
}

/// A noise draw tagged with the law it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector {
    law: NoiseLaw,
    values: Vec<f64>,
}

impl NoiseVector {
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        if let Some(u) = values.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return Err(Error::invalid(format!("uniform noise {u} outside [0, 1]")));
        }
        Ok(NoiseVector {
            law: NoiseLaw::Uniform,
            values,
        })
    }

    pub fn standard_normal(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("normal noise must be finite"));
        }
        Ok(NoiseVector {
            law: NoiseLaw::StandardNormal,
            values,
        })
    }

    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        NoiseVector {
            law: NoiseLaw::Uniform,
            values: (0..len).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        NoiseVector {
            law: NoiseLaw::StandardNormal,
            values: (0..len).map(|_| StandardNormal.sample(rng)).collect(),
        }
    }

    pub fn law(&self) -> NoiseLaw {
        self.law
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn expect(&self, law: NoiseLaw) -> Result<()> {
        if self.law == law {
            Ok(())
        } else {
            Err(Error::invalid(format!("expected {law:?} noise, got {:?}", self.law)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairNoise {
    Shared(NoiseVector),
    Independent(NoiseVector, NoiseVector),
}

/// Joint draw `(x, y)` with `x ~ P`, `y ~ Q`, and the noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair<T> {
    pub x: T,
    pub y: T,
    pub noise: PairNoise,
}

/// Inverse-CDF sampler for a discrete law under a fixed atom order.
///
/// Only positive-mass atoms are kept. `sample(u)` returns the first atom (in
/// order) whose cumulative mass reaches `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseSampler {
    atoms: Vec<usize>,
    cdf: Vec<f64>,
}

impl InverseSampler {
    /// Ascending atom index order.
    pub fn canonical(weights: &[f64]) -> Self {
        Self::build(weights, 0..weights.len())
    }

    pub fn with_order(weights: &[f64], order: &[usize]) -> Result<Self> {
        ensure_len("atom order", weights.len(), order.len())?;
        let mut seen = vec![false; order.len()];
        for &a in order {
            if a >= order.len() || std::mem::replace(&mut seen[a], true) {
                return Err(Error::invalid("atom order is not a permutation"));
            }
        }
        Ok(Self::build(weights, order.iter().copied()))
    }

    fn build(weights: &[f64], order: impl Iterator<Item = usize>) -> Self {
        let mut atoms = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for a in order {
            if weights[a] > 0.0 {
                acc += weights[a];
                atoms.push(a);
                cdf.push(acc);
            }
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        InverseSampler { atoms, cdf }
    }

    #[inline]
    pub fn sample(&self, u: f64) -> usize {
        let k = self.cdf.partition_point(|&c| c < u);
        self.atoms[k.min(self.atoms.len() - 1)]
    }

    pub fn support(&self) -> &[usize] {
        &self.atoms
    }
}

/// One constant piece of the entangled coupling: the pair `(x, y)` is
/// realized for a set of `u` of measure `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x: usize,
    pub y: usize,
    pub weight: f64,
}

/// Exact law of the entangled coupling of two discrete distributions: the
/// merged CDF breakpoints cut `[0, 1]` into at most `|p| + |q| − 1` pieces.
pub fn entangled_segments(p: &InverseSampler, q: &InverseSampler) -> Vec<Segment> {
    let mut out = Vec::with_capacity(p.atoms.len() + q.atoms.len());
    let (mut i, mut j) = (0, 0);
    let mut lo = 0.0;
    while i < p.atoms.len() && j < q.atoms.len() {
        let hi = p.cdf[i].min(q.cdf[j]);
        if hi > lo {
            out.push(Segment {
                x: p.atoms[i],
                y: q.atoms[j],
                weight: hi - lo,
            });
            lo = hi;
        }
        if p.cdf[i] <= hi {
            i += 1;
        }
        if q.cdf[j] <= hi {
            j += 1;
        }
    }
    out
}

/// Canonical-order segments for two probability vectors.
pub fn entangled_segments_of(p: &[f64], q: &[f64]) -> Vec<Segment> {
    entangled_segments(&InverseSampler::canonical(p), &InverseSampler::canonical(q))
}

pub fn entangled_discrete(
    p: &[f64],
    q: &[f64],
    atom_order: &[usize],
    u: f64,
) -> Result<CoupledPair<usize>> {
    ensure_len("entangled_discrete", p.len(), q.len())?;
    let noise = NoiseVector::uniform(vec![u])?;
    let sp = InverseSampler::with_order(p, atom_order)?;
    let sq = InverseSampler::with_order(q, atom_order)?;
    if sp.atoms.is_empty() || sq.atoms.is_empty() {
        return Err(Error::invalid("distribution has no mass"));
    }
    Ok(CoupledPair {
        x: sp.sample(u),
        y: sq.sample(u),
        noise: PairNoise::Shared(noise),
    })
}

pub fn entangled_gaussian(
    p: &DiagonalGaussian,
    q: &DiagonalGaussian,
    noise: &NoiseVector,
) -> Result<CoupledPair<Vec<f64>>> {
    ensure_len("entangled_gaussian", p.dim(), q.dim())?;
    ensure_len("entangled_gaussian noise", p.dim(), noise.len())?;
    noise.expect(NoiseLaw::StandardNormal)?;
    Ok(CoupledPair {
        x: p.transform(noise.values()),
        y: q.transform(noise.values()),
        noise: PairNoise::Shared(noise.clone()),
    })
}

/// Largest double strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
pub(crate) fn squash(pre: f64) -> f64 {
    pre.tanh().clamp(-BELOW_ONE, BELOW_ONE)
}

/// `a_i = tanh(μ_i + ε_i σ_i)` for both sides with the same `ε`.
pub fn entangled_tanh_policy(
    mean_a: &[f64],
    std_a: &[f64],
    mean_b: &[f64],
    std_b: &[f64],
    noise: &NoiseVector,
) -> Result<CoupledPair<Vec<f64>>> {
    let n = mean_a.len();
    ensure_len("tanh policy std_a", n, std_a.len())?;
    ensure_len("tanh policy mean_b", n, mean_b.len())?;
    ensure_len("tanh policy std_b", n, std_b.len())?;
    ensure_len("tanh policy noise", n, noise.len())?;
    noise.expect(NoiseLaw::StandardNormal)?;
    if std_a.iter().chain(std_b).any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("policy stddev must be positive"));
    }
    let e = noise.values();
    Ok(CoupledPair {
        x: (0..n).map(|i| squash(mean_a[i] + e[i] * std_a[i])).collect(),
        y: (0..n).map(|i| squash(mean_b[i] + e[i] * std_b[i])).collect(),
        noise: PairNoise::Shared(noise.clone()),
    })
}

pub fn independent_discrete<R: Rng + ?Sized>(p: &[f64], q: &[f64], rng: &mut R) -> Result<CoupledPair<usize>> {
    crate::mdp::check_distribution(p, "independent_discrete p")?;
    crate::mdp::check_distribution(q, "independent_discrete q")?;
    let (nu, nv) = (NoiseVector::sample_uniform(rng, 1), NoiseVector::sample_uniform(rng, 1));
    Ok(CoupledPair {
        x: InverseSampler::canonical(p).sample(nu.values[0]),
        y: InverseSampler::canonical(q).sample(nv.values[0]),
        noise: PairNoise::Independent(nu, nv),
    })
}

pub fn independent_gaussian<R: Rng + ?Sized>(
    p: &DiagonalGaussian,
    q: &DiagonalGaussian,
    rng: &mut R,
) -> CoupledPair<Vec<f64>> {
    let nu = NoiseVector::sample_normal(rng, p.dim());
    let nv = NoiseVector::sample_normal(rng, q.dim());
    CoupledPair {
        x: p.transform(nu.values()),
        y: q.transform(nv.values()),
        noise: PairNoise::Independent(nu, nv),
    }
}
