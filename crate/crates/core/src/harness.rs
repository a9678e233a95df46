//! Exact and Monte-Carlo measurement: statistical distance, entropies,
//! collision probability, locality audits and small sources.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::bitcore::BitVector;
use crate::error::{Error, Result};
use crate::primitives::ExtractorDescriptor;

/// Largest explicit table.
pub const TABLE_CAP: usize = 1 << 24;
/// Largest number of (seed, support point) evaluations in exact error runs.
pub const EXACT_WORK_CAP: u64 = 1 << 30;
/// Identifies the generator behind every Monte-Carlo number.
pub const PRNG_NAME: &str = "chacha20 (rand_chacha 0.3)";

pub fn prng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Explicit distribution over `bits`-bit outcomes, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    pub bits: usize,
    table: BTreeMap<u128, f64>,
}

impl FiniteDistribution {
    pub fn new(bits: usize, entries: impl IntoIterator<Item = (u128, f64)>) -> Result<Self> {
        if bits > 128 {
            return Err(Error::param("outcomes are limited to 128 bits"));
        }
        let mut table = BTreeMap::new();
        for (v, p) in entries {
            if bits < 128 && v >> bits != 0 {
                return Err(Error::param(format!("outcome {v:#x} exceeds {bits} bits")));
            }
            if p < 0.0 {
                return Err(Error::param("negative probability"));
            }
            if p > 0.0 {
                *table.entry(v).or_insert(0.0) += p;
            }
            if table.len() > TABLE_CAP {
                return Err(Error::Budget(format!("table exceeds {TABLE_CAP} outcomes")));
            }
        }
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("probabilities sum to {total}")));
        }
        Ok(FiniteDistribution { bits, table })
    }

    pub fn point(bits: usize, v: u128) -> Self {
        FiniteDistribution { bits, table: BTreeMap::from([(v, 1.0)]) }
    }

    pub fn flat(bits: usize, support: &[u128]) -> Result<Self> {
        let mut s = support.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(Error::param("empty support"));
        }
        let p = 1.0 / s.len() as f64;
        FiniteDistribution::new(bits, s.into_iter().map(|v| (v, p)))
    }

    pub fn uniform(bits: usize) -> Result<Self> {
        if bits >= 64 || 1usize << bits > TABLE_CAP {
            return Err(Error::Budget(format!("uniform table on {bits} bits exceeds cap")));
        }
        FiniteDistribution::flat(bits, &(0..1u128 << bits).collect::<Vec<_>>())
    }

    pub fn prob(&self, v: u128) -> f64 {
        self.table.get(&v).copied().unwrap_or(0.0)
    }

    pub fn support_size(&self) -> usize {
        self.table.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, f64)> + '_ {
        self.table.iter().map(|(&v, &p)| (v, p))
    }

    /// Push-forward through `f` (data processing).
    pub fn map(&self, out_bits: usize, f: impl Fn(u128) -> u128) -> Result<Self> {
        let mut t: BTreeMap<u128, f64> = BTreeMap::new();
        for (v, p) in self.iter() {
            *t.entry(f(v)).or_insert(0.0) += p;
        }
        FiniteDistribution::new(out_bits, t)
    }
}

/// Renormalizes nonnegative weights into a distribution.
pub fn normalized(bits: usize, weights: impl IntoIterator<Item = (u128, f64)>) -> Result<FiniteDistribution> {
    let w: Vec<(u128, f64)> = weights.into_iter().collect();
    let total: f64 = w.iter().map(|e| e.1).sum();
    if total <= 0.0 {
        return Err(Error::param("weights sum to zero"));
    }
    FiniteDistribution::new(bits, w.into_iter().map(|(v, p)| (v, p / total)))
}

/// `(1/2) sum |P(a) - Q(a)|`.
pub fn statistical_distance(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    if p.bits != q.bits {
        return Err(Error::LengthMismatch { expected: p.bits, got: q.bits });
    }
    let mut keys: Vec<u128> = p.table.keys().chain(q.table.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(0.5 * keys.iter().map(|&k| (p.prob(k) - q.prob(k)).abs()).sum::<f64>())
}

/// Distance from the uniform distribution on `p.bits` bits, without
/// materializing it.
pub fn sd_from_uniform(p: &FiniteDistribution) -> f64 {
    let u = 0.5f64.powi(p.bits as i32);
    let on: f64 = p.iter().map(|(_, q)| (q - u).abs()).sum();
    let off = (2f64.powi(p.bits as i32) - p.support_size() as f64) * u;
    0.5 * (on + off.max(0.0))
}

pub fn min_entropy(p: &FiniteDistribution) -> Result<f64> {
    let max = p.iter().map(|e| e.1).fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::param("empty support"));
    }
    Ok(-max.log2())
}

pub fn collision_probability(p: &FiniteDistribution) -> f64 {
    p.iter().map(|(_, q)| q * q).sum()
}

/// Renyi entropy of order two.
pub fn collision_entropy(p: &FiniteDistribution) -> f64 {
    -collision_probability(p).log2()
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
    pub trials: u64,
}

impl Estimate {
    /// Proportion estimate from `hits` successes.
    pub fn proportion(hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        Estimate { value: p, sigma: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }

    /// Mean and standard error of bounded samples.
    pub fn mean_of(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate { value: mean, sigma: (var / n).sqrt(), trials: samples.len() as u64 }
    }

    /// `value <= bound + k sigma`
    pub fn within(&self, bound: f64, k: f64) -> bool {
        self.value <= bound + k * self.sigma
    }
}

/// Collision probability from independent sample pairs.
pub fn estimate_collision<T: PartialEq>(pairs: impl IntoIterator<Item = (T, T)>) -> Estimate {
    let (mut hits, mut n) = (0u64, 0u64);
    for (a, b) in pairs {
        hits += (a == b) as u64;
        n += 1;
    }
    Estimate::proportion(hits, n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalityReport {
    /// Number of source positions each output bit depends on.
    pub per_bit: Vec<usize>,
    pub max: usize,
    pub seed: String,
    /// Dependency sets, when recorded.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sets: Vec<Vec<usize>>,
}

/// Toggling audit: position `i` is a dependency of output bit `j` if
/// flipping `x_i` flips bit `j` for some trial `x`. Linear extractors need
/// only `x = 0`.
pub fn locality_audit<R: Rng + ?Sized>(
    ext: &ExtractorDescriptor,
    seed: &BitVector,
    trials: usize,
    rng: &mut R,
) -> Result<LocalityReport> {
    crate::error::ensure_len(ext.d, seed.len())?;
    let xs: Vec<BitVector> = if ext.linear {
        vec![BitVector::zeros(ext.n)]
    } else {
        (0..trials.max(1)).map(|_| BitVector::random(ext.n, rng)).collect()
    };
    let mut sets = vec![Vec::new(); ext.m];
    let base: Vec<BitVector> = xs.iter().map(|x| ext.eval_unchecked(x, seed)).collect();
    for i in 0..ext.n {
        let mut flipped = BitVector::zeros(ext.m);
        for (x, y0) in xs.iter().zip(&base) {
            let mut x1 = x.clone();
            x1.flip(i);
            let diff = ext.eval_unchecked(&x1, seed).xor(y0)?;
            for j in diff.ones_iter() {
                flipped.set(j, true);
            }
        }
        for j in flipped.ones_iter() {
            sets[j].push(i);
        }
    }
    let per_bit: Vec<usize> = sets.iter().map(Vec::len).collect();
    Ok(LocalityReport { max: per_bit.iter().copied().max().unwrap_or(0), per_bit, seed: seed.to_hex(), sets })
}

/// Source specifications with exact tables.
#[derive(Clone, Debug, PartialEq)]
pub enum SourceSpec {
    Flat { n: usize, support: Vec<u128> },
    BitFixing { n: usize, free: Vec<usize>, fixed: BitVector },
    /// Uniform over `offset + span(basis)`; basis vectors independent.
    Affine { n: usize, offset: BitVector, basis: Vec<BitVector> },
}

impl SourceSpec {
    pub fn n(&self) -> usize {
        match self {
            SourceSpec::Flat { n, .. } | SourceSpec::BitFixing { n, .. } | SourceSpec::Affine { n, .. } => *n,
        }
    }

    /// Exact min-entropy claimed by the construction.
    pub fn entropy(&self) -> f64 {
        match self {
            SourceSpec::Flat { support, .. } => (support.len() as f64).log2(),
            SourceSpec::BitFixing { free, .. } => free.len() as f64,
            SourceSpec::Affine { basis, .. } => basis.len() as f64,
        }
    }

    pub fn support(&self) -> Result<Vec<BitVector>> {
        let dim = self.entropy();
        if dim > 24.0 {
            return Err(Error::Budget(format!("support of 2^{dim} points exceeds the table cap")));
        }
        Ok(match self {
            SourceSpec::Flat { n, support } => support.iter().map(|&v| BitVector::from_u128(v, *n)).collect(),
            SourceSpec::BitFixing { free, fixed, .. } => (0..1u64 << free.len())
                .map(|a| {
                    let mut x = fixed.clone();
                    for (j, &p) in free.iter().enumerate() {
                        x.set(p, a >> j & 1 == 1);
                    }
                    x
                })
                .collect(),
            SourceSpec::Affine { offset, basis, .. } => (0..1u64 << basis.len())
                .map(|a| {
                    let mut x = offset.clone();
                    for (j, b) in basis.iter().enumerate() {
                        if a >> j & 1 == 1 {
                            x.xor_assign(b);
                        }
                    }
                    x
                })
                .collect(),
        })
    }

    pub fn distribution(&self) -> Result<FiniteDistribution> {
        if self.n() > 128 {
            return Err(Error::param("tables hold sources of at most 128 bits"));
        }
        let pts: Vec<u128> = self.support()?.iter().map(BitVector::to_u128).collect();
        FiniteDistribution::flat(self.n(), &pts)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        match self {
            SourceSpec::Flat { n, support } => BitVector::from_u128(support[rng.gen_range(0..support.len())], *n),
            SourceSpec::BitFixing { free, fixed, .. } => {
                let mut x = fixed.clone();
                for &p in free {
                    x.set(p, rng.gen());
                }
                x
            }
            SourceSpec::Affine { offset, basis, .. } => {
                let mut x = offset.clone();
                for b in basis {
                    if rng.gen() {
                        x.xor_assign(b);
                    }
                }
                x
            }
        }
    }
}

/// Uniform over a random `2^k`-subset of `{0,1}^n`.
pub fn random_flat<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SourceSpec> {
    if k > 24 || k > n || n > 128 {
        return Err(Error::Budget("flat source support beyond the table cap".into()));
    }
    let mut set = std::collections::BTreeSet::new();
    while set.len() < 1 << k {
        let v: u128 = rng.gen();
        set.insert(if n == 128 { v } else { v & ((1u128 << n) - 1) });
    }
    Ok(SourceSpec::Flat { n, support: set.into_iter().collect() })
}

pub fn random_bit_fixing<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SourceSpec> {
    if k > n {
        return Err(Error::param("more free bits than positions"));
    }
    let mut free: Vec<usize> = rand::seq::index::sample(rng, n, k).into_vec();
    free.sort_unstable();
    let mut fixed = BitVector::random(n, rng);
    for &p in &free {
        fixed.set(p, false);
    }
    Ok(SourceSpec::BitFixing { n, free, fixed })
}

/// Random `k`-dimensional affine subspace of `GF(2)^n`.
pub fn random_affine<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SourceSpec> {
    if k > n {
        return Err(Error::param("dimension exceeds n"));
    }
    let mut basis: Vec<BitVector> = Vec::with_capacity(k);
    while basis.len() < k {
        let v = BitVector::random(n, rng);
        let mut cand = basis.clone();
        cand.push(v.clone());
        if rank(&cand) == cand.len() {
            basis.push(v);
        }
    }
    Ok(SourceSpec::Affine { n, offset: BitVector::random(n, rng), basis })
}

/// GF(2) rank of a list of equal-length vectors.
pub fn rank(vectors: &[BitVector]) -> usize {
    let mut rows: Vec<BitVector> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        for (r, &p) in rows.iter().zip(&pivots) {
            if v.get(p) {
                v.xor_assign(r);
            }
        }
        let lead = v.ones_iter().next();
        if let Some(p) = lead {
            for (r, _) in rows.iter_mut().zip(&pivots).filter(|(r, _)| r.get(p)) {
                r.xor_assign(&v);
            }
            rows.push(v);
            pivots.push(p);
        }
    }
    rows.len()
}

/// Exact `SD((U, Ext(X, U)), uniform)` by enumerating every seed.
pub fn extractor_error_exact(ext: &ExtractorDescriptor, source: &[BitVector]) -> Result<f64> {
    if source.is_empty() {
        return Err(Error::param("empty source"));
    }
    if ext.m > 24 || ext.d >= 40 || (source.len() as u64) << ext.d > EXACT_WORK_CAP {
        return Err(Error::Budget(format!(
            "exact error needs 2^{} seeds times {} points",
            ext.d,
            source.len()
        )));
    }
    if ext.m == 0 {
        return Ok(0.0);
    }
    let w = 1.0 / source.len() as f64;
    let mut total = 0.0;
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for s in 0..1u64 << ext.d {
        let seed = BitVector::from_u64(s, ext.d);
        counts.clear();
        for x in source {
            *counts.entry(ext.eval_unchecked(x, &seed).to_u64()).or_insert(0.0) += w;
        }
        let u = 0.5f64.powi(ext.m as i32);
        let on: f64 = counts.values().map(|p| (p - u).abs()).sum();
        let off = (2f64.powi(ext.m as i32) - counts.len() as f64) * u;
        total += 0.5 * (on + off);
    }
    Ok(total / 2f64.powi(ext.d as i32))
}

/// Exact error of a GF(2)-linear extractor on `offset + span(basis)`:
/// `E_u[1 - 2^{rank_u - m}]` with `rank_u` the rank of `Ext(basis, u)`.
pub fn linear_affine_error_exact(ext: &ExtractorDescriptor, basis: &[BitVector]) -> Result<f64> {
    if !ext.linear {
        return Err(Error::param("rank formula needs a linear extractor"));
    }
    if ext.d > 24 {
        return Err(Error::Budget(format!("2^{} seeds exceed the enumeration cap", ext.d)));
    }
    let mut total = 0.0;
    for s in 0..1u64 << ext.d {
        let seed = BitVector::from_u64(s, ext.d);
        let imgs: Vec<BitVector> = basis.iter().map(|b| ext.eval_unchecked(b, &seed)).collect();
        total += 1.0 - 2f64.powi(rank(&imgs) as i32 - ext.m as i32);
    }
    Ok(total / 2f64.powi(ext.d as i32))
}

/// Monte-Carlo version of [`linear_affine_error_exact`] for long seeds.
pub fn linear_affine_error_estimate<R: Rng + ?Sized>(
    ext: &ExtractorDescriptor,
    basis: &[BitVector],
    trials: usize,
    rng: &mut R,
) -> Estimate {
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let seed = BitVector::random(ext.d, rng);
            let imgs: Vec<BitVector> = basis.iter().map(|b| ext.eval_unchecked(b, &seed)).collect();
            1.0 - 2f64.powi(rank(&imgs) as i32 - ext.m as i32)
        })
        .collect();
    Estimate::mean_of(&samples)
}


#[cfg(test)]
mod properties {
    use proptest::collection::vec;
    use proptest::prelude::*;

    use super::*;

    /// Distribution on 3 bits from 8 nonnegative weights, at least one positive.
    fn dist3() -> impl Strategy<Value = FiniteDistribution> {
        vec(0u32..100, 8)
            .prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
            .prop_map(|w| normalized(3, w.into_iter().enumerate().map(|(i, x)| (i as u128, x as f64))).unwrap())
    }

    proptest! {
        #[test]
        fn statistical_distance_is_a_metric(p in dist3(), q in dist3(), r in dist3()) {
            let pq = statistical_distance(&p, &q).unwrap();
            let qp = statistical_distance(&q, &p).unwrap();
            let pr = statistical_distance(&p, &r).unwrap();
            let rq = statistical_distance(&r, &q).unwrap();
            prop_assert!((pq - qp).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
            prop_assert!(pq <= pr + rq + 1e-12);
            prop_assert!(statistical_distance(&p, &p).unwrap() < 1e-12);
        }

        #[test]
        fn collision_entropy_sits_between_min_entropy_bounds(p in dist3()) {
            let hmin = min_entropy(&p).unwrap();
            let h2 = collision_entropy(&p);
            prop_assert!(hmin <= h2 + 1e-9);
            prop_assert!(h2 <= 2.0 * hmin + 1e-9);
        }
    }
}
