//! Samplers built from seed-embedded extractors and expander walks, and
//! sampling a (block) source through them.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bitcore::BitVector;
use crate::error::{ensure_len, Error, Result};
use crate::expander::{mgg_for_bits, powered_graph, random_walk, ExpanderGraph};
use crate::harness::Estimate;
use crate::primitives::{pairwise_sampler_extractor, ExtractorDescriptor};

pub type ProduceFn = Arc<dyn Fn(&BitVector) -> Vec<usize> + Send + Sync>;

/// Largest sample count we enumerate per seed.
pub const MAX_SAMPLES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerGuarantee {
    /// `Pr[|avg - E f| > eps] <= gamma`.
    Oblivious { eps: f64, gamma: f64 },
    /// `E f >= mu1` implies `Pr[avg < mu2] <= gamma`.
    Averaging { mu1: f64, mu2: f64, gamma: f64 },
    /// Nothing claimed yet; see [`certify_averaging`].
    Uncertified,
}

#[derive(Clone)]
pub struct SamplerDescriptor {
    pub name: String,
    pub seed_len: usize,
    pub count: usize,
    pub universe: usize,
    pub guarantee: SamplerGuarantee,
    /// Every seed yields `count` distinct indices.
    pub distinct: bool,
    produce: ProduceFn,
}

impl fmt::Debug for SamplerDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplerDescriptor")
            .field("name", &self.name)
            .field("seed_len", &self.seed_len)
            .field("count", &self.count)
            .field("universe", &self.universe)
            .field("guarantee", &self.guarantee)
            .finish()
    }
}

impl SamplerDescriptor {
    pub fn new(
        name: &str,
        seed_len: usize,
        count: usize,
        universe: usize,
        guarantee: SamplerGuarantee,
        distinct: bool,
        produce: ProduceFn,
    ) -> Self {
        SamplerDescriptor { name: name.to_owned(), seed_len, count, universe, guarantee, distinct, produce }
    }

    pub fn samples(&self, seed: &BitVector) -> Result<Vec<usize>> {
        ensure_len(self.seed_len, seed.len())?;
        Ok((self.produce)(seed))
    }

    /// `t = n`, the identity: every seed samples `0..n` in order.
    pub fn identity(n: usize) -> Self {
        SamplerDescriptor::new(
            "identity",
            0,
            n,
            n,
            SamplerGuarantee::Oblivious { eps: 0.0, gamma: 0.0 },
            true,
            Arc::new(move |_| (0..n).collect()),
        )
    }
}

/// Samples `Ext(x, u)` for every `u`, read as integers. The seed of the
/// sampler is the extractor's source.
pub fn oblivious_from_extractor(ext: &ExtractorDescriptor) -> Result<SamplerDescriptor> {
    if !ext.seed_embedded {
        return Err(Error::param("sampler needs a seed-embedded extractor for distinct samples"));
    }
    if ext.m > 63 || 1usize << ext.d > MAX_SAMPLES {
        return Err(Error::Budget(format!("2^{} samples over 2^{} points", ext.d, ext.m)));
    }
    let gamma = 2f64.powf(1.0 - (ext.n as f64 - ext.k_claim));
    let (d, f) = (ext.d, ext.eval_fn());
    Ok(SamplerDescriptor::new(
        &format!("oblivious({})", ext.name),
        ext.n,
        1 << d,
        1 << ext.m,
        SamplerGuarantee::Oblivious { eps: ext.eps_claim, gamma: gamma.min(1.0) },
        true,
        Arc::new(move |x| (0..1u64 << d).map(|u| f(x, &BitVector::from_u64(u, d)).to_u64() as usize).collect()),
    ))
}

/// Oblivious sampler over `2^m` points with `t = 2^d` samples and a
/// `2l`-bit seed. Sample `u` lies in the `u`-th block of `2^{m-d}`
/// consecutive points, so the expected average is exactly `E f`, and
/// pairwise independence gives `gamma = 1 / (4 t eps^2)` by Chebyshev.
pub fn pairwise_oblivious_sampler(l: usize, d: usize, m: usize, eps: f64) -> Result<SamplerDescriptor> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::param("accuracy must be positive"));
    }
    let ext = pairwise_sampler_extractor(l, d, m)?.with_seed_embedding()?;
    let mut s = oblivious_from_extractor(&ext)?;
    s.name = format!("pairwise(l={l},d={d},m={m})");
    s.guarantee = SamplerGuarantee::Oblivious { eps, gamma: (0.25 / (s.count as f64 * eps * eps)).min(1.0) };
    Ok(s)
}

/// Relabels an oblivious sampler with accuracy `eps <= (1 - alpha) mu` as a
/// `(mu, alpha mu, gamma)`-averaging sampler: `E f >= mu` and an average
/// below `alpha mu` means a deviation above `(1 - alpha) mu >= eps`.
pub fn averaging_from_oblivious(s: &SamplerDescriptor, mu: f64, alpha: f64) -> Result<SamplerDescriptor> {
    if !(alpha > 0.0 && alpha < 1.0) || !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::param(format!("need 0 < alpha < 1 and 0 < mu <= 1 (mu={mu}, alpha={alpha})")));
    }
    let SamplerGuarantee::Oblivious { eps, gamma } = s.guarantee else {
        return Err(Error::param("averaging conversion needs an oblivious guarantee"));
    };
    let slack = (1.0 - alpha) * mu;
    if eps > slack * (1.0 + 1e-12) {
        return Err(Error::param(format!("accuracy {eps} exceeds (1 - alpha) mu = {slack}")));
    }
    let mut out = s.clone();
    out.name = format!("averaging({})", s.name);
    out.guarantee = SamplerGuarantee::Averaging { mu1: mu, mu2: alpha * mu, gamma };
    Ok(out)
}

/// The accuracy the conversion demands: `(1 - alpha) mu`.
pub fn required_accuracy(mu: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * mu
}

/// Walk of `t - 1` steps on an MGG graph with `2^r` labels (powered `power`
/// times); sample `i` is the `i`-th label with its low `ceil(log2 t)` bits
/// replaced by `i`, which makes the samples distinct. Seed: start label,
/// then coins.
pub fn expander_walk_sampler(r: usize, t: usize, power: usize) -> Result<SamplerDescriptor> {
    if t == 0 || r >= 63 || t > 1 << r || t > MAX_SAMPLES {
        return Err(Error::param(format!("need 1 <= t <= 2^r (r={r}, t={t})")));
    }
    let g: ExpanderGraph = powered_graph(&mgg_for_bits(r)?, power.max(1))?;
    let low = usize::BITS as usize - (t - 1).leading_zeros() as usize;
    let seed_len = r + (t - 1) * g.coin_bits();
    let mask = !((1u128 << low) - 1);
    Ok(SamplerDescriptor::new(
        &format!("walk(r={r},t={t},power={power})"),
        seed_len,
        t,
        1 << r,
        SamplerGuarantee::Uncertified,
        true,
        Arc::new(move |seed| {
            let start = seed.slice(0, r).expect("len").to_u128();
            let coins = seed.slice(r, seed.len() - r).expect("len");
            let w = random_walk(&g, start, t - 1, &coins).expect("seed length checked");
            w.vertices.iter().enumerate().map(|(i, &v)| ((v & mask) | i as u128) as usize).collect()
        }),
    ))
}

/// Empirical `(mu1, mu2, gamma)` check: fraction of random seeds whose sample
/// average of `f` falls below `mu2`, with its standard error.
pub fn averaging_tail<R: Rng + ?Sized>(
    s: &SamplerDescriptor,
    f: &dyn Fn(usize) -> f64,
    mu2: f64,
    trials: u64,
    rng: &mut R,
) -> Estimate {
    let mut low = 0u64;
    for _ in 0..trials {
        let seed = BitVector::random(s.seed_len, rng);
        let idx = (s.produce)(&seed);
        let avg = idx.iter().map(|&i| f(i)).sum::<f64>() / idx.len() as f64;
        low += (avg < mu2) as u64;
    }
    Estimate::proportion(low, trials)
}

/// Fraction of seeds with `|avg - E f| > eps`.
pub fn oblivious_tail<R: Rng + ?Sized>(
    s: &SamplerDescriptor,
    f: &dyn Fn(usize) -> f64,
    mean: f64,
    eps: f64,
    trials: u64,
    rng: &mut R,
) -> Estimate {
    let mut bad = 0u64;
    for _ in 0..trials {
        let seed = BitVector::random(s.seed_len, rng);
        let idx = (s.produce)(&seed);
        let avg = idx.iter().map(|&i| f(i)).sum::<f64>() / idx.len() as f64;
        bad += ((avg - mean).abs() > eps) as u64;
    }
    Estimate::proportion(bad, trials)
}

/// Indicator of a pseudorandom planted set of density about `mu`.
pub fn planted_set(mu: f64, salt: u64) -> impl Fn(usize) -> f64 {
    let cut = (mu * 2f64.powi(64)) as u64;
    move |i| {
        let mut z = (i as u64) ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        if z < cut {
            1.0
        } else {
            0.0
        }
    }
}

/// Indicator table of a planted set with exactly `ceil(mu n)` members.
pub fn planted_table(n: usize, mu: f64, salt: u64) -> Vec<f64> {
    let h = planted_set(0.5, salt);
    let mut order: Vec<usize> = (0..n).collect();
    // reuse the mixer as a sort key
    order.sort_by_key(|&i| ((h(i) as u64) << 63) ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15 ^ salt));
    let size = (mu * n as f64).ceil() as usize;
    let mut t = vec![0.0; n];
    for &i in order.iter().take(size) {
        t[i] = 1.0;
    }
    t
}

/// Certifies a sampler as `(mu1, mu2, gamma)`-averaging on `sets` planted
/// sets of density `mu1`: gamma is the worst tail plus three standard errors.
pub fn certify_averaging<R: Rng + ?Sized>(
    s: &SamplerDescriptor,
    mu1: f64,
    mu2: f64,
    sets: u64,
    trials: u64,
    rng: &mut R,
) -> Result<SamplerDescriptor> {
    if s.universe > 1 << 24 {
        return Err(Error::Budget("planted-set certification needs an enumerable universe".into()));
    }
    let mut worst: f64 = 0.0;
    for salt in 0..sets {
        let table = planted_table(s.universe, mu1, salt);
        let e = averaging_tail(s, &|i| table[i], mu2, trials, rng);
        worst = worst.max(e.value + 3.0 * e.sigma);
    }
    let mut out = s.clone();
    out.guarantee = SamplerGuarantee::Averaging { mu1, mu2, gamma: worst.min(1.0) };
    Ok(out)
}

/// `x` restricted to the sampled positions, in sampler order.
pub fn sample_source(x: &BitVector, s: &SamplerDescriptor, seed: &BitVector) -> Result<BitVector> {
    ensure_len(s.universe, x.len())?;
    let idx = s.samples(seed)?;
    Ok(BitVector::from_bools(&idx.iter().map(|&i| x.get(i)).collect::<Vec<_>>()))
}

/// One sampled sub-source per seed; blocks may overlap.
pub fn sample_block_source(x: &BitVector, s: &SamplerDescriptor, seeds: &[BitVector]) -> Result<Vec<BitVector>> {
    seeds.iter().map(|u| sample_source(x, s, u)).collect()
}

/// For a bit-fixing source with free positions `free`, the conditional
/// min-entropy of the sample given the seed is the number of sampled free
/// positions (samples distinct).
pub fn sampled_free_count(s: &SamplerDescriptor, seed: &BitVector, free: &[usize]) -> Result<usize> {
    let idx = s.samples(seed)?;
    let mut hit = vec![false; s.universe];
    for &f in free {
        hit[f] = true;
    }
    Ok(idx.iter().filter(|&&i| hit[i]).count())
}
