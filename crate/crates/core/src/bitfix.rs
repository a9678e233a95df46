//! Deterministic extraction from oblivious bit-fixing sources: parities over
//! a design extractor, a resilient function, XOR error reduction and
//! seeded output boosting.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::bitcore::BitVector;
use crate::combinatorics::{build_design_extractor, DesignExtractorGraph};
use crate::error::{ensure_len, Error, Result};
use crate::harness::SourceSpec;
use crate::primitives::{pairwise_sampler_extractor, ExtractorDescriptor};
use crate::samplers::SamplerDescriptor;

/// Largest free-bit count enumerated exhaustively.
pub const ENUM_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BitFixingSource {
    pub n: usize,
    /// Sorted free positions.
    pub free: Vec<usize>,
    /// Values on fixed positions; free positions read 0 here.
    pub fixed: BitVector,
}

impl BitFixingSource {
    pub fn new(n: usize, mut free: Vec<usize>, fixed: BitVector) -> Result<Self> {
        ensure_len(n, fixed.len())?;
        free.sort_unstable();
        free.dedup();
        if free.last().is_some_and(|&p| p >= n) {
            return Err(Error::param("free position out of range"));
        }
        let mut fixed = fixed;
        for &p in &free {
            fixed.set(p, false);
        }
        Ok(BitFixingSource { n, free, fixed })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        match crate::harness::random_bit_fixing(n, k, rng)? {
            SourceSpec::BitFixing { n, free, fixed } => BitFixingSource::new(n, free, fixed),
            _ => unreachable!(),
        }
    }

    pub fn k(&self) -> usize {
        self.free.len()
    }

    /// The string with free bits set from the low bits of `a`.
    pub fn assign(&self, a: u64) -> BitVector {
        let mut x = self.fixed.clone();
        for (j, &p) in self.free.iter().enumerate() {
            x.set(p, a >> j & 1 == 1);
        }
        x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        self.assign(rng.gen())
    }

    pub fn free_mask(&self) -> BitVector {
        let mut s = BitVector::zeros(self.n);
        for &p in &self.free {
            s.set(p, true);
        }
        s
    }

    pub fn to_spec(&self) -> SourceSpec {
        SourceSpec::BitFixing { n: self.n, free: self.free.clone(), fixed: self.fixed.clone() }
    }
}

/// Sixteen right vertices of degree 4 from the pairwise sampler with its
/// seed embedded; neighborhoods meet in at most one vertex.
pub fn desk_design_extractor() -> Result<DesignExtractorGraph> {
    let base = pairwise_sampler_extractor(4, 2, 4)?.with_seed_embedding()?;
    build_design_extractor(&base, 0.25, 4, None, 0.25)
}

/// `Y_i = XOR_{j in Gamma(i)} x_j` for every left vertex `i`.
pub fn obf_to_nobf(x: &BitVector, g: &DesignExtractorGraph) -> Result<BitVector> {
    ensure_len(g.right, x.len())?;
    let mut y = BitVector::zeros(g.left);
    for (i, nb) in g.neighbors.iter().enumerate() {
        if nb.iter().fold(false, |acc, &j| acc ^ x.get(j)) {
            y.set(i, true);
        }
    }
    Ok(y)
}

/// Recomputed description of `Y = obf_to_nobf(X)` for one source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NobfWitness {
    pub outputs: usize,
    /// Left vertices outside `Bad_S`.
    pub good: Vec<usize>,
    /// `|Bad_S|`, the number of possibly adversarial bits.
    pub q: usize,
    /// Largest `t <= t_max` such that every XOR of at most `t` good outputs
    /// is exactly unbiased over the free bits.
    pub t_wise: usize,
    pub gamma: f64,
    /// Largest `t <= t_max` for which every such subset has a free neighbor
    /// seen by exactly one member.
    pub unique_neighbor_t: usize,
}

fn subsets_up_to(items: &[usize], t: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn rec(items: &[usize], start: usize, t: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if !cur.is_empty() && !f(cur) {
            return false;
        }
        if cur.len() == t {
            return true;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            let ok = rec(items, i + 1, t, cur, f);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(items, 0, t, &mut Vec::new(), f)
}

/// Every nonempty subset of `good` of size at most `t` has an exactly
/// unbiased XOR, checked by enumerating all free-bit assignments.
pub fn exhaustive_t_wise(src: &BitFixingSource, g: &DesignExtractorGraph, good: &[usize], t: usize) -> Result<bool> {
    if src.k() > ENUM_CAP || g.left > 128 {
        return Err(Error::Budget("exhaustive check needs at most 2^24 assignments and 128 outputs".into()));
    }
    let ys: Vec<u128> = (0..1u64 << src.k()).map(|a| Ok(obf_to_nobf(&src.assign(a), g)?.to_u128())).collect::<Result<_>>()?;
    let half = ys.len() / 2;
    Ok(subsets_up_to(good, t, &mut |v| {
        let mask = v.iter().fold(0u128, |m, &i| m | 1 << i);
        ys.iter().filter(|&&y| (y & mask).count_ones() & 1 == 1).count() == half
    }))
}

/// Every nonempty subset of `good` of size at most `t` has a free position
/// adjacent to exactly one member.
pub fn unique_neighbor_holds(src: &BitFixingSource, g: &DesignExtractorGraph, good: &[usize], t: usize) -> bool {
    let free = src.free_mask();
    subsets_up_to(good, t, &mut |v| {
        let mut count = vec![0u8; g.right];
        for &i in v {
            for &j in &g.neighbors[i] {
                count[j] = count[j].saturating_add(1);
            }
        }
        (0..g.right).any(|j| count[j] == 1 && free.get(j))
    })
}

pub fn nobf_witness(src: &BitFixingSource, g: &DesignExtractorGraph, t_max: usize) -> Result<NobfWitness> {
    let bad = g.bad_set(&src.free_mask());
    let good: Vec<usize> = (0..g.left).filter(|v| bad.binary_search(v).is_err()).collect();
    let mut t_wise = 0;
    while t_wise < t_max && exhaustive_t_wise(src, g, &good, t_wise + 1)? {
        t_wise += 1;
    }
    let mut unique_neighbor_t = 0;
    while unique_neighbor_t < t_max && unique_neighbor_holds(src, g, &good, unique_neighbor_t + 1) {
        unique_neighbor_t += 1;
    }
    Ok(NobfWitness { outputs: g.left, q: bad.len(), good, t_wise, gamma: 0.0, unique_neighbor_t })
}

/// Deterministic map on NOBF sources.
pub trait ResilientFunction: Send + Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn eval(&self, y: &BitVector) -> BitVector;
}

/// Output bit `o` reads block `o` of `floor(N/m)` inputs, split into
/// majority gates of `maj` consecutive bits; `tribe` consecutive majorities
/// are ANDed and the tribes ORed. Trailing bits of a block are unused.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TribesOfMajorities {
    pub n: usize,
    pub m: usize,
    pub maj: usize,
    pub tribe: usize,
}

impl TribesOfMajorities {
    pub fn new(n: usize, m: usize, maj: usize, tribe: usize) -> Result<Self> {
        if m == 0 || maj == 0 || maj.is_multiple_of(2) || tribe == 0 || n / m < maj * tribe {
            return Err(Error::param(format!(
                "need odd majority width and one full tribe per output (n={n}, m={m}, maj={maj}, tribe={tribe})"
            )));
        }
        Ok(TribesOfMajorities { n, m, maj, tribe })
    }

    /// Majority width 3 (1 if blocks are too short) and the tribe size whose
    /// uniform-input bias `1 - (1 - 2^-s)^T` is closest to 1/2.
    pub fn balanced(n: usize, m: usize) -> Result<Self> {
        let block = n / m.max(1);
        let maj = if block >= 3 { 3 } else { 1 };
        let groups = block / maj;
        let mut best = (f64::INFINITY, 1);
        for s in 1..=groups.max(1) {
            let tribes = groups / s;
            if tribes == 0 {
                break;
            }
            let p = 1.0 - (1.0 - 0.5f64.powi(s as i32)).powi(tribes as i32);
            if (p - 0.5).abs() < best.0 {
                best = ((p - 0.5).abs(), s);
            }
        }
        TribesOfMajorities::new(n, m, maj, best.1)
    }

    pub fn tribes_per_output(&self) -> usize {
        self.n / self.m / self.maj / self.tribe
    }
}

impl ResilientFunction for TribesOfMajorities {
    fn input_len(&self) -> usize {
        self.n
    }

    fn output_len(&self) -> usize {
        self.m
    }

    fn eval(&self, y: &BitVector) -> BitVector {
        let block = self.n / self.m;
        let mut out = BitVector::zeros(self.m);
        for o in 0..self.m {
            let any = (0..self.tribes_per_output()).any(|tr| {
                (0..self.tribe).all(|g| {
                    let start = o * block + (tr * self.tribe + g) * self.maj;
                    2 * (start..start + self.maj).filter(|&i| y.get(i)).count() > self.maj
                })
            });
            out.set(o, any);
        }
        out
    }
}

pub fn resilient_extract(y: &BitVector, rf: &dyn ResilientFunction) -> Result<BitVector> {
    ensure_len(rf.input_len(), y.len())?;
    Ok(rf.eval(y))
}

pub type DetFn = Arc<dyn Fn(&BitVector) -> BitVector + Send + Sync>;

/// Seedless extractor `{0,1}^n -> {0,1}^m`.
#[derive(Clone)]
pub struct DeterministicExtractor {
    pub name: String,
    pub n: usize,
    pub m: usize,
    f: DetFn,
}

impl fmt::Debug for DeterministicExtractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DeterministicExtractor({}, n={}, m={})", self.name, self.n, self.m)
    }
}

impl DeterministicExtractor {
    pub fn new(name: &str, n: usize, m: usize, f: DetFn) -> Self {
        DeterministicExtractor { name: name.to_owned(), n, m, f }
    }

    pub fn evaluate(&self, x: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        Ok((self.f)(x))
    }
}

/// Parities over the design extractor, then the resilient function.
pub fn design_extractor_pipeline(
    g: &DesignExtractorGraph,
    rf: Arc<dyn ResilientFunction>,
) -> Result<DeterministicExtractor> {
    ensure_len(g.left, rf.input_len())?;
    let g2 = g.clone();
    let m = rf.output_len();
    Ok(DeterministicExtractor::new(
        "design_parities+resilient",
        g.right,
        m,
        Arc::new(move |x| rf.eval(&obf_to_nobf(x, &g2).expect("length checked"))),
    ))
}

/// `XOR_i ext(x_i)` over independent slices.
pub fn bitfix_error_reduce(xs: &[BitVector], ext: &DeterministicExtractor) -> Result<BitVector> {
    let Some(first) = xs.first() else {
        return Err(Error::param("no slices"));
    };
    let mut acc = ext.evaluate(first)?;
    for x in &xs[1..] {
        acc.xor_assign(&ext.evaluate(x)?);
    }
    Ok(acc)
}

/// The XOR construction as one extractor on `l * ext.n` bits.
pub fn xor_slices(ext: &DeterministicExtractor, l: usize) -> Result<DeterministicExtractor> {
    if l == 0 {
        return Err(Error::param("need at least one slice"));
    }
    let (inner, n) = (ext.clone(), ext.n);
    Ok(DeterministicExtractor::new(
        &format!("xor{l}({})", ext.name),
        l * n,
        ext.m,
        Arc::new(move |x| {
            let xs: Vec<BitVector> = (0..l).map(|i| x.slice(i * n, n).expect("len")).collect();
            bitfix_error_reduce(&xs, &inner).expect("lengths checked")
        }),
    ))
}

/// Parameter schedule of the output-length step: `mu = k/n`,
/// `mu' = mu/2`, `s = k/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoostSchedule {
    pub mu: f64,
    pub mu_prime: f64,
    pub s: usize,
    pub m: usize,
}

impl BoostSchedule {
    pub fn new(n: usize, k: usize, gamma: f64) -> Self {
        let mu = k as f64 / n as f64;
        BoostSchedule { mu, mu_prime: mu / 2.0, s: k / 2, m: ((1.0 - gamma) * k as f64).floor() as usize }
    }
}

/// `Ext_2(x_{[n] \ S(Z_1)} || 0^|S|, Z_2)` with `(Z_1, Z_2) = det(x)`.
pub fn bitfix_boost(
    x: &BitVector,
    det: &DeterministicExtractor,
    seeded: &ExtractorDescriptor,
    samp: &SamplerDescriptor,
) -> Result<BitVector> {
    if det.m != samp.seed_len + seeded.d {
        return Err(Error::param(format!(
            "deterministic output {} does not split into {} + {}",
            det.m, samp.seed_len, seeded.d
        )));
    }
    ensure_len(seeded.n, x.len())?;
    let z = det.evaluate(x)?;
    let z1 = z.slice(0, samp.seed_len)?;
    let z2 = z.slice(samp.seed_len, seeded.d)?;
    let mut drop = vec![false; x.len()];
    for i in samp.samples(&z1)? {
        if i < x.len() {
            drop[i] = true;
        }
    }
    let kept: Vec<bool> = (0..x.len()).filter(|&i| !drop[i]).map(|i| x.get(i)).collect();
    let padded = BitVector::from_bools(&kept).resized(x.len());
    seeded.evaluate(&padded, &z2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::prng;

    fn desk_graph() -> DesignExtractorGraph {
        desk_design_extractor().unwrap()
    }

    fn edge_graph() -> DesignExtractorGraph {
        DesignExtractorGraph {
            left: 3,
            right: 3,
            degree: 1,
            labels: vec![0, 1, 2],
            neighbors: vec![vec![2], vec![0], vec![1]],
            alpha: 0.0,
            k_bound: 0,
            eps: 0.0,
            base: String::new(),
        }
    }

    #[test]
    fn reduction_fixtures() {
        let g = edge_graph();
        assert!(obf_to_nobf(&BitVector::zeros(3), &g).unwrap().is_zero());
        let x = BitVector::from_bit_str("110").unwrap();
        assert_eq!(obf_to_nobf(&x, &g).unwrap(), BitVector::from_bools(&[x.get(2), x.get(0), x.get(1)]));
        let g = desk_graph();
        assert!(g.left >= 8, "{}", g.left);
        let mut rng = prng(1);
        for _ in 0..50 {
            let (a, b) = (BitVector::random(16, &mut rng), BitVector::random(16, &mut rng));
            let lhs = obf_to_nobf(&a.xor(&b).unwrap(), &g).unwrap();
            assert_eq!(lhs, obf_to_nobf(&a, &g).unwrap().xor(&obf_to_nobf(&b, &g).unwrap()).unwrap());
        }
    }

    #[test]
    fn witness_is_recomputed() {
        let g = desk_graph();
        let mut rng = prng(2);
        for _ in 0..5 {
            let src = BitFixingSource::random(16, 12, &mut rng).unwrap();
            let w = nobf_witness(&src, &g, 3).unwrap();
            // good vertices see at least (delta - eps) D = 2 free neighbors and
            // share at most one neighbor pairwise: pairs always have a unique one
            assert!(w.unique_neighbor_t >= 2, "{w:?}");
            assert!(w.t_wise >= w.unique_neighbor_t);
            assert!(exhaustive_t_wise(&src, &g, &w.good, w.t_wise).unwrap());
        }
    }

    #[test]
    fn tribes_properties() {
        let rf = TribesOfMajorities::balanced(60, 2).unwrap();
        assert_eq!((rf.maj, rf.tribe), (3, 3));
        let golden = rf.eval(&BitVector::zeros(60));
        assert!(golden.is_zero());
        assert_eq!(rf.eval(&BitVector::ones(60)), BitVector::ones(2));
        let mut rng = prng(3);
        for _ in 0..200 {
            let y = BitVector::random(60, &mut rng);
            let out = rf.eval(&y);
            // monotone
            for i in 0..60 {
                if !y.get(i) {
                    let mut y2 = y.clone();
                    y2.set(i, true);
                    let o2 = rf.eval(&y2);
                    assert!(out.ones_iter().all(|j| o2.get(j)));
                }
            }
            // permuting bits inside a majority gate, and gates inside a tribe
            let mut p = y.clone();
            let (a, b) = (p.get(0), p.get(2));
            p.set(0, b);
            p.set(2, a);
            assert_eq!(rf.eval(&p), out);
            let mut q = y.clone();
            for j in 0..3 {
                let (a, b) = (q.get(j), q.get(3 + j));
                q.set(j, b);
                q.set(3 + j, a);
            }
            assert_eq!(rf.eval(&q), out);
        }
        assert!(TribesOfMajorities::new(10, 2, 2, 1).is_err());
    }

    #[test]
    fn xor_reduction() {
        let rf: Arc<dyn ResilientFunction> = Arc::new(TribesOfMajorities::balanced(12, 2).unwrap());
        let g = desk_graph();
        let g = DesignExtractorGraph { left: 12, labels: g.labels[..12].to_vec(), neighbors: g.neighbors[..12].to_vec(), ..g };
        let det = design_extractor_pipeline(&g, rf).unwrap();
        let mut rng = prng(4);
        let xs: Vec<BitVector> = (0..3).map(|_| BitVector::random(16, &mut rng)).collect();
        assert_eq!(bitfix_error_reduce(&xs[..1], &det).unwrap(), det.evaluate(&xs[0]).unwrap());
        let fwd = bitfix_error_reduce(&xs, &det).unwrap();
        let rev: Vec<BitVector> = xs.iter().rev().cloned().collect();
        assert_eq!(fwd, bitfix_error_reduce(&rev, &det).unwrap());
        assert!(bitfix_error_reduce(&[], &det).is_err());
        let joined = xor_slices(&det, 3).unwrap();
        assert_eq!(joined.evaluate(&BitVector::concat_all(&xs)).unwrap(), fwd);
    }

    #[test]
    fn xor_of_bit_fixing_outputs_shrinks_distance() {
        // exact output law of one slice under its bit-fixing source, then the
        // convolution oracle for independent slices
        let rf: Arc<dyn ResilientFunction> = Arc::new(TribesOfMajorities::new(12, 2, 3, 1).unwrap());
        let g = desk_graph();
        let g = DesignExtractorGraph { left: 12, labels: g.labels[..12].to_vec(), neighbors: g.neighbors[..12].to_vec(), ..g };
        let det = design_extractor_pipeline(&g, rf).unwrap();
        let mut rng = prng(5);
        let src = BitFixingSource::random(16, 10, &mut rng).unwrap();
        let mut table = vec![0.0; 4];
        for a in 0..1u64 << 10 {
            table[det.evaluate(&src.assign(a)).unwrap().to_u64() as usize] += 1.0 / 1024.0;
        }
        let eps = crate::compositions::table_sd_from_uniform(&table);
        for l in 1..=3 {
            let sd = crate::compositions::xor_law_sd(&vec![table.clone(); l]).unwrap();
            assert!(sd <= (2.0 * eps).powi(l as i32) + 1e-12);
        }
    }

    #[test]
    fn boost_fixtures() {
        let seeded = crate::primitives::leftover_hash_descriptor(8, 3).unwrap();
        let empty = SamplerDescriptor::new(
            "empty",
            2,
            0,
            8,
            crate::samplers::SamplerGuarantee::Uncertified,
            true,
            Arc::new(|_| vec![]),
        );
        let det = DeterministicExtractor::new("fixed", 8, 10, Arc::new(|x: &BitVector| x.concat(&BitVector::from_u64(0b10, 2))));
        let x = BitVector::from_u64(0xC5, 8);
        let z = det.evaluate(&x).unwrap();
        let want = seeded.evaluate(&x, &z.slice(2, 8).unwrap()).unwrap();
        assert_eq!(bitfix_boost(&x, &det, &seeded, &empty).unwrap(), want);
        assert_eq!(bitfix_boost(&x, &det, &seeded, &empty).unwrap(), bitfix_boost(&x, &det, &seeded, &empty).unwrap());
        let bad = DeterministicExtractor::new("short", 8, 9, Arc::new(|x: &BitVector| x.resized(9)));
        assert!(bitfix_boost(&x, &bad, &seeded, &empty).is_err());
    }

    #[test]
    fn schedule() {
        let s = BoostSchedule::new(32, 16, 0.5);
        assert_eq!((s.mu, s.mu_prime, s.s, s.m), (0.5, 0.25, 8, 8));
    }
}
