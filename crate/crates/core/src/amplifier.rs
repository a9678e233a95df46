//! The basic extractor: the source as a truth table, pushed through repeated
//! inner-product amplification, an expander-walk XOR step and an NW
//! generator. Every output bit is a parity of source bits; footprints
//! record which ones, so locality is counted rather than assumed.
//!
//! Input layouts (LSB first):
//! - amplification level on `3l` bits: `s` (l) then `r = (A, B)` (2l), with
//!   `a_i = A + i*B` in GF(2^l) for `i < l`;
//! - walk step on `l3` bits: `a` (|a|), `s` (blocks), `v1` (l2), `w` (3 per step).

use std::sync::Arc;

use serde_json::{json, Value};

use crate::artifact::{seal, unseal, ConstructionTree};
use crate::bitcore::{BitVector, GF2Field};
use crate::combinatorics::{build_design, Design};
use crate::error::{ensure_len, Error, Result};
use crate::expander::{mgg_for_bits, random_walk, ExpanderGraph};
use crate::primitives::ExtractorDescriptor;

/// Error level configured for the desk profile: twice the probability that
/// all eight walk selectors are zero, which forces a constant output bit.
pub const DESK_EPS: f64 = 1.0 / 128.0;

/// A parity `x -> XOR_{i in indices} x_i` over an `n`-bit source.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParityFootprint {
    bits: BitVector,
}

impl ParityFootprint {
    pub fn empty(n: usize) -> Self {
        ParityFootprint { bits: BitVector::zeros(n) }
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        let mut bits = BitVector::zeros(n);
        bits.set(i, true);
        ParityFootprint { bits }
    }

    pub fn from_indices(n: usize, idx: &[usize]) -> Self {
        let mut f = ParityFootprint::empty(n);
        for &i in idx {
            f.bits.flip(i);
        }
        f
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits.ones_iter().collect()
    }

    /// Exact locality of the bit.
    pub fn size(&self) -> usize {
        self.bits.weight()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_zero()
    }

    pub fn mask(&self) -> &BitVector {
        &self.bits
    }

    pub fn value(&self, x: &BitVector) -> bool {
        x.and(&self.bits).map(|v| v.parity()).unwrap_or(false)
    }

    pub fn toggle(&mut self, other: &ParityFootprint) {
        self.bits.xor_assign(&other.bits);
    }
}

/// Selection function: input `i` names source bit `i`; positions past the
/// source are constant zero.
pub fn f1_footprint(n: usize, i: &BitVector) -> ParityFootprint {
    let idx = i.to_u64() as usize;
    if i.len() <= 64 && idx < n {
        ParityFootprint::singleton(n, idx)
    } else {
        ParityFootprint::empty(n)
    }
}

/// One inner-product amplification step: `f'(s, r) = <s, f(a_1) .. f(a_l)>`.
/// Both halves of the hardness argument use this same map.
pub fn amp2_step<F>(n: usize, field: &GF2Field, f: F, z: &BitVector) -> Result<ParityFootprint>
where
    F: Fn(&BitVector) -> ParityFootprint,
{
    let l = field.degree();
    ensure_len(3 * l, z.len())?;
    let s = z.slice(0, l)?;
    let a = z.slice(l, l)?.to_u64();
    let b = z.slice(2 * l, l)?.to_u64();
    let mut out = ParityFootprint::empty(n);
    for i in s.ones_iter() {
        let ai = a ^ field.mul(i as u64, b);
        out.toggle(&f(&BitVector::from_u64(ai, l)));
    }
    Ok(out)
}

/// Parameters of the full construction at the asymptotic constants. Only
/// meaningful for astronomically large n; kept for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticParameters {
    pub n: f64,
    pub l1: usize,
    pub c2: usize,
    pub l2: usize,
    pub gamma: f64,
    pub a_len: usize,
    pub amp3_overlap: f64,
    pub walk_bits: usize,
    pub l3: usize,
    pub theta: f64,
    pub d: usize,
    pub m: u64,
    pub eps: f64,
}

/// `gamma` must lie in (0, 1/30); 1/32 is used when none is given.
pub fn asymptotic_parameters(log2_n: usize, c2: usize, gamma: Option<f64>) -> Result<AsymptoticParameters> {
    let gamma = gamma.unwrap_or(1.0 / 32.0);
    if !(gamma > 0.0 && gamma < 1.0 / 30.0) {
        return Err(Error::param(format!("gamma {gamma} outside (0, 1/30)")));
    }
    if c2 < 2 {
        return Err(Error::param("the asymptotic construction needs c2 >= 2"));
    }
    let l1 = log2_n;
    let l2 = 3usize.pow(c2 as u32 + 1) * l1;
    let a_len = (40.0 * l2 as f64 / gamma).floor() as usize;
    let walk_bits = 3 * (l2 - 1);
    let l3 = a_len + l2 + l2 + walk_bits;
    let theta = l1 as f64 / (900.0 * l3 as f64);
    let d = (10.0 * l3 as f64 / theta).floor() as usize;
    let m = 2f64.powf(theta * l3 as f64 / 4.0).floor() as u64;
    Ok(AsymptoticParameters {
        n: 2f64.powi(log2_n as i32),
        l1,
        c2,
        l2,
        gamma,
        a_len,
        amp3_overlap: gamma * l2 as f64 / 4.0,
        walk_bits,
        l3,
        theta,
        d,
        m,
        eps: 2f64.powf(-(log2_n as f64) / 600.0),
    })
}

/// Concrete, evaluable parameters of the construction.
#[derive(Clone, Debug)]
pub struct PipelineProfile {
    pub name: String,
    pub n: usize,
    pub l1: usize,
    pub c2: usize,
    /// Input lengths l1, 3 l1, ..., l2.
    pub level_lens: Vec<usize>,
    pub l2: usize,
    /// Fan-in of the walk step.
    pub blocks: usize,
    pub amp3_design: Design,
    pub l3: usize,
    pub nw_design: Design,
    pub eps: f64,
    fields: Vec<GF2Field>,
    graph: ExpanderGraph,
}

/// Profile with `blocks` walk blocks and `m` output bits. Both designs are
/// built by the greedy design search with the given overlaps.
pub fn desk_profile(
    n: usize,
    c2: usize,
    blocks: usize,
    m: usize,
    amp3_overlap: usize,
    nw_overlap: usize,
    eps: f64,
) -> Result<PipelineProfile> {
    if n < 2 || c2 == 0 || blocks == 0 || m == 0 {
        return Err(Error::param("desk profile needs n >= 2 and c2, blocks, m >= 1"));
    }
    let l1 = (usize::BITS - (n - 1).leading_zeros()) as usize;
    let level_lens: Vec<usize> = (0..=c2 + 1).map(|j| 3usize.pow(j as u32) * l1).collect();
    let l2 = level_lens[c2 + 1];
    let a_len = if amp3_overlap == 0 { blocks * l2 } else { blocks * l2 / 2 + l2 };
    let amp3_design = build_design(a_len, blocks, amp3_overlap, l2)?;
    let l3 = a_len + blocks + l2 + 3 * (blocks - 1);
    let d = if nw_overlap == 0 { m * l3 } else { m * l3 / 2 + l3 };
    let nw_design = build_design(d, m, nw_overlap, l3)?;
    assemble("desk", n, c2, level_lens, blocks, amp3_design, nw_design, eps)
}

/// n = 16, one mild amplification round, 8 walk blocks, 2 output bits.
pub fn desk16() -> Result<PipelineProfile> {
    desk_profile(16, 1, 8, 2, 0, 0, DESK_EPS)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    name: &str,
    n: usize,
    c2: usize,
    level_lens: Vec<usize>,
    blocks: usize,
    amp3_design: Design,
    nw_design: Design,
    eps: f64,
) -> Result<PipelineProfile> {
    let l1 = level_lens[0];
    let l2 = *level_lens.last().expect("levels are non-empty");
    if level_lens[c2] > 64 {
        return Err(Error::param("amplification levels beyond 64-bit fields are not evaluable"));
    }
    let fields = level_lens[..=c2].iter().map(|&l| GF2Field::new(l)).collect::<Result<_>>()?;
    let graph = mgg_for_bits(l2)?;
    if amp3_design.sets.len() != blocks || amp3_design.set_size != l2 {
        return Err(Error::param("walk-step design does not match the block count"));
    }
    let l3 = amp3_design.universe + blocks + l2 + 3 * (blocks - 1);
    if nw_design.set_size != l3 {
        return Err(Error::param("NW design set size differs from l3"));
    }
    Ok(PipelineProfile {
        name: name.to_owned(),
        n,
        l1,
        c2,
        level_lens,
        l2,
        blocks,
        amp3_design,
        l3,
        nw_design,
        eps,
        fields,
        graph,
    })
}

impl PipelineProfile {
    pub fn seed_len(&self) -> usize {
        self.nw_design.universe
    }

    pub fn output_len(&self) -> usize {
        self.nw_design.sets.len()
    }

    pub fn a_len(&self) -> usize {
        self.amp3_design.universe
    }

    /// Locality bound: blocks times the fan-in product of the amplification
    /// levels, capped at n.
    pub fn locality_bound(&self) -> usize {
        let prod: usize = self.level_lens[..=self.c2].iter().product();
        (self.blocks * prod).min(self.n)
    }

    /// Footprint of the level-`j` function on input `z` (`j = 0` is the
    /// selection function, `j = c2 + 1` is f2).
    pub fn level_footprint(&self, j: usize, z: &BitVector) -> ParityFootprint {
        if j == 0 {
            return f1_footprint(self.n, z);
        }
        amp2_step(self.n, &self.fields[j - 1], |a| self.level_footprint(j - 1, a), z)
            .expect("level input lengths are fixed by the profile")
    }

    pub fn f2_footprint(&self, z: &BitVector) -> ParityFootprint {
        self.level_footprint(self.c2 + 1, z)
    }

    /// Splits a walk-step input into `(a, s, v1, w)`.
    pub fn split_l3(&self, z: &BitVector) -> Result<(BitVector, BitVector, u128, BitVector)> {
        ensure_len(self.l3, z.len())?;
        let al = self.a_len();
        let a = z.slice(0, al)?;
        let s = z.slice(al, self.blocks)?;
        let v1 = z.slice(al + self.blocks, self.l2)?.to_u128();
        let w = z.slice(al + self.blocks + self.l2, 3 * (self.blocks - 1))?;
        Ok((a, s, v1, w))
    }

    /// Walk vertices v_1..v_blocks as l2-bit strings.
    pub fn walk_vertices(&self, v1: u128, w: &BitVector) -> Result<Vec<BitVector>> {
        let t = random_walk(&self.graph, v1, self.blocks - 1, w)?;
        Ok(t.vertices.iter().map(|&v| BitVector::from_u128(v, self.l2)).collect())
    }

    /// `f3(a, s, v1, w) = <s, f2(a|S_1 + v_1) .. f2(a|S_L + v_L)>`.
    pub fn amp3_step<F>(&self, f2: F, z: &BitVector) -> Result<ParityFootprint>
    where
        F: Fn(&BitVector) -> ParityFootprint,
    {
        let (a, s, v1, w) = self.split_l3(z)?;
        let vs = self.walk_vertices(v1, &w)?;
        let mut out = ParityFootprint::empty(self.n);
        for i in s.ones_iter() {
            let block = crate::bitcore::select_bits(&a, &self.amp3_design.sets[i])?;
            out.toggle(&f2(&block.xor(&vs[i])?));
        }
        Ok(out)
    }

    pub fn f3_footprint(&self, z: &BitVector) -> Result<ParityFootprint> {
        self.amp3_step(|y| self.f2_footprint(y), z)
    }

    /// Footprint of each output bit: `f3(seed|S_i)`.
    pub fn output_footprints(&self, seed: &BitVector) -> Result<Vec<ParityFootprint>> {
        ensure_len(self.seed_len(), seed.len())?;
        self.nw_design
            .sets
            .iter()
            .map(|set| self.f3_footprint(&crate::bitcore::select_bits(seed, set)?))
            .collect()
    }

    pub fn basic_extract(&self, x: &BitVector, seed: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        let fps = self.output_footprints(seed)?;
        Ok(BitVector::from_bools(&fps.iter().map(|f| f.value(x)).collect::<Vec<_>>()))
    }

    /// Direct evaluation of the nested inner-product definition, computing
    /// bit values at every level instead of footprints.
    pub fn nested_eval(&self, x: &BitVector, seed: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        ensure_len(self.seed_len(), seed.len())?;
        let mut out = BitVector::zeros(self.output_len());
        for (o, set) in self.nw_design.sets.iter().enumerate() {
            let z = crate::bitcore::select_bits(seed, set)?;
            let (a, s, v1, w) = self.split_l3(&z)?;
            let vs = self.walk_vertices(v1, &w)?;
            let mut bit = false;
            for i in 0..self.blocks {
                if s.get(i) {
                    let y = crate::bitcore::select_bits(&a, &self.amp3_design.sets[i])?.xor(&vs[i])?;
                    bit ^= self.nested_level(self.c2 + 1, x, &y);
                }
            }
            out.set(o, bit);
        }
        Ok(out)
    }

    fn nested_level(&self, j: usize, x: &BitVector, z: &BitVector) -> bool {
        if j == 0 {
            let i = z.to_u64() as usize;
            return i < self.n && x.get(i);
        }
        let l = self.level_lens[j - 1];
        let field = &self.fields[j - 1];
        let (a, b) = (z.slice(l, l).unwrap().to_u64(), z.slice(2 * l, l).unwrap().to_u64());
        (0..l).fold(false, |acc, i| {
            let ai = BitVector::from_u64(a ^ field.mul(i as u64, b), l);
            acc ^ (z.get(i) && self.nested_level(j - 1, x, &ai))
        })
    }

    pub fn tree(&self) -> ConstructionTree {
        let mut levels: Vec<ConstructionTree> = vec![ConstructionTree::leaf("select", json!({ "l1": self.l1 }))];
        for j in 1..=self.c2 + 1 {
            let part = if j <= self.c2 { "mild" } else { "constant" };
            let prev = levels.pop().expect("one level on the stack");
            levels.push(ConstructionTree::node(
                "amplify_inner_product",
                json!({ "part": part, "l": self.level_lens[j - 1] }),
                vec![prev],
            ));
        }
        let amp3 = ConstructionTree::node(
            "amplify_walk_xor",
            json!({ "blocks": self.blocks, "design": self.amp3_design.to_artifact()["hash"] }),
            levels,
        );
        ConstructionTree::node("nw", json!({ "design": self.nw_design.to_artifact()["hash"] }), vec![amp3])
    }

    pub fn descriptor(&self) -> ExtractorDescriptor {
        let p = Arc::new(self.clone());
        ExtractorDescriptor::new(
            &format!("basic[{}]", self.name),
            self.n,
            self.seed_len(),
            self.output_len(),
            (self.n as f64) * 0.75,
            self.eps,
            self.locality_bound(),
            true,
            self.tree(),
            Arc::new(move |x, u| p.basic_extract(x, u).expect("lengths checked by the descriptor")),
        )
    }

    pub fn to_artifact(&self) -> Value {
        seal(
            "amplifier_profile",
            json!({
                "name": self.name, "n": self.n, "c2": self.c2, "blocks": self.blocks, "eps": self.eps,
            }),
            json!({ "amp3_design": self.amp3_design.to_artifact(), "nw_design": self.nw_design.to_artifact() }),
        )
    }

    pub fn from_artifact(v: &Value) -> Result<Self> {
        let body = unseal(v, "amplifier_profile")?;
        let p = &body["params"];
        let num = |k: &str| p[k].as_u64().map(|v| v as usize).ok_or_else(|| Error::Parse(format!("missing {k}")));
        let (n, c2, blocks) = (num("n")?, num("c2")?, num("blocks")?);
        let l1 = (usize::BITS - (n - 1).leading_zeros()) as usize;
        let level_lens = (0..=c2 + 1).map(|j| 3usize.pow(j as u32) * l1).collect();
        assemble(
            p["name"].as_str().unwrap_or("profile"),
            n,
            c2,
            level_lens,
            blocks,
            Design::from_artifact(&body["amp3_design"])?,
            Design::from_artifact(&body["nw_design"])?,
            p["eps"].as_f64().ok_or_else(|| Error::Parse("missing eps".into()))?,
        )
    }

    pub fn hash(&self) -> String {
        self.to_artifact()["hash"].as_str().unwrap_or_default().to_owned()
    }
}

/// Exact distribution of a single output footprint over a uniform seed,
/// for profiles with disjoint walk blocks, one mild round and n = 2^l1 <= 16.
///
/// With disjoint blocks each `a|S_i + v_i` is uniform and independent of the
/// walk, so the footprint is a uniformly chosen subset-sum of `blocks`
/// independent f2 footprints. Its Fourier coefficient at `chi` is
/// `((1 + P(chi)) / 2)^blocks` where `P(chi)` is the probability over the
/// pairwise seed that `chi` is orthogonal to all first-level footprints.
#[derive(Clone, Debug)]
pub struct FootprintLaw {
    pub n: usize,
    /// Fourier coefficients `E[(-1)^{chi . F}]`.
    pub fourier: Vec<f64>,
    /// Point probabilities `Pr[F = v]`, indexed by mask.
    pub mass: Vec<f64>,
}

pub fn footprint_law(p: &PipelineProfile) -> Result<FootprintLaw> {
    if p.c2 != 1 || p.n != 1 << p.l1 || p.n > 16 || p.amp3_design.intersection_bound != 0 {
        return Err(Error::param(
            "exact footprint law needs c2 = 1, n = 2^l1 <= 16 and disjoint walk blocks",
        ));
    }
    let n = p.n;
    let l = p.level_lens[1];
    let field = &p.fields[1];
    let fp1: Vec<u32> = (0..1u64 << l)
        .map(|z| mask_of(&p.level_footprint(1, &BitVector::from_u64(z, l))))
        .collect();
    let mut counts = vec![0u64; 1 << n];
    let mut vecs = vec![0u32; l];
    for b in 0..1u64 << l {
        let offsets: Vec<u64> = (0..l as u64).map(|i| field.mul(i, b)).collect();
        for a in 0..1u64 << l {
            for (slot, off) in vecs.iter_mut().zip(&offsets) {
                *slot = fp1[(a ^ off) as usize];
            }
            accumulate_annihilator(&vecs, n, &mut counts);
        }
    }
    let total = (1u64 << (2 * l)) as f64;
    let fourier: Vec<f64> =
        counts.iter().map(|&c| ((1.0 + c as f64 / total) / 2.0).powi(p.blocks as i32)).collect();
    let mut mass = fourier.clone();
    walsh_hadamard(&mut mass);
    let scale = 1.0 / (1u64 << n) as f64;
    mass.iter_mut().for_each(|v| *v *= scale);
    Ok(FootprintLaw { n, fourier, mass })
}

fn mask_of(f: &ParityFootprint) -> u32 {
    f.mask().to_u64() as u32
}

/// Adds one to `counts[chi]` for every `chi` orthogonal to all of `vecs`.
fn accumulate_annihilator(vecs: &[u32], n: usize, counts: &mut [u64]) {
    let mut rows: Vec<(u32, u32)> = Vec::with_capacity(n); // (row, pivot bit)
    for &v in vecs {
        let mut v = v;
        for &(r, piv) in &rows {
            if v & piv != 0 {
                v ^= r;
            }
        }
        if v != 0 {
            let piv = v & v.wrapping_neg();
            for row in rows.iter_mut() {
                if row.0 & piv != 0 {
                    row.0 ^= v;
                }
            }
            rows.push((v, piv));
        }
    }
    let pivots: u32 = rows.iter().fold(0, |acc, r| acc | r.1);
    // complement generators: e_j plus the pivots of rows containing j
    let gens: Vec<u32> = (0..n as u32)
        .filter(|j| pivots >> j & 1 == 0)
        .map(|j| rows.iter().filter(|r| r.0 >> j & 1 == 1).fold(1u32 << j, |acc, r| acc | r.1))
        .collect();
    let mut cur = 0u32;
    counts[0] += 1;
    for i in 1u32..1 << gens.len() {
        cur ^= gens[i.trailing_zeros() as usize];
        counts[cur as usize] += 1;
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Reduced basis of the space orthogonal to `basis` inside GF(2)^n.
pub fn orthogonal_complement(basis: &[u32], n: usize) -> Vec<u32> {
    let mut rows: Vec<(u32, u32)> = Vec::new();
    for &v in basis {
        let mut v = v;
        for &(r, piv) in &rows {
            if v & piv != 0 {
                v ^= r;
            }
        }
        if v != 0 {
            let piv = v & v.wrapping_neg();
            for row in rows.iter_mut() {
                if row.0 & piv != 0 {
                    row.0 ^= v;
                }
            }
            rows.push((v, piv));
        }
    }
    let pivots: u32 = rows.iter().fold(0, |acc, r| acc | r.1);
    (0..n as u32)
        .filter(|j| pivots >> j & 1 == 0)
        .map(|j| rows.iter().filter(|r| r.0 >> j & 1 == 1).fold(1u32 << j, |acc, r| acc | r.1))
        .collect()
}

/// Canonical representative of `v` modulo the span of `basis`.
fn reduce_mod(v: u32, echelon: &[(u32, u32)]) -> u32 {
    echelon.iter().fold(v, |v, &(r, piv)| if v & piv != 0 { v ^ r } else { v })
}

fn echelon(basis: &[u32]) -> Vec<(u32, u32)> {
    let mut rows: Vec<(u32, u32)> = Vec::new();
    for &v in basis {
        let v = reduce_mod(v, &rows);
        if v != 0 {
            let piv = 1u32 << (31 - v.leading_zeros());
            for row in rows.iter_mut() {
                if row.0 & piv != 0 {
                    row.0 ^= v;
                }
            }
            rows.push((v, piv));
        }
    }
    rows
}

impl FootprintLaw {
    /// Exact distance of `(U, Ext(X, U))` from uniform for the affine source
    /// `x0 + span(basis)`, with `m` independent output footprints (disjoint
    /// NW sets). Uses `SD = 1 - E_u[2^{rank_u - m}]`.
    pub fn affine_error(&self, basis: &[u32], m: usize) -> Result<f64> {
        let q = orthogonal_complement(basis, self.n);
        let ech = echelon(&q);
        let mut classes = std::collections::HashMap::<u32, f64>::new();
        for (v, &p) in self.mass.iter().enumerate() {
            *classes.entry(reduce_mod(v as u32, &ech)).or_default() += p;
        }
        let p0 = classes.get(&0).copied().unwrap_or(0.0);
        let coll: f64 = classes.values().map(|p| p * p).sum();
        match m {
            1 => Ok(p0 / 2.0),
            2 => Ok(0.75 * p0 * p0 + 0.5 * (2.0 * p0 * (1.0 - p0) + coll - p0 * p0)),
            _ => Err(Error::param("exact affine error supports one or two output bits")),
        }
    }
}

/// Masks of a basis for `V` as u32 words (n <= 32).
pub fn basis_masks(basis: &[BitVector]) -> Vec<u32> {
    basis.iter().map(|b| b.to_u64() as u32).collect()
}

/// Rank of `rows` restricted to `span(basis)`: the rank of the matrix
/// `(row . b_i)`.
pub fn restricted_rank(rows: &[u32], basis: &[u32]) -> usize {
    let proj: Vec<u32> = rows
        .iter()
        .map(|&r| basis.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (((r & b).count_ones() & 1) << i)))
        .collect();
    echelon(&proj).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> PipelineProfile {
        desk_profile(16, 1, 3, 2, 0, 0, DESK_EPS).unwrap()
    }

    #[test]
    fn selection_function() {
        assert_eq!(f1_footprint(16, &BitVector::from_u64(0, 4)).indices(), vec![0]);
        assert_eq!(f1_footprint(16, &BitVector::from_u64(5, 4)).indices(), vec![5]);
        assert!(f1_footprint(12, &BitVector::from_u64(13, 4)).is_empty());
    }

    #[test]
    fn amp2_edge_cases() {
        let field = GF2Field::new(4).unwrap();
        let f = |a: &BitVector| f1_footprint(16, a);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = BitVector::random(8, &mut rng);
        let z = BitVector::zeros(4).concat(&r);
        assert!(amp2_step(16, &field, f, &z).unwrap().is_empty());
        let z = BitVector::from_u64(1, 4).concat(&r);
        let a0 = r.slice(0, 4).unwrap();
        assert_eq!(amp2_step(16, &field, f, &z).unwrap(), f1_footprint(16, &a0));
    }

    // A linear bit's footprint is the set of unit vectors it responds to.
    fn truth_table_footprint(n: usize, bit: impl Fn(&BitVector) -> bool) -> Vec<usize> {
        (0..n)
            .filter(|&i| {
                let mut e = BitVector::zeros(n);
                e.set(i, true);
                bit(&e)
            })
            .collect()
    }

    #[test]
    fn level_footprints_match_truth_table() {
        let p = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for j in 1..=2 {
            let l = p.level_lens[j];
            for _ in 0..20 {
                let z = BitVector::random(l, &mut rng);
                let oracle = truth_table_footprint(16, |x| p.nested_level(j, x, &z));
                assert_eq!(p.level_footprint(j, &z).indices(), oracle);
            }
        }
    }

    #[test]
    fn amp3_edge_cases() {
        let p = desk_profile(16, 1, 1, 1, 0, 0, DESK_EPS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = BitVector::random(p.l3, &mut rng);
        let (a, s, v1, _) = p.split_l3(&z).unwrap();
        let fp = p.f3_footprint(&z).unwrap();
        if s.get(0) {
            let y = a.xor(&BitVector::from_u128(v1, p.l2)).unwrap();
            assert_eq!(fp, p.f2_footprint(&y));
        } else {
            assert!(fp.is_empty());
        }
        let p = toy();
        let mut z = BitVector::random(p.l3, &mut rng);
        for i in 0..p.blocks {
            z.set(p.a_len() + i, false);
        }
        assert!(p.f3_footprint(&z).unwrap().is_empty());
    }

    #[test]
    fn extract_is_linear_and_matches_nested() {
        let p = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let u = BitVector::random(p.seed_len(), &mut rng);
            let x = BitVector::random(16, &mut rng);
            let y = BitVector::random(16, &mut rng);
            let fx = p.basic_extract(&x, &u).unwrap();
            let fy = p.basic_extract(&y, &u).unwrap();
            assert_eq!(p.basic_extract(&(&x ^ &y), &u).unwrap(), &fx ^ &fy);
            assert_eq!(p.nested_eval(&x, &u).unwrap(), fx);
            assert!(p.basic_extract(&BitVector::zeros(16), &u).unwrap().is_zero());
            for f in p.output_footprints(&u).unwrap() {
                assert!(f.size() <= p.locality_bound());
            }
        }
    }

    #[test]
    fn desk16_shape() {
        let p = desk16().unwrap();
        assert_eq!(p.level_lens, vec![4, 12, 36]);
        assert_eq!(p.a_len(), 288);
        assert_eq!(p.l3, 288 + 8 + 36 + 21);
        assert_eq!(p.seed_len(), 2 * p.l3);
        assert_eq!(p.locality_bound(), 16);
        let back = PipelineProfile::from_artifact(&p.to_artifact()).unwrap();
        assert_eq!(back.hash(), p.hash());
        assert_eq!(back.nw_design, p.nw_design);
    }

    #[test]
    fn asymptotic_parameters_are_astronomical() {
        let pp = asymptotic_parameters(64, 2, None).unwrap();
        assert_eq!(pp.l2, 27 * 64);
        assert_eq!(pp.m, 1);
        assert!(pp.d > 1_000_000);
        assert!(asymptotic_parameters(64, 1, None).is_err());
        assert!(asymptotic_parameters(64, 2, Some(0.05)).is_err());
        // theta * l3 = l1 / 900, so m = floor(n^(1/3600))
        assert!((pp.theta * pp.l3 as f64 - 64.0 / 900.0).abs() < 1e-9);
    }

    #[test]
    fn walsh_hadamard_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let orig: Vec<f64> = (0..32).map(|_| rng.gen()).collect();
        let mut v = orig.clone();
        walsh_hadamard(&mut v);
        walsh_hadamard(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a / 32.0 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn annihilator_counts_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let vecs: Vec<u32> = (0..rng.gen_range(0..5)).map(|_| rng.gen_range(0..256)).collect();
            let mut counts = vec![0u64; 256];
            accumulate_annihilator(&vecs, 8, &mut counts);
            for chi in 0..256u32 {
                let orth = vecs.iter().all(|v| (v & chi).count_ones() % 2 == 0);
                assert_eq!(counts[chi as usize], orth as u64);
            }
        }
    }

    #[test]
    fn complement_and_restricted_rank() {
        let basis = vec![0b0011u32, 0b0110];
        let q = orthogonal_complement(&basis, 4);
        assert_eq!(q.len(), 2);
        for &c in &q {
            for &b in &basis {
                assert_eq!((c & b).count_ones() % 2, 0);
            }
        }
        assert_eq!(restricted_rank(&[0b0001, 0b0100], &basis), 2);
        assert_eq!(restricted_rank(&q, &basis), 0);
    }
}
