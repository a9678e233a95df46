//! Low-locality condenser: a sparse GF(2) matrix whose rows are Bernoulli
//! vectors read off an expander walk, with heavy rows zeroed.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::artifact::ConstructionTree;
use crate::bitcore::BitVector;
use crate::error::{ensure_len, Error, Result};
use crate::expander::{mgg_for_bits, mgg_lambda_bound, power_for_target, powered_graph, wide_torus_walk, ExpanderGraph};
use crate::nisan::{block_width_for_space, nisan_expand_bits, seed_len as nisan_seed_len};
use crate::primitives::EvalFn;

/// Bit `i` of the row is 1 iff block `s_i` (first digit most significant)
/// is at most `0.b_1..b_t`, decided digit by digit: a smaller digit gives 1,
/// a larger digit gives 0, a full tie gives 1. `b` holds the digits
/// `b_1..b_t` with `b_1` the most significant of `t_bits`.
pub fn bernoulli_row(v: &BitVector, b: u64, t_bits: usize, n: usize) -> Result<BitVector> {
    if v.len() < n * t_bits {
        return Err(Error::param(format!("{} bits cannot feed {n} blocks of {t_bits}", v.len())));
    }
    let mut row = BitVector::zeros(n);
    for i in 0..n {
        let mut bit = true;
        for j in 0..t_bits {
            let s = v.get(i * t_bits + j);
            let bj = b >> (t_bits - 1 - j) & 1 == 1;
            if s != bj {
                bit = !s;
                break;
            }
        }
        row.set(i, bit);
    }
    Ok(row)
}

/// Same map as [`bernoulli_row`] by integer comparison.
fn bernoulli_row_fast(v: &BitVector, b: u64, t_bits: usize, n: usize) -> BitVector {
    let mut row = BitVector::zeros(n);
    for i in 0..n {
        let mut s = 0u64;
        for j in 0..t_bits {
            s = s << 1 | v.get(i * t_bits + j) as u64;
        }
        if s <= b {
            row.set(i, true);
        }
    }
    row
}

/// Exact probability that a uniform block yields 1: `(b + 1) / 2^t_bits`
/// counted over all blocks. Ties count as 1, so the value is
/// `0.b_1..b_t + 2^-t`.
pub fn bernoulli_bias_exact(b: u64, t_bits: usize) -> f64 {
    let mut ones = 0u64;
    for s in 0..1u64 << t_bits {
        let v = BitVector::from_u64(s.reverse_bits() >> (64 - t_bits.max(1)), t_bits);
        if bernoulli_row(&v, b, t_bits, 1).expect("len").get(0) {
            ones += 1;
        }
    }
    ones as f64 / (1u64 << t_bits) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondenserParams {
    pub n: usize,
    pub k: usize,
    /// Rows, `10 k`.
    pub t: usize,
    /// `k / (2 log2 n)`.
    pub l: f64,
    /// Expected row weight `n / l`.
    pub c: f64,
    /// Rows heavier than `1.2 c` are zeroed.
    pub clip: f64,
    pub t_bits: usize,
    /// Numerator `b` of the dyadic row density; bias is `(b + 1) / 2^t_bits`.
    pub p_num: u64,
    /// Bits each walk vertex expands to, `n * t_bits`.
    pub r0: usize,
    pub nisan_w: usize,
    pub nisan_k: usize,
    /// Walk vertex label width.
    pub r: usize,
    pub power: usize,
    pub lambda_bound: f64,
    /// Walk vertices feed the rows through the space-bounded generator.
    pub compressed: bool,
}

impl CondenserParams {
    /// Desk parameters: `t = 10k`, `l = k/(2 log2 n)`, dyadic density with
    /// `t_bits = 2 ceil(log2 n)` digits, generator space `2 ceil(log2 n)`,
    /// graph powered to `lambda <= 0.01`.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 4 || k == 0 || k > n {
            return Err(Error::param(format!("need 4 <= n and 0 < k <= n (n={n}, k={k})")));
        }
        let logn = (n as f64).log2();
        let l = k as f64 / (2.0 * logn);
        let c = n as f64 / l;
        let t_bits = 2 * (usize::BITS - (n - 1).leading_zeros()) as usize;
        if t_bits > 62 {
            return Err(Error::param("density precision beyond 62 bits"));
        }
        // bias (b + 1) / 2^t_bits nearest to 1/l
        let target = (1.0 / l).min(1.0);
        let b = ((target * (1u64 << t_bits) as f64).round() as u64).clamp(1, 1 << t_bits) - 1;
        let r0 = n * t_bits;
        let w = block_width_for_space(t_bits);
        let mut kn = 0;
        while w << kn < r0 {
            kn += 1;
        }
        let r = nisan_seed_len(w, kn);
        let power = power_for_target(mgg_lambda_bound(), 0.01);
        Ok(CondenserParams {
            n,
            k,
            t: 10 * k,
            l,
            c,
            clip: 1.2 * c,
            t_bits,
            p_num: b,
            r0,
            nisan_w: w,
            nisan_k: kn,
            r,
            power,
            lambda_bound: mgg_lambda_bound().powi(power as i32),
            compressed: true,
        })
    }

    /// Walk vertices are used as row seeds directly (`r = r0`).
    pub fn uncompressed(mut self) -> Result<Self> {
        if self.r0 > 252 {
            return Err(Error::Budget(format!("{}-bit vertices exceed the torus range", self.r0)));
        }
        self.r = self.r0;
        self.compressed = false;
        Ok(self)
    }

    pub fn with_rows(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn bias(&self) -> f64 {
        (self.p_num + 1) as f64 / (1u64 << self.t_bits) as f64
    }

    pub fn graph(&self) -> Result<ExpanderGraph> {
        powered_graph(&mgg_for_bits(self.r)?, self.power)
    }

    pub fn seed_len(&self) -> Result<usize> {
        Ok(self.r + self.t.saturating_sub(1) * self.graph()?.coin_bits())
    }

    /// Clip bound as a row weight.
    pub fn row_locality(&self) -> usize {
        self.clip.floor() as usize
    }

    /// `2^(-k/2 + 1) + (5/6 + lambda)^t`
    pub fn collision_bound(&self) -> f64 {
        2f64.powf(1.0 - 0.5 * self.k as f64) + (5.0 / 6.0 + self.lambda_bound).powi(self.t as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowProvenance {
    pub vertex: String,
    pub weight: usize,
    pub clipped: bool,
}

/// `t x n` GF(2) matrix with rows stored as bitsets.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRowMatrix {
    pub n: usize,
    pub rows: Vec<BitVector>,
    pub provenance: Vec<RowProvenance>,
}

impl SparseRowMatrix {
    pub fn row_indices(&self, i: usize) -> Vec<usize> {
        self.rows[i].ones_iter().collect()
    }

    pub fn max_weight(&self) -> usize {
        self.rows.iter().map(BitVector::weight).max().unwrap_or(0)
    }

    pub fn clipped(&self) -> usize {
        self.provenance.iter().filter(|p| p.clipped).count()
    }

    pub fn apply(&self, x: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        let mut y = BitVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.and(x)?.parity() {
                y.set(i, true);
            }
        }
        Ok(y)
    }

    pub fn to_json(&self, seed: &BitVector) -> Value {
        json!({
            "n": self.n,
            "seed": seed.to_hex(),
            "rows": (0..self.rows.len()).map(|i| self.row_indices(i)).collect::<Vec<_>>(),
            "provenance": self.provenance,
        })
    }
}

/// Seed: start vertex (`r` bits), then the walk coins.
pub fn build_condenser_matrix(seed: &BitVector, p: &CondenserParams) -> Result<SparseRowMatrix> {
    ensure_len(p.seed_len()?, seed.len())?;
    let g = p.graph()?;
    let start = seed.slice(0, p.r)?;
    let coins = seed.slice(p.r, seed.len() - p.r)?;
    let vertices = wide_torus_walk(&g, &start, p.t.saturating_sub(1), &coins)?;
    let mut rows = Vec::with_capacity(p.t);
    let mut provenance = Vec::with_capacity(p.t);
    for v in vertices.iter().take(p.t) {
        let expanded = if p.compressed { nisan_expand_bits(p.nisan_w, p.nisan_k, v)? } else { v.clone() };
        let row = bernoulli_row_fast(&expanded, p.p_num, p.t_bits, p.n);
        let weight = row.weight();
        let clipped = weight as f64 > p.clip;
        provenance.push(RowProvenance { vertex: v.to_hex(), weight, clipped });
        rows.push(if clipped { BitVector::zeros(p.n) } else { row });
    }
    Ok(SparseRowMatrix { n: p.n, rows, provenance })
}

pub fn condense(x: &BitVector, seed: &BitVector, p: &CondenserParams) -> Result<BitVector> {
    build_condenser_matrix(seed, p)?.apply(x)
}

/// A seeded map `{0,1}^n x {0,1}^d -> {0,1}^m` claimed to condense.
#[derive(Clone)]
pub struct CondenserDescriptor {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k_in: f64,
    pub k_out_claim: f64,
    pub eps_claim: f64,
    /// Largest number of source bits any output bit reads.
    pub row_locality: usize,
    pub linear: bool,
    pub tree: ConstructionTree,
    eval: EvalFn,
}

impl fmt::Debug for CondenserDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CondenserDescriptor")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("row_locality", &self.row_locality)
            .finish()
    }
}

impl CondenserDescriptor {
    pub fn evaluate(&self, x: &BitVector, seed: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        ensure_len(self.d, seed.len())?;
        Ok((self.eval)(x, seed))
    }

    pub fn eval_fn(&self) -> EvalFn {
        self.eval.clone()
    }

    pub fn identity(n: usize) -> Self {
        CondenserDescriptor {
            name: "identity".into(),
            n,
            d: 0,
            m: n,
            k_in: 0.0,
            k_out_claim: 0.0,
            eps_claim: 0.0,
            row_locality: 1,
            linear: true,
            tree: ConstructionTree::leaf("identity_condenser", json!({ "n": n })),
            eval: Arc::new(|x, _| x.clone()),
        }
    }

    /// The walk condenser. Claimed output entropy `0.08 k` within
    /// `2^(-k/500000)`.
    pub fn from_params(p: &CondenserParams) -> Result<Self> {
        let q = p.clone();
        Ok(CondenserDescriptor {
            name: "walk_condenser".into(),
            n: p.n,
            d: p.seed_len()?,
            m: p.t,
            k_in: p.k as f64,
            k_out_claim: 0.08 * p.k as f64,
            eps_claim: 2f64.powf(-(p.k as f64) / 500_000.0),
            row_locality: p.row_locality(),
            linear: true,
            tree: ConstructionTree::leaf("walk_condenser", serde_json::to_value(p).expect("params serialize")),
            eval: Arc::new(move |x, u| condense(x, u, &q).expect("lengths checked")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{self, prng};

    #[test]
    fn bernoulli_examples() {
        // p truncates to 0: first digit of b is 0, a 1 digit stops with 0
        let v = BitVector::ones(4 * 3);
        assert!(bernoulli_row(&v, 0, 4, 3).unwrap().is_zero());
        // block 0^t against b_1 = 1: smaller at digit 1
        let v = BitVector::zeros(4);
        assert!(bernoulli_row(&v, 0b1000, 4, 1).unwrap().get(0));
        assert!(bernoulli_row(&BitVector::zeros(7), 1, 4, 2).is_err());
    }

    #[test]
    fn bernoulli_bias_is_exact() {
        for t_bits in 1..=12 {
            for &b in &[0u64, 1, (1 << t_bits) - 1, (1 << t_bits) / 3, (5 << t_bits) / 7] {
                let b = b & ((1 << t_bits) - 1);
                let want = (b + 1) as f64 / (1u64 << t_bits) as f64;
                assert_eq!(bernoulli_bias_exact(b, t_bits), want, "t={t_bits} b={b}");
            }
        }
    }

    #[test]
    fn fast_row_agrees() {
        let mut rng = prng(1);
        for _ in 0..200 {
            let v = BitVector::random(16 * 8, &mut rng);
            let b = rand::Rng::gen_range(&mut rng, 0..256);
            assert_eq!(bernoulli_row(&v, b, 8, 16).unwrap(), bernoulli_row_fast(&v, b, 8, 16));
        }
    }

    #[test]
    fn desk_parameters() {
        let p = CondenserParams::new(64, 16).unwrap();
        assert_eq!((p.t, p.t_bits, p.r0), (160, 12, 768));
        assert_eq!((p.nisan_w, p.nisan_k, p.r), (16, 6, 208));
        assert_eq!(p.power, 38);
        assert!(p.lambda_bound <= 0.01);
        assert!((p.c - 48.0).abs() < 1e-12 && (p.clip - 57.6).abs() < 1e-9);
        assert!((p.bias() - 1.0 / p.l).abs() <= 1.0 / (64.0 * 64.0));
        assert_eq!(p.seed_len().unwrap(), 208 + 159 * 114);
    }

    #[test]
    fn matrix_invariants() {
        let p = CondenserParams::new(64, 16).unwrap();
        let mut rng = prng(2);
        let seed = BitVector::random(p.seed_len().unwrap(), &mut rng);
        let m = build_condenser_matrix(&seed, &p).unwrap();
        assert_eq!(m.rows.len(), 160);
        assert!(m.max_weight() as f64 <= p.clip);
        assert!(m.rows.iter().all(|r| r.len() == 64));
        assert_eq!(condense(&BitVector::zeros(64), &seed, &p).unwrap(), BitVector::zeros(160));
        for _ in 0..20 {
            let (a, b) = (BitVector::random(64, &mut rng), BitVector::random(64, &mut rng));
            let lhs = m.apply(&a.xor(&b).unwrap()).unwrap();
            assert_eq!(lhs, m.apply(&a).unwrap().xor(&m.apply(&b).unwrap()).unwrap());
        }
        // one row: the start vertex through the generator
        let p1 = p.clone().with_rows(1);
        let s1 = BitVector::random(p1.seed_len().unwrap(), &mut rng);
        let m1 = build_condenser_matrix(&s1, &p1).unwrap();
        let row = bernoulli_row(&nisan_expand_bits(16, 6, &s1).unwrap(), p.p_num, 12, 64).unwrap();
        let want = if row.weight() as f64 > p.clip { BitVector::zeros(64) } else { row };
        assert_eq!(m1.rows, vec![want]);
    }

    #[test]
    fn weights_concentrate() {
        let p = CondenserParams::new(64, 16).unwrap();
        let mut rng = prng(3);
        let (mut inside, mut total) = (0usize, 0usize);
        for _ in 0..30 {
            let m = build_condenser_matrix(&BitVector::random(p.seed_len().unwrap(), &mut rng), &p).unwrap();
            for r in &m.provenance {
                total += 1;
                inside += (r.weight as f64 >= 0.8 * p.c && r.weight as f64 <= p.clip) as usize;
            }
        }
        assert!(inside as f64 / total as f64 >= 0.99, "{inside}/{total}");
    }

    #[test]
    fn compressed_and_uncompressed_agree_statistically() {
        let p = CondenserParams::new(16, 12).unwrap();
        let u = p.clone().uncompressed().unwrap();
        assert_eq!(u.r, 128);
        let mut rng = prng(4);
        let mean = |q: &CondenserParams, rng: &mut rand_chacha::ChaCha20Rng| {
            let w: Vec<f64> = (0..40)
                .flat_map(|_| {
                    let m = build_condenser_matrix(&BitVector::random(q.seed_len().unwrap(), rng), q).unwrap();
                    m.provenance.iter().map(|r| r.weight as f64).collect::<Vec<_>>()
                })
                .collect();
            harness::Estimate::mean_of(&w)
        };
        let (a, b) = (mean(&p, &mut rng), mean(&u, &mut rng));
        let expect = 16.0 * p.bias();
        for e in [a, b] {
            assert!((e.value - expect).abs() <= 4.0 * e.sigma + 0.05, "{e:?} vs {expect}");
        }
        assert!(CondenserParams::new(64, 16).unwrap().uncompressed().is_err());
    }

    #[test]
    fn entropy_relation_on_small_source() {
        // H_inf >= H_2 / 2 for the condensed output of an enumerable source
        let p = CondenserParams::new(16, 12).unwrap().with_rows(20);
        let mut rng = prng(5);
        let seed = BitVector::random(p.seed_len().unwrap(), &mut rng);
        let m = build_condenser_matrix(&seed, &p).unwrap();
        let src = harness::random_flat(16, 8, &mut rng).unwrap().support().unwrap();
        let out: Vec<u128> = src.iter().map(|x| m.apply(x).unwrap().to_u128()).collect();
        let d = harness::FiniteDistribution::new(20, out.iter().map(|&o| (o, 1.0 / 256.0))).unwrap();
        assert!(2.0 * harness::min_entropy(&d).unwrap() >= harness::collision_entropy(&d) - 1e-9);
    }
}

#[cfg(test)]
mod properties {
    use proptest::collection::vec;
    use proptest::prelude::*;

    use super::bernoulli_row;
    use crate::bitcore::BitVector;

    proptest! {
        #[test]
        fn bernoulli_row_compares_blocks(v in vec(any::<bool>(), 24), b in 0u64..16) {
            let v = BitVector::from_bools(&v);
            let row = bernoulli_row(&v, b, 4, 6).unwrap();
            for i in 0..6 {
                let s = (0..4).fold(0u64, |acc, j| acc << 1 | v.get(i * 4 + j) as u64);
                prop_assert_eq!(row.get(i), s <= b);
            }
        }
    }
}
