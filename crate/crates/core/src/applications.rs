//! Generators built from the extractors: random local functions, their
//! parallel repetition, a generator from an unpredictable local function,
//! and the Nisan-Zuckerman iteration.
//!
//! Nothing here is claimed to be cryptographically secure; the generators
//! are only smoke-tested statistically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitcore::BitVector;
use crate::error::{ensure_len, Error, Result};
use crate::primitives::ExtractorDescriptor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub n: usize,
    /// Ordered `d`-tuples; repeated indices are allowed.
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(n: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(&index) = edges.iter().flatten().find(|&&i| i >= n) {
            return Err(Error::OutOfRange { index, len: n });
        }
        if edges.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::param("hyperedges must share one arity"));
        }
        Ok(Hypergraph { n, edges })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, d: usize, rng: &mut R) -> Result<Self> {
        if n == 0 && d > 0 {
            return Err(Error::param("no vertices to choose from"));
        }
        let edges = (0..m).map(|_| (0..d).map(|_| rng.gen_range(0..n)).collect()).collect();
        Hypergraph::new(n, edges)
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn arity(&self) -> usize {
        self.edges.first().map_or(0, Vec::len)
    }
}

/// Truth table indexed by the selected bits, first index least significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub d: usize,
    pub table: Vec<bool>,
}

impl Predicate {
    pub fn new(d: usize, table: Vec<bool>) -> Result<Self> {
        if d > 20 {
            return Err(Error::param("predicate arity above 20"));
        }
        ensure_len(1 << d, table.len())?;
        Ok(Predicate { d, table })
    }

    pub fn from_fn(d: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        Predicate::new(d, (0..1u32 << d).map(f).collect())
    }

    pub fn constant(d: usize, v: bool) -> Self {
        Predicate { d, table: vec![v; 1 << d] }
    }

    pub fn xor(d: usize) -> Self {
        Predicate::from_fn(d, |a| a.count_ones() & 1 == 1).expect("small arity")
    }

    /// `x_0 + x_1 + x_2 + x_3 x_4`, a standard choice for local generators.
    pub fn xor_and() -> Self {
        Predicate::from_fn(5, |a| ((a ^ a >> 1 ^ a >> 2) & 1 == 1) ^ (a >> 3 & a >> 4 & 1 == 1)).expect("arity 5")
    }

    pub fn eval(&self, pattern: usize) -> bool {
        self.table[pattern]
    }
}

pub fn rlf_eval(g: &Hypergraph, q: &Predicate, x: &BitVector) -> Result<BitVector> {
    ensure_len(g.n, x.len())?;
    if g.m() > 0 && g.arity() != q.d {
        return Err(Error::param(format!("hyperedge arity {} but predicate arity {}", g.arity(), q.d)));
    }
    let mut out = BitVector::zeros(g.m());
    for (i, e) in g.edges.iter().enumerate() {
        let pat = e.iter().enumerate().fold(0usize, |acc, (j, &v)| acc | (x.get(v) as usize) << j);
        out.set(i, q.eval(pat));
    }
    Ok(out)
}

/// The same local function on each block, concatenated.
pub fn parallel_rlf(g: &Hypergraph, q: &Predicate, xs: &[BitVector]) -> Result<BitVector> {
    let outs = xs.iter().map(|x| rlf_eval(g, q, x)).collect::<Result<Vec<_>>>()?;
    Ok(BitVector::concat_all(&outs))
}

/// Row `i` of `Y` is `f_{G_i,q}(x_i)`; column `j` is extracted with `u_j`.
pub fn ug_to_prg(
    graphs: &[Hypergraph],
    q: &Predicate,
    seeds: &[BitVector],
    xs: &[BitVector],
    ext: &ExtractorDescriptor,
) -> Result<BitVector> {
    ensure_len(graphs.len(), xs.len())?;
    ensure_len(ext.n, graphs.len())?;
    let Some(m) = graphs.first().map(Hypergraph::m) else {
        return Err(Error::param("no rows"));
    };
    if graphs.iter().any(|g| g.m() != m) {
        return Err(Error::param("rows of different length"));
    }
    ensure_len(m, seeds.len())?;
    let rows = graphs.iter().zip(xs).map(|(g, x)| rlf_eval(g, q, x)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(m);
    for (j, u) in seeds.iter().enumerate() {
        let col = BitVector::from_bools(&rows.iter().map(|r| r.get(j)).collect::<Vec<_>>());
        out.push(ext.evaluate(&col, u)?);
    }
    Ok(BitVector::concat_all(&out))
}

pub fn nz_seed_len(ext: &ExtractorDescriptor, rounds: usize) -> usize {
    ext.n + rounds * ext.d
}

/// Seed = long block `x` (ext.n bits) then `rounds` short seeds; output is
/// `Ext(x, u_1) || ... || Ext(x, u_rounds)`. The long block is never
/// modified between rounds.
pub fn nz_prg(seed: &BitVector, ext: &ExtractorDescriptor, rounds: usize) -> Result<BitVector> {
    if rounds == 0 {
        return Err(Error::param("at least one round"));
    }
    let need = nz_seed_len(ext, rounds);
    if seed.len() < need {
        return Err(Error::Budget(format!("seed has {} bits, {rounds} rounds need {need}", seed.len())));
    }
    ensure_len(need, seed.len())?;
    let x = seed.slice(0, ext.n)?;
    let outs = (0..rounds)
        .map(|r| ext.evaluate(&x, &seed.slice(ext.n + r * ext.d, ext.d)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(BitVector::concat_all(&outs))
}
