//! Nisan's generator for space-bounded computation, and an exact
//! distinguisher for read-once branching programs.
//!
//! Seed layout (LSB first): `x` (w bits), then `A_1, B_1, ..., A_k, B_k`.
//! `G_0(x) = x` and `G_j(x) = G_{j-1}(x) ++ G_{j-1}(h_j(x))` with
//! `h_j(x) = A_j + x * B_j` in GF(2^w).

use rand::seq::index::sample;
use rand::Rng;

use crate::bitcore::{BitVector, GF2Field};
use crate::error::{Error, Result};

/// Largest number of seeds enumerated by the brute-force path.
pub const BRUTE_FORCE_SEEDS: u64 = 1 << 20;
/// Work cap for the segment-table method, in table compositions.
pub const EXACT_WORK_CAP: u64 = 1 << 34;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NisanSeed {
    pub w: usize,
    pub x: u64,
    /// `(A_j, B_j)` for j = 1..k.
    pub hashes: Vec<(u64, u64)>,
}

pub fn seed_len(w: usize, k: usize) -> usize {
    w * (2 * k + 1)
}

/// Smallest power of two `>= space` (the block width for a given space bound).
pub fn block_width_for_space(space: usize) -> usize {
    space.max(1).next_power_of_two()
}

impl NisanSeed {
    pub fn k(&self) -> usize {
        self.hashes.len()
    }

    pub fn from_bits(w: usize, k: usize, bits: &BitVector) -> Result<Self> {
        if w == 0 || w > 64 {
            return Err(Error::param(format!("block width {w} outside 1..=64")));
        }
        crate::error::ensure_len(bits.len(), seed_len(w, k))?;
        let word = |i: usize| bits.slice(i * w, w).map(|b| b.to_u64());
        let x = word(0)?;
        let hashes = (0..k).map(|j| Ok((word(1 + 2 * j)?, word(2 + 2 * j)?))).collect::<Result<_>>()?;
        Ok(NisanSeed { w, x, hashes })
    }

    pub fn to_bits(&self) -> BitVector {
        let mut words = vec![self.x];
        for &(a, b) in &self.hashes {
            words.push(a);
            words.push(b);
        }
        BitVector::concat_all(words.iter().map(|&v| BitVector::from_u64(v, self.w)).collect::<Vec<_>>().iter())
    }
}

/// Output blocks `G_k(x)`, each a w-bit word.
pub fn nisan_blocks(seed: &NisanSeed) -> Result<Vec<u64>> {
    let field = GF2Field::new(seed.w)?;
    let mut blocks = Vec::with_capacity(1 << seed.k());
    expand_into(&field, &seed.hashes, seed.x, &mut blocks);
    Ok(blocks)
}

fn expand_into(field: &GF2Field, hashes: &[(u64, u64)], x: u64, out: &mut Vec<u64>) {
    match hashes.split_last() {
        None => out.push(x),
        Some((&(a, b), lower)) => {
            expand_into(field, lower, x, out);
            expand_into(field, lower, a ^ field.mul(x, b), out);
        }
    }
}

/// `w * 2^k` pseudorandom bits.
pub fn nisan_expand(seed: &NisanSeed) -> Result<BitVector> {
    let blocks = nisan_blocks(seed)?;
    let mut out = BitVector::zeros(seed.w * blocks.len());
    for (i, &b) in blocks.iter().enumerate() {
        out.write_at(i * seed.w, &BitVector::from_u64(b, seed.w));
    }
    Ok(out)
}

pub fn nisan_expand_bits(w: usize, k: usize, bits: &BitVector) -> Result<BitVector> {
    nisan_expand(&NisanSeed::from_bits(w, k, bits)?)
}

/// Read-once branching program over an input of `input_len` bits. Layer
/// `i` reads bit `positions[i]`; positions strictly increase, so the
/// program scans its input as a stream. Start state is 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Robp {
    pub width: usize,
    pub input_len: usize,
    pub positions: Vec<usize>,
    /// `trans[i][state][bit]`
    pub trans: Vec<Vec<[u8; 2]>>,
    pub accept: Vec<bool>,
}

impl Robp {
    pub fn new(
        width: usize,
        input_len: usize,
        positions: Vec<usize>,
        trans: Vec<Vec<[u8; 2]>>,
        accept: Vec<bool>,
    ) -> Result<Self> {
        if width == 0 || width > 16 {
            return Err(Error::param("program width must be in 1..=16"));
        }
        if positions.windows(2).any(|p| p[0] >= p[1]) || positions.last().is_some_and(|&p| p >= input_len) {
            return Err(Error::param("positions must increase and lie inside the input"));
        }
        if trans.len() != positions.len()
            || trans.iter().any(|t| t.len() != width || t.iter().any(|e| e.iter().any(|&s| s as usize >= width)))
            || accept.len() != width
        {
            return Err(Error::param("transition table does not match program shape"));
        }
        Ok(Robp { width, input_len, positions, trans, accept })
    }

    pub fn random<R: Rng + ?Sized>(width: usize, length: usize, input_len: usize, rng: &mut R) -> Result<Self> {
        if length > input_len {
            return Err(Error::param("program longer than its input"));
        }
        let mut positions: Vec<usize> = sample(rng, input_len, length).into_vec();
        positions.sort_unstable();
        let trans = (0..length)
            .map(|_| (0..width).map(|_| [rng.gen_range(0..width) as u8, rng.gen_range(0..width) as u8]).collect())
            .collect();
        let accept = (0..width).map(|_| rng.gen()).collect();
        Robp::new(width, input_len, positions, trans, accept)
    }

    pub fn constant(input_len: usize, accept: bool) -> Self {
        Robp { width: 1, input_len, positions: vec![], trans: vec![], accept: vec![accept] }
    }

    /// Accepts iff the XOR of all input bits is 1.
    pub fn parity(input_len: usize) -> Self {
        Robp {
            width: 2,
            input_len,
            positions: (0..input_len).collect(),
            trans: vec![vec![[0, 1], [1, 0]]; input_len],
            accept: vec![false, true],
        }
    }

    pub fn accepts(&self, input: &BitVector) -> bool {
        let mut s = 0usize;
        for (i, &p) in self.positions.iter().enumerate() {
            s = self.trans[i][s][input.get(p) as usize] as usize;
        }
        self.accept[s]
    }

    /// Exact acceptance probability on uniform input.
    pub fn uniform_acceptance(&self) -> f64 {
        let mut dist = vec![0.0; self.width];
        dist[0] = 1.0;
        for layer in &self.trans {
            let mut next = vec![0.0; self.width];
            for (s, &p) in dist.iter().enumerate() {
                next[layer[s][0] as usize] += 0.5 * p;
                next[layer[s][1] as usize] += 0.5 * p;
            }
            dist = next;
        }
        dist.iter().zip(&self.accept).filter(|(_, &a)| a).map(|(p, _)| p).sum()
    }

    /// State map of the layers whose positions fall in `[lo, lo + w)`,
    /// given that window's value; packed 4 bits per state.
    fn block_map(&self, lo: usize, w: usize, value: u64) -> u64 {
        let mut out = 0u64;
        for s0 in 0..self.width {
            let mut s = s0;
            for (i, &p) in self.positions.iter().enumerate() {
                if p >= lo && p < lo + w {
                    s = self.trans[i][s][(value >> (p - lo) & 1) as usize] as usize;
                }
            }
            out |= (s as u64) << (4 * s0);
        }
        out
    }
}

#[inline]
fn apply(f: u64, s: usize) -> usize {
    (f >> (4 * s) & 0xf) as usize
}

/// `f` then `g`.
#[inline]
fn compose(f: u64, g: u64, width: usize) -> u64 {
    let mut out = 0;
    for s in 0..width {
        out |= (apply(g, apply(f, s)) as u64) << (4 * s);
    }
    out
}

/// Exact `Pr_seed[P(G(seed)) = 1]` by enumerating every seed.
pub fn prg_acceptance_brute(w: usize, k: usize, prog: &Robp) -> Result<f64> {
    let bits = seed_len(w, k);
    if bits >= 64 || 1u64 << bits > BRUTE_FORCE_SEEDS {
        return Err(Error::Budget(format!("{bits}-bit seed exceeds brute-force enumeration cap")));
    }
    let mut hits = 0u64;
    for s in 0..1u64 << bits {
        let out = nisan_expand_bits(w, k, &BitVector::from_u64(s, bits))?;
        hits += prog.accepts(&out) as u64;
    }
    Ok(hits as f64 / (1u64 << bits) as f64)
}

/// Exact `Pr_seed[P(G(seed)) = 1]` via per-segment transition tables.
/// Level-j tables map a segment's input value to the program's state map
/// over that segment; enumerating `h_1, ..., h_k` in turn costs about
/// `2^{2wk + w}` compositions instead of one program run per seed.
pub fn prg_acceptance_exact(w: usize, k: usize, prog: &Robp) -> Result<f64> {
    if prog.input_len != w << k {
        return Err(Error::LengthMismatch { expected: w << k, got: prog.input_len });
    }
    let work = (2 * w * k + w) as u32;
    if w > 16 || work >= 63 || 1u64 << work > EXACT_WORK_CAP {
        return Err(Error::Budget(format!("exact distinguisher needs 2^{work} compositions")));
    }
    let field = GF2Field::new(w)?;
    let q = 1usize << w;
    let h: Vec<Vec<u64>> = (0..q).map(|b| (0..q as u64).map(|y| field.mul(y, b as u64)).collect()).collect();
    let level0: Vec<Vec<u64>> =
        (0..1usize << k).map(|blk| (0..q as u64).map(|v| prog.block_map(blk * w, w, v)).collect()).collect();
    let mut hits = 0u64;
    descend(prog, &h, &level0, q, &mut hits);
    let total = (q as f64).powi(2 * k as i32 + 1);
    Ok(hits as f64 / total)
}

fn descend(prog: &Robp, h: &[Vec<u64>], tables: &[Vec<u64>], q: usize, hits: &mut u64) {
    if tables.len() == 1 {
        *hits += tables[0].iter().filter(|&&f| prog.accept[apply(f, 0)]).count() as u64;
        return;
    }
    let mut next = vec![vec![0u64; q]; tables.len() / 2];
    for a in 0..q as u64 {
        for hb in h {
            for (s, seg) in next.iter_mut().enumerate() {
                let (left, right) = (&tables[2 * s], &tables[2 * s + 1]);
                for (y, slot) in seg.iter_mut().enumerate() {
                    *slot = compose(left[y], right[(a ^ hb[y]) as usize], prog.width);
                }
            }
            descend(prog, h, &next, q, hits);
        }
    }
}

/// `|Pr[P(G(U))] - Pr[P(U)]|`, computed exactly.
pub fn robp_distinguish(w: usize, k: usize, prog: &Robp) -> Result<f64> {
    let prg = match prg_acceptance_exact(w, k, prog) {
        Ok(p) => p,
        Err(Error::Budget(_)) => prg_acceptance_brute(w, k, prog)?,
        Err(e) => return Err(e),
    };
    Ok((prg - prog.uniform_acceptance()).abs())
}
