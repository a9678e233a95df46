//! Pairwise-independent strings, leftover hashing, Trevisan's extractor and
//! the common extractor descriptor.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::artifact::ConstructionTree;
use crate::bitcore::{BitVector, GF2Field};
use crate::combinatorics::{build_weak_design, WeakDesign};
use crate::error::{ensure_len, Error, Result};

pub type EvalFn = Arc<dyn Fn(&BitVector, &BitVector) -> BitVector + Send + Sync>;

/// A seeded function `{0,1}^n x {0,1}^d -> {0,1}^m` together with its claimed
/// parameters. `locality_claim == n` marks a dense construction.
#[derive(Clone)]
pub struct ExtractorDescriptor {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k_claim: f64,
    pub eps_claim: f64,
    pub locality_claim: usize,
    /// GF(2)-linear in the source for every fixed seed.
    pub linear: bool,
    /// The trailing `d` output bits are the seed itself.
    pub seed_embedded: bool,
    pub tree: ConstructionTree,
    eval: EvalFn,
}

impl fmt::Debug for ExtractorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtractorDescriptor")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("d", &self.d)
            .field("m", &self.m)
            .field("k_claim", &self.k_claim)
            .field("eps_claim", &self.eps_claim)
            .field("locality_claim", &self.locality_claim)
            .field("linear", &self.linear)
            .finish()
    }
}

impl ExtractorDescriptor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        n: usize,
        d: usize,
        m: usize,
        k_claim: f64,
        eps_claim: f64,
        locality_claim: usize,
        linear: bool,
        tree: ConstructionTree,
        eval: EvalFn,
    ) -> Self {
        ExtractorDescriptor {
            name: name.to_owned(),
            n,
            d,
            m,
            k_claim,
            eps_claim,
            locality_claim,
            linear,
            seed_embedded: false,
            tree,
            eval,
        }
    }

    pub fn evaluate(&self, x: &BitVector, seed: &BitVector) -> Result<BitVector> {
        ensure_len(self.n, x.len())?;
        ensure_len(self.d, seed.len())?;
        Ok((self.eval)(x, seed))
    }

    /// Evaluation without length checks, for hot loops that already checked.
    pub fn eval_unchecked(&self, x: &BitVector, seed: &BitVector) -> BitVector {
        (self.eval)(x, seed)
    }

    pub fn eval_fn(&self) -> EvalFn {
        self.eval.clone()
    }

    /// Same map with the trailing `d` output bits overwritten by the seed.
    pub fn with_seed_embedding(&self) -> Result<ExtractorDescriptor> {
        if self.m < self.d {
            return Err(Error::param(format!(
                "seed embedding needs m >= d, got m={} d={}",
                self.m, self.d
            )));
        }
        let inner = self.eval.clone();
        let (m, d) = (self.m, self.d);
        let mut out = self.clone();
        out.name = format!("{}+embed", self.name);
        out.seed_embedded = true;
        out.linear = self.linear && d == 0;
        out.tree = ConstructionTree::node("seed_embedding", json!({}), vec![self.tree.clone()]);
        out.eval = Arc::new(move |x, s| {
            let mut y = inner(x, s);
            y.write_at(m - d, s);
            y
        });
        Ok(out)
    }
}

impl ExtractorDescriptor {
    /// Output extended by the seed: `Ext(x, u) || u`, `m + d` bits. Equal to
    /// [`ExtractorDescriptor::with_seed_embedding`] applied to `Ext` padded
    /// with `d` extra output bits.
    pub fn with_seed_appended(&self) -> ExtractorDescriptor {
        let inner = self.eval.clone();
        let mut out = self.clone();
        out.name = format!("{}+seed", self.name);
        out.m = self.m + self.d;
        out.seed_embedded = true;
        out.linear = self.linear && self.d == 0;
        out.tree = ConstructionTree::node("seed_appended", json!({}), vec![self.tree.clone()]);
        out.eval = Arc::new(move |x, s| inner(x, s).concat(s));
        out
    }
}

/// Seed of the pairwise-independent string generator: `A, B` in GF(2^l).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseSeed {
    pub l: usize,
    pub a: u64,
    pub b: u64,
}

impl PairwiseSeed {
    /// Reads `A` from the first `l` bits and `B` from the next `l`.
    pub fn from_bits(r: &BitVector, l: usize) -> Result<Self> {
        if l == 0 || l > 64 {
            return Err(Error::param(format!("pairwise string length {l} outside 1..=64")));
        }
        ensure_len(2 * l, r.len())?;
        Ok(PairwiseSeed { l, a: r.slice(0, l)?.to_u64(), b: r.slice(l, l)?.to_u64() })
    }

    pub fn to_bits(&self) -> BitVector {
        BitVector::from_u64(self.a, self.l).concat(&BitVector::from_u64(self.b, self.l))
    }
}

/// `a_i = A xor i*B` for `i < count`, as raw field elements.
pub fn pairwise_values(field: &GF2Field, a: u64, b: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| a ^ field.mul(i, b)).collect()
}

/// `count` strings of length `l`, pairwise independent over a uniform seed.
pub fn pairwise_strings(r: &PairwiseSeed, count: usize) -> Result<Vec<BitVector>> {
    if r.l < 64 && count as u128 > 1u128 << r.l {
        return Err(Error::param(format!("{count} strings need more than 2^{} points", r.l)));
    }
    let field = GF2Field::new(r.l)?;
    Ok(pairwise_values(&field, r.a, r.b, count)
        .into_iter()
        .map(|v| BitVector::from_u64(v, r.l))
        .collect())
}

/// Top `m` bits (indices `n-m..n`) of `u * x` in GF(2^n), `n = |x|`.
pub fn leftover_hash_extract(x: &BitVector, u: &BitVector, m: usize) -> Result<BitVector> {
    ensure_len(x.len(), u.len())?;
    let n = x.len();
    if m > n {
        return Err(Error::param(format!("output {m} exceeds input {n}")));
    }
    let field = GF2Field::new(n)?;
    let p = field.mul_bits(u, x)?;
    p.slice(n - m, m)
}

/// Leftover-hash extractor on `n` bits with explicit output length.
pub fn leftover_hash_descriptor(n: usize, m: usize) -> Result<ExtractorDescriptor> {
    if m > n || n == 0 {
        return Err(Error::param(format!("leftover hash needs 0 < n and m <= n (n={n}, m={m})")));
    }
    let field = GF2Field::new(n)?;
    let tree = ConstructionTree::leaf("leftover_hash", json!({ "n": n, "m": m }));
    let eval: EvalFn = if n <= 64 {
        Arc::new(move |x, u| {
            let p = field.mul(u.to_u64(), x.to_u64());
            BitVector::from_u64(p >> (n - m), m)
        })
    } else {
        Arc::new(move |x, u| {
            let p = field.mul_bits(u, x).expect("lengths checked by descriptor");
            p.slice(n - m, m).expect("in range")
        })
    };
    // Claims are set by the caller through leftover_hash_extractor.
    Ok(ExtractorDescriptor::new("leftover_hash", n, n, m, m as f64, 1.0, n, true, tree, eval))
}

/// Strong `(k, 2^-delta)` extractor with `m = k - 2*delta`.
pub fn leftover_hash_extractor(n: usize, k: usize, delta: usize) -> Result<ExtractorDescriptor> {
    if k < 2 * delta || k > n {
        return Err(Error::param(format!("need 2*delta <= k <= n (n={n}, k={k}, delta={delta})")));
    }
    let mut ext = leftover_hash_descriptor(n, k - 2 * delta)?;
    ext.k_claim = k as f64;
    ext.eps_claim = 2f64.powi(-(delta as i32));
    ext.tree.params = json!({ "n": n, "k": k, "delta": delta, "m": k - 2 * delta });
    Ok(ext)
}

/// Reed–Solomon over GF(2^b), evaluated at every field point, concatenated
/// with the Hadamard code on b-bit symbols. Codeword index: low `b` bits pick
/// the evaluation point, high `b` bits the Hadamard position.
#[derive(Clone, Debug)]
pub struct TrevisanCode {
    pub n: usize,
    pub b: usize,
    pub symbols: usize,
    field: GF2Field,
}

impl TrevisanCode {
    pub fn new(n: usize, b: usize) -> Result<Self> {
        if b == 0 || b > 30 {
            return Err(Error::param(format!("symbol width {b} outside 1..=30")));
        }
        let symbols = n.div_ceil(b).max(1);
        if symbols as u64 > 1u64 << b {
            return Err(Error::param(format!(
                "{symbols} symbols exceed the {} evaluation points",
                1u64 << b
            )));
        }
        Ok(TrevisanCode { n, b, symbols, field: GF2Field::new(b)? })
    }

    /// Smallest symbol width with at least twice as many points as symbols,
    /// so the outer code has relative distance >= 1/2.
    pub fn auto(n: usize) -> Result<Self> {
        let mut b = 1;
        while (1u64 << b) < 2 * n.div_ceil(b) as u64 {
            b += 1;
        }
        TrevisanCode::new(n, b)
    }

    /// log2 of the codeword length.
    pub fn index_bits(&self) -> usize {
        2 * self.b
    }

    pub fn relative_distance(&self) -> f64 {
        0.5 * (1.0 - (self.symbols as f64 - 1.0) / (1u64 << self.b) as f64)
    }

    fn coefficients(&self, x: &BitVector) -> Vec<u64> {
        (0..self.symbols)
            .map(|j| {
                let start = j * self.b;
                let len = self.b.min(self.n.saturating_sub(start));
                if len == 0 {
                    0
                } else {
                    x.slice(start, len).expect("in range").to_u64()
                }
            })
            .collect()
    }

    fn bit_from_coeffs(&self, coeffs: &[u64], index: u64) -> bool {
        let mask = (1u64 << self.b) - 1;
        let point = index & mask;
        let y = (index >> self.b) & mask;
        let mut acc = 0u64;
        for &c in coeffs.iter().rev() {
            acc = self.field.mul(acc, point) ^ c;
        }
        (acc & y).count_ones() & 1 == 1
    }

    pub fn bit(&self, x: &BitVector, index: u64) -> bool {
        self.bit_from_coeffs(&self.coefficients(x), index)
    }

    pub fn encode(&self, x: &BitVector) -> BitVector {
        let len = 1usize << self.index_bits();
        let coeffs = self.coefficients(x);
        let mut out = BitVector::zeros(len);
        for i in 0..len {
            if self.bit_from_coeffs(&coeffs, i as u64) {
                out.set(i, true);
            }
        }
        out
    }
}

/// Output bit `i` is `Enc(x)[seed|S_i]`.
pub fn trevisan_extract(
    x: &BitVector,
    seed: &BitVector,
    wd: &WeakDesign,
    code: &TrevisanCode,
    m: usize,
) -> Result<BitVector> {
    ensure_len(code.n, x.len())?;
    ensure_len(wd.universe, seed.len())?;
    if wd.set_size != code.index_bits() {
        return Err(Error::param(format!(
            "design sets of size {} do not index a codeword of 2^{} bits",
            wd.set_size,
            code.index_bits()
        )));
    }
    if wd.sets.len() < m {
        return Err(Error::param(format!("design has {} sets, need {m}", wd.sets.len())));
    }
    let coeffs = code.coefficients(x);
    let mut out = BitVector::zeros(m);
    for (i, set) in wd.sets.iter().take(m).enumerate() {
        let mut idx = 0u64;
        for (j, &p) in set.iter().enumerate() {
            if seed.get(p) {
                idx |= 1 << j;
            }
        }
        if code.bit_from_coeffs(&coeffs, idx) {
            out.set(i, true);
        }
    }
    Ok(out)
}

/// Trevisan extractor on `n` bits with `m` outputs, design overlap `kappa`.
pub fn trevisan_extractor(
    n: usize,
    m: usize,
    kappa: f64,
    symbol_bits: Option<usize>,
) -> Result<ExtractorDescriptor> {
    let code = match symbol_bits {
        Some(b) => TrevisanCode::new(n, b)?,
        None => TrevisanCode::auto(n)?,
    };
    let wd = build_weak_design(m, kappa, code.index_bits())?;
    let d = wd.universe;
    let tree = ConstructionTree::leaf(
        "trevisan",
        json!({ "n": n, "m": m, "kappa": kappa, "symbol_bits": code.b, "d": d }),
    );
    let eval: EvalFn = {
        let code = code.clone();
        let wd = wd.clone();
        Arc::new(move |x, s| trevisan_extract(x, s, &wd, &code, m).expect("lengths checked"))
    };
    // No error claim (1.0): the error is measured, not asserted.
    Ok(ExtractorDescriptor::new(
        "trevisan",
        n,
        d,
        m,
        m as f64 + kappa.log2(),
        1.0,
        n,
        true,
        tree,
        eval,
    ))
}

/// `Ext(v, u) =` first `m` bits of `a_u` where `v = (A, B)` seeds the
/// pairwise generator over GF(2^l) and `u` is a `d`-bit index. Linear in `v`
/// for fixed `u`; over uniform `v` the values at distinct `u` are pairwise
/// independent, so this is an averaging sampler.
pub fn pairwise_sampler_extractor(l: usize, d: usize, m: usize) -> Result<ExtractorDescriptor> {
    if d > l || m > l || l > 64 {
        return Err(Error::param(format!("need d <= l, m <= l <= 64 (l={l}, d={d}, m={m})")));
    }
    let field = GF2Field::new(l)?;
    let tree = ConstructionTree::leaf("pairwise_sampler", json!({ "l": l, "d": d, "m": m }));
    let eval: EvalFn = Arc::new(move |v, u| {
        let a = v.slice(0, l).expect("len").to_u64();
        let b = v.slice(l, l).expect("len").to_u64();
        let val = a ^ field.mul(u.to_u64(), b);
        BitVector::from_u64(val, m)
    });
    Ok(ExtractorDescriptor::new(
        "pairwise_sampler",
        2 * l,
        d,
        m,
        2.0 * l as f64,
        1.0,
        l + 1,
        true,
        tree,
        eval,
    ))
}


#[cfg(test)]
mod properties {
    use proptest::collection::vec;
    use proptest::prelude::*;

    use super::leftover_hash_extract;
    use crate::bitcore::BitVector;

    proptest! {
        #[test]
        fn leftover_hash_is_linear_in_input(
            (x1, x2) in (2usize..40).prop_flat_map(|n| (vec(any::<bool>(), n), vec(any::<bool>(), n))),
            salt in any::<u64>(),
            m in 1usize..8,
        ) {
            let (x1, x2) = (BitVector::from_bools(&x1), BitVector::from_bools(&x2));
            let n = x1.len();
            let u = BitVector::from_u64(salt, 64).resized(n);
            let m = m.min(n);
            let lhs = leftover_hash_extract(&x1.xor(&x2).unwrap(), &u, m).unwrap();
            let rhs = leftover_hash_extract(&x1, &u, m).unwrap().xor(&leftover_hash_extract(&x2, &u, m).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
