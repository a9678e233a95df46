//! Extractor combinators: block and parallel extraction, error reduction,
//! output boosting and condense-then-extract.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::artifact::ConstructionTree;
use crate::bitcore::BitVector;
use crate::condenser::CondenserDescriptor;
use crate::error::{ensure_len, Error, Result};
use crate::primitives::{EvalFn, ExtractorDescriptor};
use crate::samplers::{sample_source, SamplerDescriptor};

/// `Ext_1(X_1, u) || ... || Ext_b(X_b, u)` with one shared seed.
pub fn block_extract(blocks: &[BitVector], seed: &BitVector, exts: &[ExtractorDescriptor]) -> Result<BitVector> {
    if blocks.len() != exts.len() || blocks.is_empty() {
        return Err(Error::param(format!("{} blocks for {} extractors", blocks.len(), exts.len())));
    }
    let mut parts = Vec::with_capacity(blocks.len());
    for (x, e) in blocks.iter().zip(exts) {
        parts.push(e.evaluate(x, seed)?);
    }
    Ok(BitVector::concat_all(&parts))
}

/// `Ext(x, u_1) || ... || Ext(x, u_t)`.
pub fn parallel_extract(x: &BitVector, seeds: &[BitVector], ext: &ExtractorDescriptor) -> Result<BitVector> {
    let parts: Vec<BitVector> = seeds.iter().map(|u| ext.evaluate(x, u)).collect::<Result<_>>()?;
    Ok(BitVector::concat_all(&parts))
}

/// `t` independent-seed copies of `ext` as one extractor. With `ext` a
/// `(k - t m - s, eps)` extractor the result is a `(k, t (eps + 2^-s))`
/// extractor; `ext.eps_claim` is taken as that `eps`.
pub fn parallel_descriptor(ext: &ExtractorDescriptor, t: usize, s: f64) -> Result<ExtractorDescriptor> {
    if t == 0 {
        return Err(Error::param("need at least one copy"));
    }
    let (d, inner) = (ext.d, ext.eval_fn());
    let eval: EvalFn = Arc::new(move |x, u| {
        let parts: Vec<BitVector> = (0..t).map(|i| inner(x, &u.slice(i * d, d).expect("len"))).collect();
        BitVector::concat_all(&parts)
    });
    let k = ext.k_claim + (t * ext.m) as f64 + s;
    Ok(ExtractorDescriptor::new(
        &format!("parallel{t}({})", ext.name),
        ext.n,
        t * d,
        t * ext.m,
        k,
        (t as f64 * (ext.eps_claim + 2f64.powf(-s))).min(1.0),
        ext.locality_claim,
        ext.linear,
        ConstructionTree::node("parallel", json!({ "t": t, "s": s }), vec![ext.tree.clone()]),
        eval,
    ))
}

/// Repetition, chunking and XOR around two inner extractors.
#[derive(Clone, Debug)]
pub struct ErrorReductionParams {
    pub t1: usize,
    pub t2: usize,
    pub delta1: f64,
    pub inner0: ExtractorDescriptor,
    pub inner1: ExtractorDescriptor,
}

impl ErrorReductionParams {
    pub fn new(
        t1: usize,
        t2: usize,
        delta1: f64,
        inner0: ExtractorDescriptor,
        inner1: ExtractorDescriptor,
    ) -> Result<Self> {
        if t1 == 0 || t2 == 0 {
            return Err(Error::param("t1 and t2 must be positive"));
        }
        if t2 * inner1.n > inner0.m {
            return Err(Error::param(format!(
                "{t2} chunks of {} bits exceed the {} bits of the first extractor",
                inner1.n, inner0.m
            )));
        }
        Ok(ErrorReductionParams { t1, t2, delta1, inner0, inner1 })
    }

    /// `t2 = floor(m0^(1/3))`, at least 1, with `inner1` on `m0 / t2` bits.
    pub fn default_t2(m0: usize) -> usize {
        let mut t = (m0 as f64).cbrt().floor() as usize;
        while (t + 1).pow(3) <= m0 {
            t += 1;
        }
        while t > 1 && t.pow(3) > m0 {
            t -= 1;
        }
        t.max(1)
    }

    pub fn n1(&self) -> usize {
        self.inner1.n
    }

    /// Trailing bits of each `Y_i` that no chunk reads.
    pub fn dropped_bits(&self) -> usize {
        self.inner0.m - self.t2 * self.inner1.n
    }

    pub fn seed_len(&self) -> usize {
        self.t1 * (self.inner0.d + self.inner1.d)
    }

    pub fn output_len(&self) -> usize {
        self.t2 * self.inner1.m
    }

    /// `(2 eps0)^t1 + 2^-delta1 + eps' + (eps0' + eps1) t2` with the chain
    /// rule slacks `eps'` and `eps0'` passed explicitly.
    pub fn claimed_error(&self, eps0: f64, eps1: f64, slack: f64, slack0: f64) -> f64 {
        ((2.0 * eps0).powi(self.t1 as i32) + 2f64.powf(-self.delta1) + slack + (slack0 + eps1) * self.t2 as f64)
            .min(1.0)
    }
}

/// Smallest `t1` with `(2 eps0)^t1 <= 0.1 eps`; `None` when `eps >= eps0`
/// (use the first extractor alone) or when `2 eps0 >= 1`.
pub fn choose_t1(eps0: f64, eps: f64) -> Option<usize> {
    if eps >= eps0 || 2.0 * eps0 >= 1.0 || eps <= 0.0 {
        return None;
    }
    let t = ((0.1 * eps).ln() / (2.0 * eps0).ln()).ceil().max(1.0) as usize;
    Some(t)
}

/// `Z_i` for one copy: `Y = Ext_0(x, r)` cut into `t2` chunks, each chunk
/// extracted with `s`.
pub fn copy_output(x: &BitVector, r: &BitVector, s: &BitVector, p: &ErrorReductionParams) -> Result<BitVector> {
    let y = p.inner0.evaluate(x, r)?;
    let n1 = p.n1();
    let parts: Vec<BitVector> =
        (0..p.t2).map(|j| p.inner1.evaluate(&y.slice(j * n1, n1)?, s)).collect::<Result<_>>()?;
    Ok(BitVector::concat_all(&parts))
}

/// Seed bundle: `R_1 .. R_t1` then `S_1 .. S_t1`. Output `XOR_i Z_i`.
pub fn error_reduce(x: &BitVector, bundle: &BitVector, p: &ErrorReductionParams) -> Result<BitVector> {
    ensure_len(p.seed_len(), bundle.len())?;
    let (d0, d1) = (p.inner0.d, p.inner1.d);
    let mut z = BitVector::zeros(p.output_len());
    for i in 0..p.t1 {
        let r = bundle.slice(i * d0, d0)?;
        let s = bundle.slice(p.t1 * d0 + i * d1, d1)?;
        z.xor_assign(&copy_output(x, &r, &s, p)?);
    }
    Ok(z)
}

/// The combinator as a descriptor. The same code path serves every choice
/// of `inner1`; only the claimed error changes with it.
pub fn error_reduction_descriptor(p: &ErrorReductionParams, eps0: f64, eps1: f64) -> ExtractorDescriptor {
    let q = p.clone();
    let eval: EvalFn = Arc::new(move |x, u| error_reduce(x, u, &q).expect("lengths checked"));
    let loc = (p.t1 * p.inner0.locality_claim * p.inner1.locality_claim).min(p.inner0.n);
    ExtractorDescriptor::new(
        "error_reduction",
        p.inner0.n,
        p.seed_len(),
        p.output_len(),
        p.inner0.k_claim + p.delta1,
        p.claimed_error(eps0, eps1, 0.0, 0.0),
        loc,
        p.inner0.linear && p.inner1.linear,
        ConstructionTree::node(
            "error_reduction",
            json!({ "t1": p.t1, "t2": p.t2, "delta1": p.delta1, "dropped_bits": p.dropped_bits() }),
            vec![p.inner0.tree.clone(), p.inner1.tree.clone()],
        ),
        eval,
    )
}

/// Target error `eps`: the first extractor alone if `eps >= eps0`,
/// otherwise the combinator with `t1` from [`choose_t1`].
pub fn reduce_to(
    eps: f64,
    eps0: f64,
    eps1: f64,
    t2: usize,
    delta1: f64,
    inner0: ExtractorDescriptor,
    inner1: ExtractorDescriptor,
) -> Result<ExtractorDescriptor> {
    match choose_t1(eps0, eps) {
        None if eps >= eps0 => Ok(inner0),
        None => Err(Error::Infeasible(format!("eps0 = {eps0} leaves nothing to amplify"))),
        Some(t1) => {
            let p = ErrorReductionParams::new(t1, t2, delta1, inner0, inner1)?;
            Ok(error_reduction_descriptor(&p, eps0, eps1))
        }
    }
}

/// Subspaces of `GF(2)^m`, each as (span bitmask over the `2^m` points,
/// basis).
pub fn subspaces(m: usize) -> Vec<(u64, Vec<u32>)> {
    assert!(m <= 6, "subspace enumeration is limited to m <= 6");
    let mut out: Vec<(u64, Vec<u32>)> = vec![(1, vec![])];
    let mut seen: std::collections::HashSet<u64> = [1u64].into();
    let mut i = 0;
    while i < out.len() {
        let (mask, basis) = out[i].clone();
        for v in 1..1u32 << m {
            if mask >> v & 1 == 1 {
                continue;
            }
            let mut span = mask;
            for p in 0..1u32 << m {
                if mask >> p & 1 == 1 {
                    span |= 1 << (p ^ v);
                }
            }
            if seen.insert(span) {
                let mut b = basis.clone();
                b.push(v);
                out.push((span, b));
            }
        }
        i += 1;
    }
    out
}

/// Exact `SD((seed, Z), uniform)` when `Z = XOR` of `t1 in {1, 2}`
/// independent copies of a map that is GF(2)-linear in `x`, on the affine
/// source `offset + span(basis)`. `copy(x, c)` evaluates one copy under copy
/// seed `c` (`c_bits` bits); the output has `m <= 5` bits.
///
/// Writing `K` for the left kernel of the output map restricted to the
/// source, the error is `1 - E[2^-dim K]`. `Pr[K contains U]` for each
/// subspace `U` is a collision probability over copy seeds, and Moebius
/// inversion on the subspace lattice recovers the law of `K`.
pub fn xor_copies_affine_error(
    basis: &[BitVector],
    c_bits: usize,
    m: usize,
    t1: usize,
    copy: &dyn Fn(&BitVector, &BitVector) -> BitVector,
) -> Result<f64> {
    if !(1..=2).contains(&t1) || m > 5 || c_bits > 24 || basis.len() > 25 {
        return Err(Error::Budget(format!("exact XOR calculator outside t1<=2, m<=5, 2^{c_bits} copy seeds")));
    }
    let dim = basis.len();
    // cols[c][j] = copy(basis_j, c) as an m-bit word
    let cols: Vec<Vec<u32>> = (0..1u64 << c_bits)
        .map(|c| {
            let cb = BitVector::from_u64(c, c_bits);
            basis.iter().map(|v| copy(v, &cb).to_u64() as u32).collect()
        })
        .collect();
    let subs = subspaces(m);
    let weight = 1.0 / (1u64 << c_bits) as f64;
    let mut contains: Vec<f64> = Vec::with_capacity(subs.len());
    let mut counts: HashMap<u128, f64> = HashMap::new();
    for (_, ub) in &subs {
        counts.clear();
        for c in &cols {
            let mut key = 0u128;
            for (l, &y) in ub.iter().enumerate() {
                for (j, &col) in c.iter().enumerate() {
                    if (y & col).count_ones() & 1 == 1 {
                        key |= 1 << (l * dim + j);
                    }
                }
            }
            *counts.entry(key).or_insert(0.0) += weight;
        }
        contains.push(if t1 == 2 {
            counts.values().map(|p| p * p).sum()
        } else {
            counts.get(&0).copied().unwrap_or(0.0)
        });
    }
    let mut expect = 0.0;
    for (wmask, wb) in &subs {
        let mut exact = 0.0;
        for (u, (umask, ub)) in subs.iter().enumerate() {
            if umask & wmask == *wmask {
                let j = (ub.len() - wb.len()) as i32;
                let mu = if j % 2 == 0 { 1.0 } else { -1.0 } * 2f64.powi(j * (j - 1) / 2);
                exact += mu * contains[u];
            }
        }
        expect += 2f64.powi(-(wb.len() as i32)) * exact;
    }
    Ok((1.0 - expect).max(0.0))
}

/// `XOR` convolution of two tables over `GF(2)^m`.
pub fn xor_convolve(p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    if p.len() != q.len() || !p.len().is_power_of_two() {
        return Err(Error::param("tables must share a power-of-two length"));
    }
    let mut out = vec![0.0; p.len()];
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (b, &qb) in q.iter().enumerate() {
            out[a ^ b] += pa * qb;
        }
    }
    Ok(out)
}

pub fn table_sd_from_uniform(p: &[f64]) -> f64 {
    let u = 1.0 / p.len() as f64;
    0.5 * p.iter().map(|q| (q - u).abs()).sum::<f64>()
}

/// SD from uniform of the sum of independent variables with these tables.
pub fn xor_law_sd(tables: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = tables.first() else {
        return Err(Error::param("no distributions"));
    };
    let mut acc = first.clone();
    for t in &tables[1..] {
        acc = xor_convolve(&acc, t)?;
    }
    Ok(table_sd_from_uniform(&acc))
}

/// Shapes of crafted distributions at an exact distance from uniform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CraftedShape {
    /// Extra mass `eps` on 0, removed evenly from the rest.
    Point,
    /// Mass `1/2 + eps` on the hyperplane `y_0 = 0`.
    Halfspace,
    /// Extra mass on a 2-dimensional subspace, removed evenly elsewhere.
    Plane,
}

pub fn crafted_distribution(m: usize, eps: f64, shape: CraftedShape) -> Result<Vec<f64>> {
    let n = 1usize << m;
    let u = 1.0 / n as f64;
    let heavy: Vec<usize> = match shape {
        CraftedShape::Point => vec![0],
        CraftedShape::Halfspace => (0..n).filter(|v| v & 1 == 0).collect(),
        CraftedShape::Plane if m >= 2 => vec![0, 1, 2, 3],
        CraftedShape::Plane => return Err(Error::param("plane needs m >= 2")),
    };
    let light = n - heavy.len();
    let (up, down) = (eps / heavy.len() as f64, eps / light as f64);
    if down > u || eps < 0.0 {
        return Err(Error::param(format!("distance {eps} not reachable with shape {shape:?}")));
    }
    let mut t = vec![u - down; n];
    for h in heavy {
        t[h] = u + up;
    }
    Ok(t)
}

/// Chunking schedule and inner extractor of the output booster.
#[derive(Clone, Debug)]
pub struct BoostParams {
    pub t: usize,
    pub sampler: SamplerDescriptor,
    pub inner: ExtractorDescriptor,
    pub d0: usize,
    /// Fan-out cap of `Ext'`: `floor(0.9 (delta/t - 3 tau) m_s / m0)`.
    pub cap: usize,
    pub delta: f64,
    pub tau: f64,
}

impl BoostParams {
    /// `tau = delta / (4 t)`, so that `delta/t - 3 tau = delta / (4 t) > 0`.
    pub fn new(t: usize, sampler: SamplerDescriptor, inner: ExtractorDescriptor, delta: f64) -> Result<Self> {
        if t == 0 || inner.n != sampler.count {
            return Err(Error::param(format!(
                "inner extractor reads {} bits, sampler gives {}",
                inner.n, sampler.count
            )));
        }
        if inner.d == 0 || inner.m == 0 {
            return Err(Error::param("inner extractor needs seed and output bits"));
        }
        let tau = delta / (4.0 * t as f64);
        let ms = sampler.count as f64;
        let cap = (0.9 * (delta / t as f64 - 3.0 * tau) * ms / inner.m as f64).floor().max(0.0) as usize;
        Ok(BoostParams { t, d0: inner.d, cap, sampler, inner, delta, tau })
    }

    pub fn seed_len(&self) -> usize {
        self.t * self.sampler.seed_len + self.d0
    }

    /// Predicted `|Y_i|` for `i = 1..=t`.
    pub fn block_lengths(&self) -> Vec<usize> {
        let m0 = self.inner.m;
        let mut lens = vec![0; self.t];
        lens[self.t - 1] = m0;
        for i in (0..self.t - 1).rev() {
            lens[i] = m0 * (lens[i + 1] / self.d0).min(self.cap);
        }
        lens
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoostOutput {
    pub y: BitVector,
    /// `|Y_1|, ..., |Y_t|`.
    pub lengths: Vec<usize>,
    /// Some step hit the fan-out cap.
    pub clipped: bool,
}

/// `Ext'(x, r)`: the first `min(floor(|r|/d0), cap)` chunks of `r` each seed
/// one copy of the inner extractor.
pub fn ext_prime(x: &BitVector, r: &BitVector, p: &BoostParams) -> Result<(BitVector, bool)> {
    let chunks = r.len() / p.d0;
    let used = chunks.min(p.cap);
    let parts: Vec<BitVector> =
        (0..used).map(|i| p.inner.evaluate(x, &r.slice(i * p.d0, p.d0)?)).collect::<Result<_>>()?;
    Ok((BitVector::concat_all(&parts), chunks > p.cap))
}

/// Seed bundle: sampler seeds `S_1 .. S_t`, then `U_0`.
pub fn boost_output(x: &BitVector, bundle: &BitVector, p: &BoostParams) -> Result<BoostOutput> {
    ensure_len(p.seed_len(), bundle.len())?;
    let r = p.sampler.seed_len;
    let xs: Vec<BitVector> = (0..p.t)
        .map(|i| sample_source(x, &p.sampler, &bundle.slice(i * r, r)?))
        .collect::<Result<_>>()?;
    let mut y = p.inner.evaluate(&xs[p.t - 1], &bundle.slice(p.t * r, p.d0)?)?;
    let mut lengths = vec![y.len()];
    let mut clipped = false;
    for i in (0..p.t - 1).rev() {
        let (next, c) = ext_prime(&xs[i], &y, p)?;
        clipped |= c;
        y = next;
        lengths.push(y.len());
    }
    lengths.reverse();
    Ok(BoostOutput { y, lengths, clipped })
}

/// `Ext(Cond(x, u1), u2)`, seed `u1 || u2`.
pub fn condense_then_extract(
    x: &BitVector,
    seed: &BitVector,
    cond: &CondenserDescriptor,
    ext: &ExtractorDescriptor,
) -> Result<BitVector> {
    ensure_len(cond.d + ext.d, seed.len())?;
    ensure_len(ext.n, cond.m)?;
    let y = cond.evaluate(x, &seed.slice(0, cond.d)?)?;
    ext.evaluate(&y, &seed.slice(cond.d, ext.d)?)
}

pub fn condense_then_extract_descriptor(
    cond: &CondenserDescriptor,
    ext: &ExtractorDescriptor,
) -> Result<ExtractorDescriptor> {
    ensure_len(ext.n, cond.m)?;
    let (c, e, d1) = (cond.eval_fn(), ext.eval_fn(), cond.d);
    let d2 = ext.d;
    let eval: EvalFn = Arc::new(move |x, u| {
        let y = c(x, &u.slice(0, d1).expect("len"));
        e(&y, &u.slice(d1, d2).expect("len"))
    });
    Ok(ExtractorDescriptor::new(
        &format!("{}->{}", cond.name, ext.name),
        cond.n,
        cond.d + ext.d,
        ext.m,
        cond.k_in,
        (cond.eps_claim + ext.eps_claim).min(1.0),
        (cond.row_locality * ext.locality_claim).min(cond.n),
        cond.linear && ext.linear,
        ConstructionTree::node("condense_then_extract", json!({}), vec![cond.tree.clone(), ext.tree.clone()]),
        eval,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{self, prng};
    use crate::primitives::{leftover_hash_descriptor, trevisan_extractor};

    fn identity_ext(n: usize, d: usize) -> ExtractorDescriptor {
        ExtractorDescriptor::new(
            "identity",
            n,
            d,
            n,
            n as f64,
            0.0,
            1,
            true,
            ConstructionTree::leaf("identity", json!({ "n": n })),
            Arc::new(|x: &BitVector, _: &BitVector| x.clone()),
        )
    }

    #[test]
    fn block_and_parallel_degenerate() {
        let lh = leftover_hash_descriptor(8, 3).unwrap();
        let (x, u) = (BitVector::from_u64(0xA7, 8), BitVector::from_u64(0x5C, 8));
        assert_eq!(block_extract(std::slice::from_ref(&x), &u, std::slice::from_ref(&lh)).unwrap(), lh.evaluate(&x, &u).unwrap());
        let y = BitVector::from_u64(0x3, 8);
        let id = identity_ext(8, 8);
        assert_eq!(block_extract(&[x.clone(), y.clone()], &u, &[id.clone(), id]).unwrap(), x.concat(&y));
        assert!(block_extract(std::slice::from_ref(&x), &u, &[]).is_err());
        assert_eq!(parallel_extract(&x, std::slice::from_ref(&u), &lh).unwrap(), lh.evaluate(&x, &u).unwrap());
        let par = parallel_descriptor(&lh, 3, 2.0).unwrap();
        assert!(par.linear && par.m == 9 && par.d == 24);
        // linear in x for a fixed seed
        let mut rng = prng(1);
        for _ in 0..50 {
            let (a, b) = (BitVector::random(8, &mut rng), BitVector::random(8, &mut rng));
            let s = BitVector::random(24, &mut rng);
            let lhs = par.evaluate(&a.xor(&b).unwrap(), &s).unwrap();
            let rhs = par.evaluate(&a, &s).unwrap().xor(&par.evaluate(&b, &s).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn block_source_error_is_additive() {
        // X1 uniform on 6 of 16 values; X2 | X1 flat on 12 values that shift with X1.
        let e1 = leftover_hash_descriptor(4, 1).unwrap();
        let e2 = leftover_hash_descriptor(4, 2).unwrap();
        let x1s: Vec<u64> = vec![1, 4, 6, 9, 13, 15];
        let cond = |x1: u64| -> Vec<u64> { (0..12).map(|j| (j * 5 + x1) % 16).collect() };
        let mut eps2: f64 = 0.0;
        for &a in &x1s {
            let src: Vec<BitVector> = cond(a).iter().map(|&v| BitVector::from_u64(v, 4)).collect();
            eps2 = eps2.max(harness::extractor_error_exact(&e2, &src).unwrap());
        }
        let src1: Vec<BitVector> = x1s.iter().map(|&v| BitVector::from_u64(v, 4)).collect();
        let eps1 = harness::extractor_error_exact(&e1, &src1).unwrap();
        let mut total = 0.0;
        for u in 0..16u64 {
            let seed = BitVector::from_u64(u, 4);
            let mut counts = [0.0f64; 8];
            for &a in &x1s {
                for b in cond(a) {
                    let out = block_extract(
                        &[BitVector::from_u64(a, 4), BitVector::from_u64(b, 4)],
                        &seed,
                        &[e1.clone(), e2.clone()],
                    )
                    .unwrap();
                    counts[out.to_u64() as usize] += 1.0 / 72.0;
                }
            }
            total += table_sd_from_uniform(&counts) / 16.0;
        }
        assert!(total <= eps1 + eps2 + 1e-12, "{total} > {eps1} + {eps2}");
    }

    #[test]
    fn parallel_error_within_claim() {
        // n = 8, flat source on 2^7 points, two copies of a 1-bit hash.
        let mut rng = prng(6);
        let src = harness::random_flat(8, 7, &mut rng).unwrap().support().unwrap();
        let lh1 = leftover_hash_descriptor(8, 1).unwrap();
        let single = harness::extractor_error_exact(&lh1, &src).unwrap();
        let par = parallel_descriptor(&lh1, 2, 1.0).unwrap();
        let exact = harness::extractor_error_exact(&par, &src).unwrap();
        assert!(exact <= 2.0 * (single + 0.5), "{exact}");
        assert!(exact <= par.eps_claim.max(2.0 * (single + 0.5)));
    }

    fn small_params(t1: usize) -> ErrorReductionParams {
        let e0 = leftover_hash_descriptor(6, 4).unwrap();
        let e1 = leftover_hash_descriptor(2, 1).unwrap();
        ErrorReductionParams::new(t1, 2, 4.0, e0, e1).unwrap()
    }

    #[test]
    fn error_reduce_structure() {
        let p = small_params(1);
        assert_eq!(p.output_len(), 2);
        assert_eq!(p.seed_len(), 8);
        let mut rng = prng(2);
        let x = BitVector::random(6, &mut rng);
        let (r, s) = (BitVector::random(6, &mut rng), BitVector::random(2, &mut rng));
        // t1 = 1 is the plain pipeline
        let y = p.inner0.evaluate(&x, &r).unwrap();
        let want = p
            .inner1
            .evaluate(&y.slice(0, 2).unwrap(), &s)
            .unwrap()
            .concat(&p.inner1.evaluate(&y.slice(2, 2).unwrap(), &s).unwrap());
        assert_eq!(error_reduce(&x, &r.concat(&s), &p).unwrap(), want);
        // swapping copies together with their seeds
        let p2 = small_params(2);
        for _ in 0..50 {
            let x = BitVector::random(6, &mut rng);
            let (r1, r2) = (BitVector::random(6, &mut rng), BitVector::random(6, &mut rng));
            let (s1, s2) = (BitVector::random(2, &mut rng), BitVector::random(2, &mut rng));
            let a = error_reduce(&x, &BitVector::concat_all([&r1, &r2, &s1, &s2]), &p2).unwrap();
            let b = error_reduce(&x, &BitVector::concat_all([&r2, &r1, &s2, &s1]), &p2).unwrap();
            assert_eq!(a, b);
        }
        assert!(error_reduce(&x, &BitVector::zeros(7), &p).is_err());
    }

    #[test]
    fn error_reduce_linear_exhaustive() {
        let p = small_params(2);
        let mut rng = prng(3);
        for _ in 0..20 {
            let seed = BitVector::random(p.seed_len(), &mut rng);
            for a in 0..64u64 {
                for b in 0..64u64 {
                    let (xa, xb) = (BitVector::from_u64(a, 6), BitVector::from_u64(b, 6));
                    let lhs = error_reduce(&BitVector::from_u64(a ^ b, 6), &seed, &p).unwrap();
                    let rhs = error_reduce(&xa, &seed, &p).unwrap().xor(&error_reduce(&xb, &seed, &p).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn t2_schedule_and_dropped_bits() {
        assert_eq!(ErrorReductionParams::default_t2(1), 1);
        assert_eq!(ErrorReductionParams::default_t2(8), 2);
        assert_eq!(ErrorReductionParams::default_t2(26), 2);
        assert_eq!(ErrorReductionParams::default_t2(27), 3);
        let e0 = leftover_hash_descriptor(8, 7).unwrap();
        let e1 = leftover_hash_descriptor(3, 2).unwrap();
        let p = ErrorReductionParams::new(1, 2, 3.0, e0.clone(), e1.clone()).unwrap();
        assert_eq!(p.dropped_bits(), 1);
        assert!(ErrorReductionParams::new(1, 3, 3.0, e0, e1).is_err());
    }

    #[test]
    fn short_circuit_and_t1_choice() {
        assert_eq!(choose_t1(0.1, 0.2), None);
        assert_eq!(choose_t1(0.1, 0.1), None);
        // (0.2)^t <= 0.001 needs t = 5
        assert_eq!(choose_t1(0.1, 0.01), Some(5));
        let e0 = leftover_hash_descriptor(6, 4).unwrap();
        let e1 = leftover_hash_descriptor(2, 1).unwrap();
        let same = reduce_to(0.5, 0.25, 0.1, 2, 4.0, e0.clone(), e1.clone()).unwrap();
        assert_eq!(same.name, e0.name);
        let red = reduce_to(0.01, 0.1, 0.1, 2, 4.0, e0, e1).unwrap();
        assert_eq!(red.name, "error_reduction");
        assert_eq!(red.d, 5 * (6 + 2));
    }

    #[test]
    fn one_code_path_for_both_variants() {
        // polynomial-error and super-polynomial-error variants differ only in inner1
        let e0 = leftover_hash_descriptor(16, 12).unwrap();
        let lh = leftover_hash_descriptor(6, 2).unwrap();
        let tr = trevisan_extractor(6, 2, 2.0, None).unwrap();
        let a = error_reduction_descriptor(&ErrorReductionParams::new(2, 2, 4.0, e0.clone(), lh).unwrap(), 0.1, 0.1);
        let b = error_reduction_descriptor(&ErrorReductionParams::new(2, 2, 4.0, e0, tr).unwrap(), 0.1, 0.01);
        assert_eq!(a.tree.kind, b.tree.kind);
        assert_eq!(a.m, b.m);
        assert!(b.eps_claim < a.eps_claim);
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomial sums: 1, 2, 5, 16, 67
        let counts: Vec<usize> = (0..5).map(|m| subspaces(m).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 16, 67]);
    }

    #[test]
    fn moebius_matches_brute_force() {
        let mut rng = prng(12);
        for t1 in 1..=2 {
            let p = small_params(t1);
            let aff = harness::random_affine(6, 3, &mut rng).unwrap();
            let harness::SourceSpec::Affine { basis, .. } = &aff else { unreachable!() };
            let copy = |x: &BitVector, c: &BitVector| copy_output(x, &c.slice(0, 6).unwrap(), &c.slice(6, 2).unwrap(), &p).unwrap();
            let fast = xor_copies_affine_error(basis, 8, 2, t1, &copy).unwrap();
            let desc = error_reduction_descriptor(&p, 0.0, 0.0);
            // copy seeds reorder as (R_1, .., S_1, ..) in the bundle; the average is the same
            let brute = harness::linear_affine_error_exact(&desc, basis).unwrap();
            let full = harness::extractor_error_exact(&desc, &aff.support().unwrap()).unwrap();
            assert!((fast - brute).abs() < 1e-12, "t1={t1}: {fast} vs {brute}");
            assert!((full - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_law_exact() {
        for m in 1..=4 {
            for &eps in &[0.0625, 0.125, 0.25] {
                for shape in [CraftedShape::Point, CraftedShape::Halfspace, CraftedShape::Plane] {
                    let Ok(d) = crafted_distribution(m, eps, shape) else { continue };
                    assert!((table_sd_from_uniform(&d) - eps).abs() < 1e-12);
                    for t in 1..=3 {
                        let sd = xor_law_sd(&vec![d.clone(); t]).unwrap();
                        assert!(sd <= (2.0 * eps).powi(t as i32) + 1e-12, "m={m} eps={eps} {shape:?} t={t}");
                    }
                }
            }
        }
        // halfspace is tight up to the factor 1/2
        let d = crafted_distribution(4, 0.25, CraftedShape::Halfspace).unwrap();
        assert!((xor_law_sd(&[d.clone(), d]).unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn boost_growth_law() {
        let samp = crate::samplers::pairwise_oblivious_sampler(8, 4, 6, 0.25).unwrap();
        let inner = leftover_hash_descriptor(16, 6).unwrap(); // d0 = 16, m0 = 6
        let p = BoostParams::new(3, samp, inner, 1.0).unwrap();
        let mut rng = prng(4);
        let x = BitVector::random(64, &mut rng);
        let out = boost_output(&x, &BitVector::random(p.seed_len(), &mut rng), &p).unwrap();
        assert_eq!(out.lengths, p.block_lengths());
        assert_eq!(out.y.len(), out.lengths[0]);
        // t = 1 is one inner extraction
        let samp = crate::samplers::pairwise_oblivious_sampler(8, 4, 6, 0.25).unwrap();
        let inner = leftover_hash_descriptor(16, 6).unwrap();
        let p1 = BoostParams::new(1, samp.clone(), inner.clone(), 1.0).unwrap();
        let bundle = BitVector::random(p1.seed_len(), &mut rng);
        let xs = sample_source(&x, &samp, &bundle.slice(0, 16).unwrap()).unwrap();
        assert_eq!(boost_output(&x, &bundle, &p1).unwrap().y, inner.evaluate(&xs, &bundle.slice(16, 16).unwrap()).unwrap());
    }

    #[test]
    fn boost_cap_clips() {
        // wide sampler: cap is large enough for growth at the short inner seed
        let samp = crate::samplers::pairwise_oblivious_sampler(10, 5, 10, 0.25).unwrap();
        let inner = leftover_hash_descriptor(32, 8).unwrap();
        let mut p = BoostParams::new(3, samp, inner, 1.0).unwrap();
        p.d0 = 32;
        let lens = p.block_lengths();
        assert_eq!(lens[2], 8);
        assert_eq!(lens[1], 0); // 8 bits hold no full 32-bit chunk
        p.cap = 0;
        assert!(p.block_lengths()[..2].iter().all(|&l| l == 0));
        // deterministic chain
        let mut rng = prng(5);
        let (x, b) = (BitVector::random(1024, &mut rng), BitVector::random(p.seed_len(), &mut rng));
        assert_eq!(boost_output(&x, &b, &p).unwrap(), boost_output(&x, &b, &p).unwrap());
    }

    #[test]
    fn condense_then_extract_fixtures() {
        let ext = leftover_hash_descriptor(8, 3).unwrap();
        let id = CondenserDescriptor::identity(8);
        let mut rng = prng(9);
        for _ in 0..20 {
            let (x, u) = (BitVector::random(8, &mut rng), BitVector::random(8, &mut rng));
            assert_eq!(condense_then_extract(&x, &u, &id, &ext).unwrap(), ext.evaluate(&x, &u).unwrap());
        }
        let params = crate::condenser::CondenserParams::new(16, 12).unwrap().with_rows(12);
        let cond = CondenserDescriptor::from_params(&params).unwrap();
        let ext = leftover_hash_descriptor(12, 3).unwrap();
        let u = BitVector::random(cond.d + 12, &mut rng);
        let zero = condense_then_extract(&BitVector::zeros(16), &u, &cond, &ext).unwrap();
        assert_eq!(zero, ext.evaluate(&BitVector::zeros(12), &u.slice(cond.d, 12).unwrap()).unwrap());
        // locality product law via the toggling audit
        let comp = condense_then_extract_descriptor(&cond, &ext).unwrap();
        let seed = BitVector::random(comp.d, &mut rng);
        let rep = harness::locality_audit(&comp, &seed, 1, &mut rng).unwrap();
        assert!(rep.max <= comp.locality_claim, "{} > {}", rep.max, comp.locality_claim);
    }
}

#[cfg(test)]
mod properties {
    use proptest::collection::vec;
    use proptest::prelude::*;

    use super::{table_sd_from_uniform, xor_law_sd};

    fn table() -> impl Strategy<Value = Vec<f64>> {
        vec(1u32..100, 8).prop_map(|w| {
            let total: u32 = w.iter().sum();
            w.into_iter().map(|x| x as f64 / total as f64).collect()
        })
    }

    proptest! {
        #[test]
        fn xor_of_two_tables_shrinks_distance(p in table(), q in table()) {
            let joint = xor_law_sd(&[p.clone(), q.clone()]).unwrap();
            let bound = 2.0 * table_sd_from_uniform(&p) * table_sd_from_uniform(&q);
            prop_assert!(joint <= bound + 1e-12);
        }
    }
}
