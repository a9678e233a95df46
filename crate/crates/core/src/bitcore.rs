//! Bit vectors, GF(2) linear algebra and GF(2^w) arithmetic.
//!
//! Bit `i` of a vector is bit `i % 64` of word `i / 64`, so index 0 is the
//! least significant bit. Field elements use the same layout: bit `i` is the
//! coefficient of `x^i`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_len, Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector { len, words: vec![0; word_count(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVector { len, words: vec![u64::MAX; word_count(len)] };
        v.trim();
        v
    }

    /// Low `len` bits of `value`, zero-extended past 64.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let mut v = BitVector::zeros(len);
        if len > 0 {
            v.words[0] = value;
            v.trim();
        }
        v
    }

    pub fn from_u128(value: u128, len: usize) -> Self {
        let mut v = BitVector::zeros(len);
        if len > 0 {
            v.words[0] = value as u64;
        }
        if len > 64 {
            v.words[1] = (value >> 64) as u64;
        }
        v.trim();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Parses a string of '0'/'1' where character `i` is bit `i`.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Error::Parse(format!("bad bit character {c:?}"))),
            }
        }
        Ok(v)
    }

    pub fn from_words(words: Vec<u64>, len: usize) -> Self {
        let mut words = words;
        words.resize(word_count(len), 0);
        let mut v = BitVector { len, words };
        v.trim();
        v
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..word_count(len)).map(|_| rng.gen::<u64>()).collect();
        BitVector::from_words(words, len)
    }

    fn trim(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn try_get(&self, i: usize) -> Result<bool> {
        if i < self.len {
            Ok(self.get(i))
        } else {
            Err(Error::OutOfRange { index: i, len: self.len })
        }
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u32, |acc, w| acc ^ (w.count_ones() & 1)) == 1
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        ensure_len(self.len, other.len)?;
        let mut out = self.clone();
        out.xor_assign(other);
        Ok(out)
    }

    /// In-place XOR. Panics on length mismatch; use [`BitVector::xor`] for a
    /// checked version.
    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and(&self, other: &BitVector) -> Result<BitVector> {
        ensure_len(self.len, other.len)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(BitVector { len: self.len, words })
    }

    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = BitVector::zeros(self.len + other.len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        out.write_at(self.len, other);
        out
    }

    pub fn concat_all<'a, I: IntoIterator<Item = &'a BitVector>>(parts: I) -> BitVector {
        let parts: Vec<&BitVector> = parts.into_iter().collect();
        let total = parts.iter().map(|p| p.len).sum();
        let mut out = BitVector::zeros(total);
        let mut at = 0;
        for p in parts {
            out.write_at(at, p);
            at += p.len;
        }
        out
    }

    /// Overwrites bits `[at, at + src.len())` with `src`.
    pub fn write_at(&mut self, at: usize, src: &BitVector) {
        assert!(at + src.len <= self.len, "write past end");
        if at.is_multiple_of(64) {
            let w0 = at / 64;
            let full = src.len / 64;
            self.words[w0..w0 + full].copy_from_slice(&src.words[..full]);
            for i in full * 64..src.len {
                self.set(at + i, src.get(i));
            }
            return;
        }
        for i in 0..src.len {
            self.set(at + i, src.get(i));
        }
    }

    /// Bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitVector> {
        if start + len > self.len {
            return Err(Error::OutOfRange { index: start + len, len: self.len });
        }
        let mut out = BitVector::zeros(len);
        if start.is_multiple_of(64) {
            let w0 = start / 64;
            let n = word_count(len);
            out.words.copy_from_slice(&self.words[w0..w0 + n]);
            out.trim();
            return Ok(out);
        }
        let shift = start % 64;
        for k in 0..out.words.len() {
            let idx = start / 64 + k;
            let lo = self.words[idx] >> shift;
            let hi = self.words.get(idx + 1).map_or(0, |w| w << (64 - shift));
            out.words[k] = lo | hi;
        }
        out.trim();
        Ok(out)
    }

    /// Value of the first `min(len, 64)` bits.
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn to_u128(&self) -> u128 {
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        lo | (hi << 64)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    /// Copy with length changed; new high bits are zero.
    pub fn resized(&self, len: usize) -> BitVector {
        BitVector::from_words(self.words.clone(), len)
    }

    /// Serialized form `"len:hex"`, hex being the big-endian value with bit 0
    /// as the least significant bit.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4).max(1);
        let mut s = String::with_capacity(digits + 8);
        s.push_str(&self.len.to_string());
        s.push(':');
        for d in (0..digits).rev() {
            let mut nib = 0u8;
            for b in 0..4 {
                let i = d * 4 + b;
                if i < self.len && self.get(i) {
                    nib |= 1 << b;
                }
            }
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<BitVector> {
        let (len_s, hex) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected len:hex, got {s:?}")))?;
        let len: usize = len_s.parse().map_err(|_| Error::Parse(format!("bad length {len_s:?}")))?;
        let mut v = BitVector::zeros(len);
        for (d, c) in hex.chars().rev().enumerate() {
            let nib = c.to_digit(16).ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?;
            for b in 0..4 {
                if nib >> b & 1 == 1 {
                    let i = d * 4 + b;
                    if i >= len {
                        return Err(Error::Parse(format!("value exceeds {len} bits")));
                    }
                    v.set(i, true);
                }
            }
        }
        Ok(v)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitVector({self})")
        } else {
            write!(f, "BitVector({})", self.to_hex())
        }
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitVector::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

impl std::ops::BitXor for &BitVector {
    type Output = BitVector;
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

/// `<a, b> = sum a_i b_i mod 2`.
pub fn inner_product(a: &BitVector, b: &BitVector) -> Result<bool> {
    ensure_len(a.len(), b.len())?;
    let mut acc = 0u64;
    for (x, y) in a.words.iter().zip(&b.words) {
        acc ^= x & y;
    }
    Ok(acc.count_ones() & 1 == 1)
}

/// Output bit `j` is `x[idx[j]]`.
pub fn select_bits(x: &BitVector, idx: &[usize]) -> Result<BitVector> {
    let mut out = BitVector::zeros(idx.len());
    for (j, &i) in idx.iter().enumerate() {
        if x.try_get(i)? {
            out.set(j, true);
        }
    }
    Ok(out)
}

/// Low-order coefficients (below `x^w`) of the default modulus for degree
/// `w`: the trinomial `x^w + x^a + 1` with least `a` when one is irreducible,
/// otherwise the least pentanomial.
const MODULUS_TABLE: [u64; 64] = [
    0x1, 0x3, 0x3, 0x3, 0x5, 0x3, 0x3, 0x1b, 0x3, 0x9, 0x5, 0x9, 0x1b, 0x21, 0x3, 0x2b, 0x9, 0x9,
    0x27, 0x9, 0x5, 0x3, 0x21, 0x1b, 0x9, 0x1b, 0x27, 0x3, 0x5, 0x3, 0x9, 0x8d, 0x401, 0x81, 0x5,
    0x201, 0x53, 0x63, 0x11, 0x39, 0x9, 0x81, 0x59, 0x21, 0x1b, 0x3, 0x21, 0x2d, 0x201, 0x1d, 0x4b,
    0x9, 0x47, 0x201, 0x81, 0x95, 0x11, 0x80001, 0x95, 0x3, 0x27, 0x20000001, 0x3, 0x1b,
];

pub const MAX_FIELD_DEGREE: usize = 256;

/// GF(2^w) with an explicit irreducible modulus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GF2Field {
    w: usize,
    /// Modulus coefficients including the leading `x^w` term (length w+1).
    modulus: BitVector,
    /// Low part of the modulus when w <= 64.
    low: u64,
}

impl GF2Field {
    /// Field of degree `w` with the built-in modulus (table for w <= 64,
    /// least irreducible by Rabin's test above that).
    pub fn new(w: usize) -> Result<Self> {
        if w == 0 || w > MAX_FIELD_DEGREE {
            return Err(Error::param(format!("field degree {w} outside 1..={MAX_FIELD_DEGREE}")));
        }
        if w <= 64 {
            let mut m = BitVector::from_u64(MODULUS_TABLE[w - 1], w + 1);
            m.set(w, true);
            return Ok(GF2Field { w, modulus: m, low: MODULUS_TABLE[w - 1] });
        }
        Ok(GF2Field { w, modulus: search_modulus(w), low: 0 })
    }

    /// Field with a caller-supplied modulus of degree `w` (length w+1 vector).
    pub fn with_modulus(modulus: BitVector) -> Result<Self> {
        if modulus.len() < 2 || !modulus.get(modulus.len() - 1) {
            return Err(Error::param("modulus must have a leading coefficient"));
        }
        let w = modulus.len() - 1;
        if w > MAX_FIELD_DEGREE {
            return Err(Error::param(format!("field degree {w} too large")));
        }
        if !is_irreducible(&modulus) {
            return Err(Error::param(format!("modulus {} is reducible", modulus.to_hex())));
        }
        let low = if w <= 64 { modulus.slice(0, w)?.to_u64() } else { 0 };
        Ok(GF2Field { w, modulus, low })
    }

    pub fn degree(&self) -> usize {
        self.w
    }

    pub fn modulus(&self) -> &BitVector {
        &self.modulus
    }

    pub fn order_bits(&self) -> usize {
        self.w
    }

    fn mask(&self) -> u64 {
        if self.w == 64 {
            u64::MAX
        } else {
            (1u64 << self.w) - 1
        }
    }

    /// Product of two elements, w <= 64. Inputs are assumed reduced.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        debug_assert!(self.w <= 64);
        let w = self.w as u32;
        let mut prod = clmul(a, b);
        // Fold the high part down; each fold shrinks the degree by at least
        // w - deg(low).
        let low = self.low as u128;
        while prod >> w != 0 {
            let hi = prod >> w;
            prod = (prod & self.mask() as u128) ^ clmul_wide(hi, low);
        }
        prod as u64
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut acc = 1u64 & self.mask();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero element, w <= 64.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::param("zero has no inverse"));
        }
        // a^(2^w - 2)
        let mut acc = 1u64;
        let mut sq = a;
        for _ in 1..self.w {
            sq = self.mul(sq, sq);
            acc = self.mul(acc, sq);
        }
        Ok(acc)
    }

    /// Product of elements given as length-w vectors; any supported w.
    pub fn mul_bits(&self, a: &BitVector, b: &BitVector) -> Result<BitVector> {
        ensure_len(self.w, a.len())?;
        ensure_len(self.w, b.len())?;
        if self.w <= 64 {
            return Ok(BitVector::from_u64(self.mul(a.to_u64(), b.to_u64()), self.w));
        }
        let prod = poly_mul(a, b);
        Ok(poly_rem(&prod, &self.modulus).resized(self.w))
    }
}

/// Checked `a * b` in GF(2^w) for w <= 64.
pub fn gf2w_mul(a: u64, b: u64, f: &GF2Field) -> Result<u64> {
    if f.degree() > 64 {
        return Err(Error::param("use GF2Field::mul_bits for degrees above 64"));
    }
    let lim = f.mask();
    if a & !lim != 0 || b & !lim != 0 {
        return Err(Error::param(format!("operand outside GF(2^{})", f.degree())));
    }
    Ok(f.mul(a, b))
}

#[inline]
fn clmul(a: u64, b: u64) -> u128 {
    let mut r = 0u128;
    let a = a as u128;
    let mut b = b;
    while b != 0 {
        let t = b.trailing_zeros();
        r ^= a << t;
        b &= b - 1;
    }
    r
}

#[inline]
fn clmul_wide(a: u128, b: u128) -> u128 {
    let mut r = 0u128;
    let mut b = b;
    while b != 0 {
        let t = b.trailing_zeros();
        r ^= a << t;
        b &= b - 1;
    }
    r
}

// Polynomials over GF(2) as bit vectors, coefficient i at bit i. Degree of
// the zero polynomial is None.

fn poly_deg(p: &BitVector) -> Option<usize> {
    for (wi, &w) in p.words().iter().enumerate().rev() {
        if w != 0 {
            return Some(wi * 64 + 63 - w.leading_zeros() as usize);
        }
    }
    None
}

fn poly_mul(a: &BitVector, b: &BitVector) -> BitVector {
    let len = a.len() + b.len();
    let mut out = BitVector::zeros(len.max(1));
    for i in b.ones_iter() {
        for j in a.ones_iter() {
            out.flip(i + j);
        }
    }
    out
}

fn poly_rem(a: &BitVector, m: &BitVector) -> BitVector {
    let dm = poly_deg(m).expect("modulus is nonzero");
    let mut r = a.clone();
    while let Some(dr) = poly_deg(&r) {
        if dr < dm {
            break;
        }
        let shift = dr - dm;
        for i in m.ones_iter() {
            r.flip(i + shift);
        }
    }
    r
}

fn poly_mulmod(a: &BitVector, b: &BitVector, m: &BitVector) -> BitVector {
    poly_rem(&poly_mul(a, b), m)
}

fn poly_gcd(a: &BitVector, b: &BitVector) -> BitVector {
    let mut a = a.clone();
    let mut b = b.clone();
    while poly_deg(&b).is_some() {
        let r = poly_rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

fn poly_x(len: usize) -> BitVector {
    let mut x = BitVector::zeros(len);
    x.set(1, true);
    x
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Rabin's irreducibility test: f of degree w is irreducible iff
/// x^(2^w) = x mod f and gcd(x^(2^(w/p)) - x, f) = 1 for every prime p | w.
pub fn is_irreducible(f: &BitVector) -> bool {
    let Some(w) = poly_deg(f) else { return false };
    if w == 0 {
        return false;
    }
    if w == 1 {
        return true;
    }
    let len = 2 * w + 2;
    let f = f.resized(len);
    let x = poly_x(len);
    let frob = |k: usize| {
        let mut y = x.clone();
        for _ in 0..k {
            y = poly_mulmod(&y, &y, &f).resized(len);
        }
        y
    };
    if frob(w) != x {
        return false;
    }
    for p in prime_factors(w) {
        let mut h = frob(w / p);
        h.xor_assign(&x);
        let g = poly_gcd(&f, &h);
        if poly_deg(&g) != Some(0) {
            return false;
        }
    }
    true
}

/// Least irreducible of degree w in the order trinomials, then pentanomials.
fn search_modulus(w: usize) -> BitVector {
    let base = |taps: &[usize]| {
        let mut m = BitVector::zeros(w + 1);
        m.set(0, true);
        m.set(w, true);
        for &t in taps {
            m.set(t, true);
        }
        m
    };
    for a in 1..w {
        let m = base(&[a]);
        if is_irreducible(&m) {
            return m;
        }
    }
    for c in 3..w {
        for b in 2..c {
            for a in 1..b {
                let m = base(&[a, b, c]);
                if is_irreducible(&m) {
                    return m;
                }
            }
        }
    }
    unreachable!("every degree above 4 has an irreducible trinomial or pentanomial")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitVector {
        BitVector::from_bit_str(s).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert!(!inner_product(&bits("0000"), &bits("1011")).unwrap());
        assert!(!inner_product(&bits("1011"), &bits("1001")).unwrap());
        assert!(inner_product(&bits("1"), &bits("1")).unwrap());
        assert!(inner_product(&bits("10"), &bits("1")).is_err());
    }

    #[test]
    fn select_examples() {
        let x = bits("10110");
        assert_eq!(select_bits(&x, &[0, 2]).unwrap(), bits("11"));
        assert!(select_bits(&x, &[]).unwrap().is_empty());
        assert_eq!(select_bits(&x, &[3, 3]).unwrap(), bits("11"));
        assert_eq!(select_bits(&x, &[1, 1]).unwrap(), bits("00"));
        assert!(select_bits(&x, &[5]).is_err());
    }

    #[test]
    fn gf8_example() {
        let f = GF2Field::new(3).unwrap();
        assert_eq!(f.modulus().to_u64(), 0b1011);
        assert_eq!(gf2w_mul(0b100, 0b010, &f).unwrap(), 0b011);
        assert!(gf2w_mul(8, 1, &f).is_err());
    }

    #[test]
    fn identity_and_zero() {
        let f = GF2Field::new(4).unwrap();
        for a in 0..16 {
            assert_eq!(f.mul(a, 1), a);
            assert_eq!(f.mul(0, a), 0);
        }
    }

    // Schoolbook long division, independent of the folding reduction.
    fn oracle_mul(a: u64, b: u64, w: usize, modulus: u64) -> u64 {
        let mut prod: u128 = 0;
        for i in 0..w {
            if b >> i & 1 == 1 {
                prod ^= (a as u128) << i;
            }
        }
        for i in (w..2 * w).rev() {
            if prod >> i & 1 == 1 {
                prod ^= (modulus as u128) << (i - w);
            }
        }
        prod as u64
    }

    #[test]
    fn table_moduli_are_irreducible() {
        for w in 1..=64 {
            let f = GF2Field::new(w).unwrap();
            assert!(is_irreducible(f.modulus()), "w={w}");
        }
    }

    #[test]
    fn mul_matches_long_division() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for w in [5usize, 12, 31, 33, 47, 63, 64] {
            let f = GF2Field::new(w).unwrap();
            let full = f.modulus().to_u128();
            for _ in 0..200 {
                let mask = if w == 64 { u64::MAX } else { (1 << w) - 1 };
                let a = rng.gen::<u64>() & mask;
                let b = rng.gen::<u64>() & mask;
                let mut prod: u128 = 0;
                for i in 0..w {
                    if b >> i & 1 == 1 {
                        prod ^= (a as u128) << i;
                    }
                }
                for i in (w..2 * w).rev() {
                    if prod >> i & 1 == 1 {
                        prod ^= full << (i - w);
                    }
                }
                assert_eq!(f.mul(a, b), prod as u64, "w={w}");
                if w < 64 {
                    assert_eq!(f.mul(a, b), oracle_mul(a, b, w, full as u64));
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for w in 1..=8usize {
            let f = GF2Field::new(w).unwrap();
            let q = 1u64 << w;
            for a in 0..q {
                let mut seen = vec![false; q as usize];
                for b in 0..q {
                    let p = f.mul(a, b);
                    assert_eq!(p, f.mul(b, a));
                    if a != 0 {
                        assert!(!seen[p as usize], "not a bijection");
                        seen[p as usize] = true;
                    }
                }
            }
            // associativity and distributivity on a grid
            let step = (q / 8).max(1);
            for a in (0..q).step_by(step as usize) {
                for b in 0..q {
                    for c in (0..q).step_by(step as usize) {
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let f = GF2Field::new(12).unwrap();
        for a in 1..4096 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }

    #[test]
    fn large_degree_fields() {
        let f = GF2Field::new(80).unwrap();
        assert!(is_irreducible(f.modulus()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = BitVector::random(80, &mut rng);
        let b = BitVector::random(80, &mut rng);
        let c = BitVector::random(80, &mut rng);
        let one = BitVector::from_u64(1, 80);
        assert_eq!(f.mul_bits(&a, &one).unwrap(), a);
        let ab_c = f.mul_bits(&f.mul_bits(&a, &b).unwrap(), &c).unwrap();
        let a_bc = f.mul_bits(&a, &f.mul_bits(&b, &c).unwrap()).unwrap();
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn reducible_modulus_rejected() {
        // x^4 + 1 = (x + 1)^4
        let m = BitVector::from_u64(0b10001, 5);
        assert!(GF2Field::with_modulus(m).is_err());
        assert!(GF2Field::with_modulus(BitVector::from_u64(0b10011, 5)).is_ok());
    }

    #[test]
    fn hex_roundtrip() {
        let v = bits("10110");
        assert_eq!(v.to_hex(), "5:0d");
        assert_eq!(BitVector::from_hex("5:0d").unwrap(), v);
        assert_eq!(BitVector::zeros(0).to_hex(), "0:0");
        assert!(BitVector::from_hex("3:f").is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for len in [1usize, 63, 64, 65, 130] {
            let v = BitVector::random(len, &mut rng);
            assert_eq!(BitVector::from_hex(&v.to_hex()).unwrap(), v);
        }
    }

    #[test]
    fn slicing_and_concat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = BitVector::random(100, &mut rng);
        let b = BitVector::random(37, &mut rng);
        let c = a.concat(&b);
        assert_eq!(c.slice(0, 100).unwrap(), a);
        assert_eq!(c.slice(100, 37).unwrap(), b);
        for start in [0usize, 1, 63, 64, 70] {
            let s = c.slice(start, 50).unwrap();
            for i in 0..50 {
                assert_eq!(s.get(i), c.get(start + i));
            }
        }
        assert!(c.slice(100, 38).is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        let v = BitVector::zeros(4);
        assert!(v.try_get(4).is_err());
        assert!(v.xor(&BitVector::zeros(5)).is_err());
    }
}
