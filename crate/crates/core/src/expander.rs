//! Explicit expanders, walks on them and spectral certification.
//!
//! The Margulis–Gabber–Galil graph lives on Z_m x Z_m with vertex id
//! `x + m*y`; neighbor `j` applies one of eight affine maps:
//!
//! ```text
//! 0: (x + 2y, y)      1: (x - 2y, y)
//! 2: (x + 2y + 1, y)  3: (x - 2y - 1, y)
//! 4: (x, y + 2x)      5: (x, y - 2x)
//! 6: (x, y + 2x + 1)  7: (x, y - 2x - 1)
//! ```
//!
//! Maps come in inverse pairs, so the multigraph is undirected and 8-regular.
//! For a vertex set of size 2^r the torus uses m = 2^ceil(r/2) and reports
//! labels `id mod 2^r`; for odd r every label has exactly two preimages.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitcore::BitVector;
use crate::error::{Error, Result};

/// Gabber–Galil bound on the second eigenvalue of the normalized operator.
pub fn mgg_lambda_bound() -> f64 {
    5.0 * std::f64::consts::SQRT_2 / 8.0
}

pub const SPECTRAL_CAP: u128 = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub enum Topology {
    Torus { m: u128 },
    Complete { q: usize },
    Cycle { n: usize },
    /// Regular multigraph given by adjacency lists (test fixtures).
    Explicit { adj: Vec<Vec<usize>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSource {
    Analytic,
    Measured,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpanderGraph {
    pub topology: Topology,
    pub base_degree: usize,
    /// Steps of the base graph per edge.
    pub power: usize,
    pub lambda_bound: f64,
    pub bound_source: BoundSource,
    /// When set, walk positions are reported modulo 2^label_bits.
    pub label_bits: Option<usize>,
}

/// Margulis–Gabber–Galil graph on Z_m x Z_m.
pub fn mgg_graph(m: u128) -> Result<ExpanderGraph> {
    if !(2..=1u128 << 126).contains(&m) {
        return Err(Error::param(format!("torus side {m} outside 2..=2^126")));
    }
    Ok(ExpanderGraph {
        topology: Topology::Torus { m },
        base_degree: 8,
        power: 1,
        lambda_bound: mgg_lambda_bound(),
        bound_source: BoundSource::Analytic,
        label_bits: None,
    })
}

/// MGG graph realizing a vertex set of size 2^r.
pub fn mgg_for_bits(r: usize) -> Result<ExpanderGraph> {
    if r == 0 || r > 252 {
        return Err(Error::param(format!("label width {r} outside 1..=252")));
    }
    let mut g = mgg_graph(1u128 << r.div_ceil(2))?;
    g.label_bits = Some(r);
    Ok(g)
}

pub fn complete_graph(q: usize) -> ExpanderGraph {
    ExpanderGraph {
        topology: Topology::Complete { q },
        base_degree: q - 1,
        power: 1,
        lambda_bound: 1.0 / (q as f64 - 1.0),
        bound_source: BoundSource::Analytic,
        label_bits: None,
    }
}

pub fn cycle_graph(n: usize) -> ExpanderGraph {
    ExpanderGraph {
        topology: Topology::Cycle { n },
        base_degree: 2,
        power: 1,
        lambda_bound: 1.0,
        bound_source: BoundSource::Analytic,
        label_bits: None,
    }
}

pub fn explicit_graph(adj: Vec<Vec<usize>>) -> Result<ExpanderGraph> {
    let deg = adj.first().map_or(0, Vec::len);
    if adj.iter().any(|a| a.len() != deg || a.iter().any(|&v| v >= adj.len())) {
        return Err(Error::param("explicit graph must be regular with valid neighbors"));
    }
    Ok(ExpanderGraph {
        topology: Topology::Explicit { adj },
        base_degree: deg,
        power: 1,
        lambda_bound: 1.0,
        bound_source: BoundSource::Analytic,
        label_bits: None,
    })
}

/// Edges are `s`-step walks of `g`; the bound is `g.lambda_bound^s`.
pub fn powered_graph(g: &ExpanderGraph, s: usize) -> Result<ExpanderGraph> {
    if s == 0 {
        return Err(Error::param("power must be at least 1"));
    }
    let mut out = g.clone();
    out.power = g.power * s;
    out.lambda_bound = g.lambda_bound.powi(s as i32);
    Ok(out)
}

/// Least `s` with `lambda^s <= target`.
pub fn power_for_target(lambda: f64, target: f64) -> usize {
    let mut s = 1;
    let mut v = lambda;
    while v > target {
        v *= lambda;
        s += 1;
    }
    s
}

impl ExpanderGraph {
    /// Number of internal vertices (torus points for MGG).
    pub fn internal_vertices(&self) -> u128 {
        match &self.topology {
            Topology::Torus { m } => m * m,
            Topology::Complete { q } => *q as u128,
            Topology::Cycle { n } => *n as u128,
            Topology::Explicit { adj } => adj.len() as u128,
        }
    }

    /// Number of reported vertex labels.
    pub fn num_vertices(&self) -> u128 {
        match self.label_bits {
            Some(r) => 1u128 << r,
            None => self.internal_vertices(),
        }
    }

    pub fn label(&self, v: u128) -> u128 {
        match self.label_bits {
            Some(r) if r < 128 => v & ((1u128 << r) - 1),
            _ => v,
        }
    }

    /// Base-graph coin bits consumed per base step.
    pub fn base_coin_bits(&self) -> usize {
        bits_for(self.base_degree)
    }

    /// Coin bits per edge of this (possibly powered) graph.
    pub fn coin_bits(&self) -> usize {
        self.base_coin_bits() * self.power
    }

    pub fn degree_log2(&self) -> f64 {
        self.power as f64 * (self.base_degree as f64).log2()
    }

    /// `j`-th base neighbor of internal vertex `v`.
    pub fn base_neighbor(&self, v: u128, j: usize) -> u128 {
        match &self.topology {
            Topology::Torus { m } => {
                let m = *m;
                let x = v % m;
                let y = v / m;
                let add = |a: u128, b: u128| (a + b) % m;
                let sub = |a: u128, b: u128| (a + m - b % m) % m;
                let two_y = (2 * y) % m;
                let two_x = (2 * x) % m;
                let (nx, ny) = match j % 8 {
                    0 => (add(x, two_y), y),
                    1 => (sub(x, two_y), y),
                    2 => (add(x, (two_y + 1) % m), y),
                    3 => (sub(x, (two_y + 1) % m), y),
                    4 => (x, add(y, two_x)),
                    5 => (x, sub(y, two_x)),
                    6 => (x, add(y, (two_x + 1) % m)),
                    _ => (x, sub(y, (two_x + 1) % m)),
                };
                nx + m * ny
            }
            Topology::Complete { q } => {
                let v = v as usize;
                let j = j % (q - 1);
                (if j < v { j } else { j + 1 }) as u128
            }
            Topology::Cycle { n } => {
                let n = *n as u128;
                if j.is_multiple_of(2) {
                    (v + 1) % n
                } else {
                    (v + n - 1) % n
                }
            }
            Topology::Explicit { adj } => adj[v as usize][j % adj[0].len()] as u128,
        }
    }

    /// Neighbor along an edge of the powered graph; `j` lists the base
    /// choices, one per base step.
    pub fn neighbor(&self, v: u128, j: &[usize]) -> u128 {
        debug_assert_eq!(j.len(), self.power);
        j.iter().fold(v, |u, &c| self.base_neighbor(u, c))
    }

    /// Dense normalized adjacency applied to a vector (power 1 only).
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.base_degree as f64;
        for (v, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..self.base_degree {
                acc += x[self.base_neighbor(v as u128, j) as usize];
            }
            *o = acc * inv;
        }
    }
}

fn bits_for(degree: usize) -> usize {
    if degree <= 1 {
        0
    } else {
        (usize::BITS - (degree - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkTranscript {
    pub start: u128,
    pub coins: BitVector,
    /// Reported labels v_1, ..., v_{t+1}.
    pub vertices: Vec<u128>,
}

/// Walk of `t` edges from `start`. Each base step reads
/// `ceil(log2 degree)` coin bits (LSB first), reduced mod the degree.
pub fn random_walk(g: &ExpanderGraph, start: u128, t: usize, coins: &BitVector) -> Result<WalkTranscript> {
    if let Topology::Torus { m } = g.topology {
        if m > 1u128 << 64 || g.label_bits.is_some_and(|r| r > 127) {
            return Err(Error::param("vertex ids overflow; use wide_torus_walk"));
        }
    }
    let per = g.coin_bits();
    if coins.len() < t * per {
        return Err(Error::param(format!(
            "walk of {t} steps needs {} coin bits, got {}",
            t * per,
            coins.len()
        )));
    }
    if start >= g.num_vertices() {
        return Err(Error::OutOfRange { index: start as usize, len: g.num_vertices() as usize });
    }
    let b = g.base_coin_bits();
    let mut v = start;
    let mut vertices = Vec::with_capacity(t + 1);
    vertices.push(g.label(v));
    let mut at = 0;
    for _ in 0..t {
        for _ in 0..g.power {
            let mut c = 0usize;
            for i in 0..b {
                if coins.get(at + i) {
                    c |= 1 << i;
                }
            }
            at += b;
            v = g.base_neighbor(v, c % g.base_degree);
        }
        vertices.push(g.label(v));
    }
    Ok(WalkTranscript { start, coins: coins.slice(0, t * per)?, vertices })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// max |mu| over eigenvalues orthogonal to the constant vector.
    pub lambda: f64,
    /// Largest eigenvalue orthogonal to the constant vector (signed).
    pub lambda2: f64,
    pub source: BoundSource,
}

/// Power iteration with deflation of the constant vector. Graphs above
/// 2^14 vertices (or powered graphs) fall back to the analytic bound.
pub fn estimate_lambda(g: &ExpanderGraph) -> SpectralEstimate {
    if g.power != 1 || g.internal_vertices() > SPECTRAL_CAP {
        if g.power != 1 && g.internal_vertices() <= SPECTRAL_CAP {
            let mut base = g.clone();
            base.power = 1;
            let est = estimate_lambda(&base);
            return SpectralEstimate {
                lambda: est.lambda.powi(g.power as i32),
                lambda2: est.lambda2.powi(g.power as i32),
                source: BoundSource::Measured,
            };
        }
        return SpectralEstimate { lambda: g.lambda_bound, lambda2: g.lambda_bound, source: BoundSource::Analytic };
    }
    let n = g.internal_vertices() as usize;
    // |mu|^2 via A^2; signed lambda2 via (A + I)/2, which shifts the spectrum
    // into [0, 1] without reordering.
    let sq = power_iterate(n, |x, out| {
        let mut tmp = vec![0.0; n];
        g.apply(x, &mut tmp);
        g.apply(&tmp, out);
    });
    let shifted = power_iterate(n, |x, out| {
        g.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = 0.5 * (*o + xi);
        }
    });
    SpectralEstimate { lambda: sq.max(0.0).sqrt(), lambda2: 2.0 * shifted - 1.0, source: BoundSource::Measured }
}

/// Rayleigh quotient of a symmetric PSD operator restricted to the
/// complement of the constant vector, by power iteration.
fn power_iterate(n: usize, op: impl Fn(&[f64], &mut [f64])) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut y = vec![0.0; n];
    let deflate = |v: &mut [f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|a| *a -= mean);
    };
    let normalize = |v: &mut [f64]| {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|a| *a /= norm);
        }
        norm
    };
    deflate(&mut x);
    normalize(&mut x);
    let mut est = 0.0;
    for _ in 0..20_000 {
        op(&x, &mut y);
        deflate(&mut y);
        let rq: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let norm = normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
        if norm == 0.0 {
            return 0.0;
        }
        if (rq - est).abs() < 1e-14 {
            return rq;
        }
        est = rq;
    }
    est
}

/// Walk on a torus of side `m = 2^b` (`b <= 126`) with vertices kept as
/// coordinate pairs, for vertex sets beyond 128 bits. Coins are read as in
/// [`random_walk`]. Labels are `x || y` truncated to the label width; for
/// `m <= 2^64` they agree with [`random_walk`].
pub fn wide_torus_walk(g: &ExpanderGraph, start: &BitVector, t: usize, coins: &BitVector) -> Result<Vec<BitVector>> {
    let Topology::Torus { m } = g.topology else {
        return Err(Error::param("wide walks need a torus"));
    };
    if !m.is_power_of_two() {
        return Err(Error::param("wide walks need a power-of-two side"));
    }
    let b = m.trailing_zeros() as usize;
    let r = g.label_bits.unwrap_or(2 * b);
    crate::error::ensure_len(r, start.len())?;
    let per = g.coin_bits();
    if coins.len() < t * per {
        return Err(Error::param(format!("walk of {t} steps needs {} coin bits, got {}", t * per, coins.len())));
    }
    let mask = m - 1;
    let full = start.resized(2 * b);
    let (mut x, mut y) = (full.slice(0, b)?.to_u128(), full.slice(b, b)?.to_u128());
    let label = |x: u128, y: u128| BitVector::from_u128(x, b).concat(&BitVector::from_u128(y, b)).resized(r);
    let mut out = Vec::with_capacity(t + 1);
    out.push(label(x, y));
    let bits = g.base_coin_bits();
    let mut at = 0;
    for _ in 0..t {
        for _ in 0..g.power {
            let mut c = 0usize;
            for i in 0..bits {
                c |= (coins.get(at + i) as usize) << i;
            }
            at += bits;
            let (tx, ty) = (x.wrapping_mul(2), y.wrapping_mul(2));
            match c % g.base_degree {
                0 => x = x.wrapping_add(ty) & mask,
                1 => x = x.wrapping_sub(ty) & mask,
                2 => x = x.wrapping_add(ty).wrapping_add(1) & mask,
                3 => x = x.wrapping_sub(ty).wrapping_sub(1) & mask,
                4 => y = y.wrapping_add(tx) & mask,
                5 => y = y.wrapping_sub(tx) & mask,
                6 => y = y.wrapping_add(tx).wrapping_add(1) & mask,
                _ => y = y.wrapping_sub(tx).wrapping_sub(1) & mask,
            }
        }
        out.push(label(x, y));
    }
    Ok(out)
}
