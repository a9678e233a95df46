//! Designs, weak designs and design-extractor graphs.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::artifact::{seal, unseal};
use crate::bitcore::BitVector;
use crate::error::{Error, Result};
use crate::primitives::ExtractorDescriptor;

/// Node budget for the lexicographic design search.
const SEARCH_BUDGET: u64 = 50_000_000;

/// An (n, m, k, l)-design: m sets of size l in [n] with pairwise
/// intersections at most k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub universe: usize,
    pub set_size: usize,
    pub intersection_bound: usize,
    pub sets: Vec<Vec<usize>>,
}

impl Design {
    pub fn verify(&self) -> Result<()> {
        for (i, s) in self.sets.iter().enumerate() {
            check_set(s, self.set_size, self.universe, i)?;
        }
        for i in 0..self.sets.len() {
            for j in 0..i {
                let c = intersection(&self.sets[i], &self.sets[j]);
                if c > self.intersection_bound {
                    return Err(Error::Verification(format!(
                        "sets {j} and {i} share {c} > {} elements",
                        self.intersection_bound
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn to_artifact(&self) -> Value {
        seal(
            "design",
            json!({ "n": self.universe, "m": self.sets.len(), "k": self.intersection_bound, "l": self.set_size }),
            json!({ "sets": self.sets }),
        )
    }

    pub fn from_artifact(v: &Value) -> Result<Self> {
        let body = unseal(v, "design")?;
        let p = &body["params"];
        let d = Design {
            universe: get_usize(p, "n")?,
            set_size: get_usize(p, "l")?,
            intersection_bound: get_usize(p, "k")?,
            sets: serde_json::from_value(body["sets"].clone())?,
        };
        if d.sets.len() != get_usize(p, "m")? {
            return Err(Error::Verification("set count differs from params".into()));
        }
        d.verify()?;
        Ok(d)
    }
}

fn get_usize(p: &Value, key: &str) -> Result<usize> {
    p.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Parse(format!("missing integer field {key:?}")))
}

fn check_set(s: &[usize], size: usize, universe: usize, i: usize) -> Result<()> {
    if s.len() != size {
        return Err(Error::Verification(format!("set {i} has {} elements, expected {size}", s.len())));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Verification(format!("set {i} is not strictly increasing")));
    }
    if s.last().is_some_and(|&x| x >= universe) {
        return Err(Error::Verification(format!("set {i} leaves the universe [{universe}]")));
    }
    Ok(())
}

/// Size of the intersection of two sorted lists.
pub fn intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Greedy design: each new set is the lexicographically first l-subset of
/// [n] meeting every earlier set in at most k points.
pub fn build_design(n: usize, m: usize, k: usize, l: usize) -> Result<Design> {
    if l > n {
        return Err(Error::param(format!("set size {l} exceeds universe {n}")));
    }
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    // owner[x] lists the sets containing x
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut budget = SEARCH_BUDGET;
    for _ in 0..m {
        let mut counts = vec![0usize; sets.len()];
        let mut chosen = Vec::with_capacity(l);
        if !lex_search(n, l, k, 0, &owner, &mut counts, &mut chosen, &mut budget) {
            return Err(Error::Infeasible(format!(
                "no further {l}-subset of [{n}] fits after {} sets (k={k})",
                sets.len()
            )));
        }
        let idx = sets.len();
        for &x in &chosen {
            owner[x].push(idx);
        }
        sets.push(chosen);
    }
    let d = Design { universe: n, set_size: l, intersection_bound: k, sets };
    d.verify()?;
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn lex_search(
    n: usize,
    l: usize,
    k: usize,
    from: usize,
    owner: &[Vec<usize>],
    counts: &mut Vec<usize>,
    chosen: &mut Vec<usize>,
    budget: &mut u64,
) -> bool {
    if chosen.len() == l {
        return true;
    }
    let need = l - chosen.len();
    for x in from..=n - need {
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        if owner[x].iter().any(|&s| counts[s] >= k) {
            continue;
        }
        for &s in &owner[x] {
            counts[s] += 1;
        }
        chosen.push(x);
        if lex_search(n, l, k, x + 1, owner, counts, chosen, budget) {
            return true;
        }
        chosen.pop();
        for &s in &owner[x] {
            counts[s] -= 1;
        }
    }
    false
}

/// Weak design: m sets of size l in [d] with
/// `sum_{j<i} 2^{|S_i & S_j|} <= kappa (m - 1)` for every i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakDesign {
    pub universe: usize,
    pub set_size: usize,
    pub kappa: f64,
    pub sets: Vec<Vec<usize>>,
}

impl WeakDesign {
    /// Largest left-hand side of the weak-design inequality.
    pub fn max_overlap_sum(&self) -> f64 {
        (0..self.sets.len())
            .map(|i| overlap_sum(&self.sets[i], &self.sets[..i]))
            .fold(0.0, f64::max)
    }

    pub fn verify(&self) -> Result<()> {
        for (i, s) in self.sets.iter().enumerate() {
            check_set(s, self.set_size, self.universe, i)?;
        }
        let bound = self.kappa * (self.sets.len() as f64 - 1.0);
        for i in 0..self.sets.len() {
            let sum = overlap_sum(&self.sets[i], &self.sets[..i]);
            if sum > bound + 1e-9 {
                return Err(Error::Verification(format!(
                    "set {i}: overlap sum {sum} exceeds kappa*(m-1) = {bound}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_artifact(&self) -> Value {
        seal(
            "weak_design",
            json!({ "d": self.universe, "m": self.sets.len(), "l": self.set_size, "kappa": self.kappa }),
            json!({ "sets": self.sets }),
        )
    }

    pub fn from_artifact(v: &Value) -> Result<Self> {
        let body = unseal(v, "weak_design")?;
        let p = &body["params"];
        let wd = WeakDesign {
            universe: get_usize(p, "d")?,
            set_size: get_usize(p, "l")?,
            kappa: p["kappa"].as_f64().ok_or_else(|| Error::Parse("missing kappa".into()))?,
            sets: serde_json::from_value(body["sets"].clone())?,
        };
        if wd.sets.len() != get_usize(p, "m")? {
            return Err(Error::Verification("set count differs from params".into()));
        }
        wd.verify()?;
        Ok(wd)
    }
}

fn overlap_sum(s: &[usize], earlier: &[Vec<usize>]) -> f64 {
    earlier.iter().map(|t| 2f64.powi(intersection(s, t) as i32)).sum()
}

/// Finite field of prime-power order q, via full tables (small q only).
#[derive(Clone, Debug)]
pub struct SmallField {
    pub q: usize,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl SmallField {
    pub fn new(q: usize) -> Result<Self> {
        let (p, e) = prime_power(q).ok_or_else(|| Error::param(format!("{q} is not a prime power")))?;
        if q > 4096 {
            return Err(Error::param(format!("field order {q} too large for tables")));
        }
        let modulus = if e == 1 { vec![0, 1] } else { find_irreducible(p, e) };
        let digits = |mut v: usize| {
            let mut d = vec![0usize; e];
            for slot in d.iter_mut() {
                *slot = v % p;
                v /= p;
            }
            d
        };
        let undigits = |d: &[usize]| d.iter().rev().fold(0usize, |acc, &x| acc * p + x);
        let mut add = vec![0u32; q * q];
        let mut mul = vec![0u32; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let s: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = undigits(&s) as u32;
                let mut prod = vec![0usize; 2 * e];
                for i in 0..e {
                    for j in 0..e {
                        prod[i + j] = (prod[i + j] + da[i] * db[j]) % p;
                    }
                }
                if e > 1 {
                    // reduce by the monic modulus of degree e
                    for deg in (e..2 * e - 1).rev() {
                        let c = prod[deg];
                        if c != 0 {
                            for (t, &mc) in modulus.iter().enumerate().take(e) {
                                prod[deg - e + t] = (prod[deg - e + t] + p - (c * mc) % p) % p;
                            }
                            prod[deg] = 0;
                        }
                    }
                }
                mul[a * q + b] = undigits(&prod[..e]) as u32;
            }
        }
        Ok(SmallField { q, add, mul })
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.q + b] as usize
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.q + b] as usize
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
    pub fn eval_poly(&self, coeffs: &[usize], x: usize) -> usize {
        coeffs.iter().rev().fold(0, |acc, &c| self.add(self.mul(acc, x), c))
    }
}

fn prime_power(q: usize) -> Option<(usize, usize)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|p| q.is_multiple_of(*p))?;
    let (mut r, mut e) = (q, 0);
    while r % p == 0 {
        r /= p;
        e += 1;
    }
    (r == 1).then_some((p, e))
}

pub fn smallest_prime_power_at_least(l: usize) -> usize {
    (l.max(2)..).find(|&q| prime_power(q).is_some()).expect("prime powers are unbounded")
}

/// Largest prime power `<= c` (`c >= 2`).
pub fn largest_prime_power_at_most(c: usize) -> usize {
    (2..=c).rev().find(|&q| prime_power(q).is_some()).unwrap_or(2)
}

/// Monic irreducible of degree e over F_p as coefficient list (length e+1),
/// least in base-p order; found by trial division.
fn find_irreducible(p: usize, e: usize) -> Vec<usize> {
    let count = p.pow(e as u32);
    'cand: for v in 0..count {
        let mut f: Vec<usize> = (0..e).map(|i| v / p.pow(i as u32) % p).collect();
        f.push(1);
        for deg in 1..=e / 2 {
            for w in 0..p.pow(deg as u32) {
                let mut g: Vec<usize> = (0..deg).map(|i| w / p.pow(i as u32) % p).collect();
                g.push(1);
                if poly_divides(&g, &f, p) {
                    continue 'cand;
                }
            }
        }
        return f;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn poly_divides(g: &[usize], f: &[usize], p: usize) -> bool {
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    for top in (dg..r.len()).rev() {
        let c = r[top] % p;
        if c != 0 {
            for (i, &gi) in g.iter().enumerate() {
                let idx = top - dg + i;
                r[idx] = (r[idx] + p - (c * gi) % p) % p;
            }
        }
    }
    r.iter().take(dg).all(|&x| x % p == 0)
}

/// Weak design on a universe of `c * l` points, `c = ceil(l / ln kappa)`,
/// split into `l` blocks of `c`. Candidate sets are graphs of polynomials
/// over F_q (q the largest prime power <= c), the j-th block taking the
/// value at point `j mod q`; candidates go in order of degree then
/// coefficients and are kept when they satisfy the weak-design inequality
/// against the sets kept so far.
pub fn build_weak_design(m: usize, kappa: f64, l: usize) -> Result<WeakDesign> {
    if kappa.is_nan() || kappa <= 1.0 {
        return Err(Error::param(format!("kappa must exceed 1, got {kappa}")));
    }
    if l == 0 || m == 0 {
        return Err(Error::param("weak design needs l >= 1 and m >= 1"));
    }
    let c = (l as f64 / kappa.ln()).ceil().max(1.0) as usize;
    let universe = c * l;
    let bound = kappa * (m as f64 - 1.0);
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(m);
    let try_push = |set: Vec<usize>, sets: &mut Vec<Vec<usize>>| {
        if overlap_sum(&set, sets) <= bound + 1e-9 {
            sets.push(set);
        }
    };

    if c == 1 {
        try_push((0..l).collect(), &mut sets);
    } else {
        let q = largest_prime_power_at_most(c);
        let field = SmallField::new(q)?;
        let mut candidates = 0u64;
        'deg: for deg in 0..l.min(q) {
            let count = (q as u64).checked_pow(deg as u32 + 1).unwrap_or(u64::MAX);
            for idx in 0..count {
                if sets.len() == m {
                    break 'deg;
                }
                candidates += 1;
                if candidates > SEARCH_BUDGET {
                    break 'deg;
                }
                let coeffs: Vec<usize> = (0..=deg)
                    .map(|i| (idx / (q as u64).pow(i as u32) % q as u64) as usize)
                    .collect();
                // a zero leading coefficient repeats a lower degree
                if deg > 0 && coeffs[deg] == 0 {
                    continue;
                }
                let set = (0..l).map(|j| j * c + field.eval_poly(&coeffs, j % q)).collect();
                try_push(set, &mut sets);
            }
        }
    }
    if sets.len() < m {
        return Err(Error::Infeasible(format!(
            "weak design (m={m}, kappa={kappa}, l={l}) found only {} sets",
            sets.len()
        )));
    }
    let wd = WeakDesign { universe, set_size: l, kappa, sets };
    wd.verify()?;
    Ok(wd)
}

/// Bipartite graph on [N] x [M] with left degree D. Left vertex `v` keeps
/// the base extractor's outputs over all seeds as its neighbors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignExtractorGraph {
    pub left: usize,
    pub right: usize,
    pub degree: usize,
    /// Candidate label of each surviving left vertex.
    pub labels: Vec<u64>,
    /// Sorted neighbor sets.
    pub neighbors: Vec<Vec<usize>>,
    pub alpha: f64,
    pub k_bound: usize,
    pub eps: f64,
    pub base: String,
}

impl DesignExtractorGraph {
    /// Largest pairwise neighborhood intersection.
    pub fn max_intersection(&self) -> usize {
        let mut best = 0;
        for i in 0..self.neighbors.len() {
            for j in 0..i {
                best = best.max(intersection(&self.neighbors[i], &self.neighbors[j]));
            }
        }
        best
    }

    /// Design property: every pair shares at most `alpha * D` neighbors.
    pub fn verify_design_property(&self) -> Result<()> {
        let limit = self.alpha * self.degree as f64 + 1e-9;
        for i in 0..self.neighbors.len() {
            for j in 0..i {
                let c = intersection(&self.neighbors[i], &self.neighbors[j]);
                if c as f64 > limit {
                    return Err(Error::Verification(format!(
                        "left vertices {j} and {i} share {c} neighbors > alpha*D = {}",
                        self.alpha * self.degree as f64
                    )));
                }
            }
        }
        for (i, nb) in self.neighbors.iter().enumerate() {
            if nb.windows(2).any(|w| w[0] >= w[1]) || nb.last().is_some_and(|&x| x >= self.right) {
                return Err(Error::Verification(format!("neighbor list {i} malformed")));
            }
        }
        Ok(())
    }

    /// Left vertices whose neighbor density in `s` is more than `eps` from
    /// the density of `s`.
    pub fn bad_set(&self, s: &BitVector) -> Vec<usize> {
        let rho_s = s.weight() as f64 / self.right as f64;
        (0..self.neighbors.len())
            .filter(|&v| {
                let hit = self.neighbors[v].iter().filter(|&&j| s.get(j)).count();
                (hit as f64 / self.degree as f64 - rho_s).abs() > self.eps + 1e-12
            })
            .collect()
    }

    /// Runs the extractor-property check on the two trivial subsets and
    /// `samples` uniformly random ones; returns the largest Bad_S seen.
    pub fn sampled_bad_max<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> usize {
        let mut worst = verify_extractor_property(self, &BitVector::zeros(self.right))
            .max(verify_extractor_property(self, &BitVector::ones(self.right)));
        for _ in 0..samples {
            let s = BitVector::random(self.right, rng);
            worst = worst.max(verify_extractor_property(self, &s));
        }
        worst
    }

    pub fn verify(&self) -> Result<()> {
        if self.labels.len() != self.left || self.neighbors.len() != self.left {
            return Err(Error::Verification("left vertex count mismatch".into()));
        }
        self.verify_design_property()
    }

    pub fn to_artifact(&self) -> Value {
        seal(
            "design_extractor",
            json!({
                "N": self.left, "M": self.right, "D": self.degree, "alpha": self.alpha,
                "K": self.k_bound, "eps": self.eps, "base": self.base,
            }),
            json!({ "labels": self.labels, "neighbors": self.neighbors }),
        )
    }

    pub fn from_artifact(v: &Value) -> Result<Self> {
        let body = unseal(v, "design_extractor")?;
        let p = &body["params"];
        let g = DesignExtractorGraph {
            left: get_usize(p, "N")?,
            right: get_usize(p, "M")?,
            degree: get_usize(p, "D")?,
            labels: serde_json::from_value(body["labels"].clone())?,
            neighbors: serde_json::from_value(body["neighbors"].clone())?,
            alpha: p["alpha"].as_f64().ok_or_else(|| Error::Parse("missing alpha".into()))?,
            k_bound: get_usize(p, "K")?,
            eps: p["eps"].as_f64().ok_or_else(|| Error::Parse("missing eps".into()))?,
            base: p["base"].as_str().unwrap_or_default().to_owned(),
        };
        g.verify()?;
        Ok(g)
    }
}

/// |Bad_S| for a right subset `s`.
pub fn verify_extractor_property(g: &DesignExtractorGraph, s: &BitVector) -> usize {
    g.bad_set(s).len()
}

/// Greedy design extractor: scan left candidates `0..2^n0` in order, keep a
/// candidate when its neighbor set meets every kept one in at most
/// `alpha * D` points, stop at `target` survivors (all survivors if `None`).
pub fn build_design_extractor(
    base: &ExtractorDescriptor,
    alpha: f64,
    k_bound: usize,
    target: Option<usize>,
    eps: f64,
) -> Result<DesignExtractorGraph> {
    if base.n > 30 || base.d > 20 || base.m > 30 {
        return Err(Error::param("base extractor too large to tabulate"));
    }
    let degree = 1usize << base.d;
    let right = 1usize << base.m;
    let limit = alpha * degree as f64 + 1e-9;
    let seeds: Vec<BitVector> = (0..degree as u64).map(|u| BitVector::from_u64(u, base.d)).collect();
    let mut labels = Vec::new();
    let mut neighbors: Vec<Vec<usize>> = Vec::new();
    for v in 0..1u64 << base.n {
        if Some(labels.len()) == target {
            break;
        }
        let x = BitVector::from_u64(v, base.n);
        let mut nb: Vec<usize> = seeds.iter().map(|u| base.eval_unchecked(&x, u).to_u64() as usize).collect();
        nb.sort_unstable();
        nb.dedup();
        if neighbors.iter().all(|other| intersection(&nb, other) as f64 <= limit) {
            labels.push(v);
            neighbors.push(nb);
        }
    }
    if let Some(t) = target.filter(|&t| labels.len() < t) {
        return Err(Error::Infeasible(format!(
            "only {} of {t} left vertices survive alpha = {alpha}",
            labels.len()
        )));
    }
    let g = DesignExtractorGraph {
        left: labels.len(),
        right,
        degree,
        labels,
        neighbors,
        alpha,
        k_bound,
        eps,
        base: base.tree.hash(),
    };
    g.verify()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::pairwise_sampler_extractor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_designs() {
        let d = build_design(8, 2, 0, 4).unwrap();
        assert_eq!(d.sets, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let d = build_design(4, 1, 0, 4).unwrap();
        assert_eq!(d.sets, vec![vec![0, 1, 2, 3]]);
        assert!(matches!(build_design(8, 3, 0, 4), Err(Error::Infeasible(_))));
    }

    // Exhaustive oracle: enumerate all 4-subsets of [10], greedily.
    #[test]
    fn design_matches_exhaustive_greedy() {
        let d = build_design(10, 3, 2, 4).unwrap();
        let mut all = Vec::new();
        for a in 0..10 {
            for b in a + 1..10 {
                for c in b + 1..10 {
                    for e in c + 1..10 {
                        all.push(vec![a, b, c, e]);
                    }
                }
            }
        }
        let mut picked: Vec<Vec<usize>> = Vec::new();
        for s in all {
            if picked.len() == 3 {
                break;
            }
            if picked.iter().all(|t| intersection(&s, t) <= 2) {
                picked.push(s);
            }
        }
        assert_eq!(d.sets, picked);
    }

    #[test]
    fn design_artifact_roundtrip() {
        let d = build_design(12, 5, 1, 3).unwrap();
        let back = Design::from_artifact(&d.to_artifact()).unwrap();
        assert_eq!(back, d);
        let mut bad = d.to_artifact();
        bad["sets"][1] = json!([0, 1, 2]);
        assert!(Design::from_artifact(&bad).is_err());
    }

    #[test]
    fn weak_design_examples() {
        let wd = build_weak_design(1, 2.0, 5).unwrap();
        assert_eq!(wd.sets.len(), 1);
        assert_eq!(wd.universe, (5.0f64 / 2f64.ln()).ceil() as usize * 5);
        let wd = build_weak_design(4, 2.0, 4).unwrap();
        assert_eq!(wd.universe, 24);
        // direct recomputation of the sum bound
        for i in 0..4 {
            let s: f64 = (0..i).map(|j| 2f64.powi(intersection(&wd.sets[i], &wd.sets[j]) as i32)).sum();
            assert!(s <= 2.0 * 3.0);
        }
        // constant polynomials first: pairwise disjoint sets
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(intersection(&wd.sets[i], &wd.sets[j]), 0);
            }
        }
        assert!(build_weak_design(3, 1.0, 4).is_err());
    }

    #[test]
    fn weak_design_many_sets() {
        for (m, kappa, l) in [(40usize, 2.0, 6usize), (100, 1.5, 8), (30, 4.0, 9)] {
            let wd = build_weak_design(m, kappa, l).unwrap();
            assert_eq!(wd.sets.len(), m);
            wd.verify().unwrap();
            assert!(wd.max_overlap_sum() <= kappa * (m as f64 - 1.0));
            let back = WeakDesign::from_artifact(&wd.to_artifact()).unwrap();
            assert_eq!(back, wd);
        }
    }

    #[test]
    fn small_fields() {
        for q in [2usize, 3, 4, 5, 8, 9, 25, 27] {
            let f = SmallField::new(q).unwrap();
            for a in 1..q {
                let hits: std::collections::BTreeSet<usize> = (0..q).map(|b| f.mul(a, b)).collect();
                assert_eq!(hits.len(), q, "q={q}");
            }
            for a in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
        assert!(SmallField::new(6).is_err());
        assert_eq!(smallest_prime_power_at_least(6), 7);
        assert_eq!(smallest_prime_power_at_least(9), 9);
        assert_eq!(largest_prime_power_at_most(6), 5);
        assert_eq!(largest_prime_power_at_most(20), 19);
    }

    fn embed_append(l: usize, d: usize, m0: usize) -> ExtractorDescriptor {
        pairwise_sampler_extractor(l, d, m0).unwrap().with_seed_appended()
    }

    // Independent greedy over explicit neighbor lists.
    fn greedy_oracle(nbs: &[Vec<usize>], limit: usize) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::new();
        for (i, nb) in nbs.iter().enumerate() {
            let ok = kept.iter().all(|&k| nb.iter().filter(|x| nbs[k].contains(x)).count() <= limit);
            if ok {
                kept.push(i);
            }
        }
        kept
    }

    #[test]
    fn design_extractor_small_instance() {
        // n0 = 6, d0 = 3: one extracted bit and three seed bits, M = 16
        let base = embed_append(3, 3, 1);
        let g = build_design_extractor(&base, 0.5, 64, None, 0.25).unwrap();
        assert_eq!(g.degree, 8);
        assert_eq!(g.right, 16);
        assert!(g.neighbors.iter().all(|nb| nb.len() == 8));
        let all = build_design_extractor(&base, 1.0, 64, None, 0.25).unwrap();
        assert_eq!(all.left, 64);
        let kept = greedy_oracle(&all.neighbors, 4);
        assert_eq!(g.labels, kept.iter().map(|&i| i as u64).collect::<Vec<_>>());
        g.verify_design_property().unwrap();
        assert!(build_design_extractor(&base, 0.5, 64, Some(g.left + 1), 0.25).is_err());
    }

    #[test]
    fn design_extractor_alpha_one_and_duplicates() {
        let base = embed_append(4, 2, 2);
        let g = build_design_extractor(&base, 1.0, 256, None, 0.25).unwrap();
        assert_eq!(g.left, 256);
        // v = 0 and v = 4 both have B = 0 and A = 0 mod 4: identical neighbors
        assert_eq!(g.neighbors[0], g.neighbors[4]);
        let strict = build_design_extractor(&base, 0.75, 256, None, 0.25).unwrap();
        assert!(strict.labels.contains(&0));
        assert!(!strict.labels.contains(&4));
    }

    #[test]
    fn bad_set_trivial_and_recount() {
        let base = embed_append(4, 2, 2);
        let g = build_design_extractor(&base, 0.25, 16, Some(8), 0.25).unwrap();
        assert_eq!(verify_extractor_property(&g, &BitVector::ones(16)), 0);
        assert_eq!(verify_extractor_property(&g, &BitVector::zeros(16)), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let s = BitVector::random(16, &mut rng);
            let rho = s.weight() as f64 / 16.0;
            let recount = g
                .neighbors
                .iter()
                .filter(|nb| {
                    let hit = nb.iter().filter(|&&j| s.get(j)).count() as f64 / 4.0;
                    (hit - rho).abs() > 0.25
                })
                .count();
            assert_eq!(verify_extractor_property(&g, &s), recount);
        }
        let back = DesignExtractorGraph::from_artifact(&g.to_artifact()).unwrap();
        assert_eq!(back, g);
    }
}
