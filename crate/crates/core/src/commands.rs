//! Library side of the `locext` command line: each function takes parsed
//! arguments and returns JSON (or bits) for the binary to print.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::amplifier::{desk16, PipelineProfile};
use crate::applications::{nz_prg, parallel_rlf, Hypergraph, Predicate};
use crate::artifact::{read_json, write_json};
use crate::bitcore::BitVector;
use crate::bitfix::{desk_design_extractor, nobf_witness, obf_to_nobf, BitFixingSource, ResilientFunction, TribesOfMajorities};
use crate::combinatorics::{build_design, build_weak_design, Design, DesignExtractorGraph, WeakDesign};
use crate::condenser::{build_condenser_matrix, CondenserParams};
use crate::error::{ensure_len, Error, Result};
use crate::experiment::ConstructionSpec;
use crate::harness::{locality_audit, prng, LocalityReport};
use crate::nisan::nisan_expand_bits;

pub fn parse_bits(text: &str) -> Result<BitVector> {
    if text.contains(':') {
        BitVector::from_hex(text)
    } else {
        BitVector::from_bit_str(text)
    }
}

/// Explicit seed if given, otherwise `len` bits drawn from the PRNG seed.
pub fn seed_or_random(seed: Option<&str>, len: usize, prng_seed: u64) -> Result<BitVector> {
    match seed {
        Some(s) => {
            let b = parse_bits(s)?;
            ensure_len(len, b.len())?;
            Ok(b)
        }
        None => Ok(BitVector::random(len, &mut prng(prng_seed))),
    }
}

pub fn extract(spec: &ConstructionSpec, x: &BitVector, seed: &BitVector) -> Result<Value> {
    let ext = spec.build()?;
    let y = ext.evaluate(x, seed)?;
    Ok(json!({
        "output": y.to_hex(),
        "n": ext.n, "d": ext.d, "m": ext.m,
        "locality_claim": ext.locality_claim,
        "tree_hash": ext.tree.hash(),
    }))
}

pub fn condenser_params(n: usize, k: usize, rows: Option<usize>) -> Result<CondenserParams> {
    let p = CondenserParams::new(n, k)?;
    Ok(match rows {
        Some(t) => p.with_rows(t),
        None => p,
    })
}

pub fn condense(p: &CondenserParams, x: &BitVector, seed: &BitVector, with_matrix: bool) -> Result<Value> {
    let mat = build_condenser_matrix(seed, p)?;
    let mut out = json!({
        "output": mat.apply(x)?.to_hex(),
        "params": p,
        "max_row_weight": mat.max_weight(),
        "clipped_rows": mat.clipped(),
    });
    if with_matrix {
        out["matrix"] = mat.to_json(seed);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SourceFile {
    n: usize,
    free: Vec<usize>,
    fixed: BitVector,
}

pub fn read_bit_fixing_source(text: &str) -> Result<BitFixingSource> {
    let f: SourceFile = serde_json::from_str(text)?;
    BitFixingSource::new(f.n, f.free, f.fixed)
}

/// Output of the parity-then-tribes extractor on `src` with free bits set
/// from `assign`, plus the recomputed witness for the source.
pub fn bitfix_extract(
    src: &BitFixingSource,
    assign: u64,
    g: &DesignExtractorGraph,
    outputs: usize,
    t_max: usize,
) -> Result<Value> {
    let x = src.assign(assign);
    let y = obf_to_nobf(&x, g)?;
    let rf = TribesOfMajorities::balanced(g.left, outputs)?;
    let z = rf.eval(&y);
    Ok(json!({
        "input": x.to_hex(),
        "nobf": y.to_hex(),
        "output": z.to_hex(),
        "resilient": rf,
        "witness": nobf_witness(src, g, t_max)?,
        "graph_hash": g.to_artifact()["hash"],
        "graph_scale": graph_scale(g, src.n),
    }))
}

/// Graph sizes next to the sizes the asymptotic analysis asks for
/// (N = n^(1/0.3), K = n^(1/0.9)); desk graphs are far smaller.
pub fn graph_scale(g: &DesignExtractorGraph, n: usize) -> Value {
    let n = n as f64;
    json!({
        "left": g.left, "right": g.right, "degree": g.degree,
        "alpha": g.alpha, "eps": g.eps, "k_bound": g.k_bound,
        "asymptotic_left": n.powf(1.0 / 0.3).round(),
        "asymptotic_k": n.powf(1.0 / 0.9).round(),
        "shrunk": (g.left as f64) < n.powf(1.0 / 0.3),
    })
}

pub fn gen_design(n: usize, m: usize, k: usize, l: usize) -> Result<Value> {
    Ok(build_design(n, m, k, l)?.to_artifact())
}

pub fn gen_weak_design(m: usize, kappa: f64, l: usize) -> Result<Value> {
    Ok(build_weak_design(m, kappa, l)?.to_artifact())
}

/// Artifacts shipped with the crate, keyed by file name.
pub fn shipped_artifacts() -> Result<Vec<(&'static str, Value)>> {
    Ok(vec![
        ("desk16_profile.json", desk16()?.to_artifact()),
        ("design_32_8_2_8.json", gen_design(32, 8, 2, 8)?),
        ("weak_design_16_6.json", gen_weak_design(16, 2.0, 6)?),
        ("design_extractor_desk.json", desk_design_extractor()?.to_artifact()),
    ])
}

pub fn write_shipped(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (name, v) in shipped_artifacts()? {
        let path = dir.join(name);
        write_json(&path, &v)?;
        verify_artifact(&read_json(&path)?)?;
        out.push(path);
    }
    Ok(out)
}

/// Rebuilds the artifact from its body, rechecking hash and bounds.
pub fn verify_artifact(v: &Value) -> Result<String> {
    let kind = v.get("kind").and_then(Value::as_str).unwrap_or("");
    match kind {
        "design" => {
            let d = Design::from_artifact(v)?;
            Ok(format!("design: {} sets of size {} in [{}], overlaps <= {}", d.len(), d.set_size, d.universe, d.intersection_bound))
        }
        "weak_design" => {
            let d = WeakDesign::from_artifact(v)?;
            Ok(format!("weak design: {} sets of size {}, overlap sum {:.3}", d.sets.len(), d.set_size, d.max_overlap_sum()))
        }
        "design_extractor" => {
            let g = DesignExtractorGraph::from_artifact(v)?;
            Ok(format!("design extractor: N={} M={} D={} max overlap {}", g.left, g.right, g.degree, g.max_intersection()))
        }
        "amplifier_profile" => {
            let p = PipelineProfile::from_artifact(v)?;
            Ok(format!("profile {}: n={} seed={} output={}", p.name, p.n, p.seed_len(), p.output_len()))
        }
        other => Err(Error::Parse(format!("unknown artifact kind {other:?}"))),
    }
}

pub fn verify_artifact_dir(dir: &Path) -> Result<Vec<(PathBuf, String)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| Ok((p.clone(), verify_artifact(&read_json(&p)?)?))).collect()
}

pub fn prg_nisan(w: usize, k: usize, seed: &BitVector) -> Result<BitVector> {
    nisan_expand_bits(w, k, seed)
}

pub fn prg_rlf(graph: &Hypergraph, q: &Predicate, xs: &[BitVector]) -> Result<BitVector> {
    parallel_rlf(graph, q, xs)
}

pub fn prg_nz(spec: &ConstructionSpec, rounds: usize, seed: &BitVector) -> Result<BitVector> {
    nz_prg(seed, &spec.build()?, rounds)
}

pub fn audit_locality(spec: &ConstructionSpec, seed: Option<&str>, trials: usize, prng_seed: u64) -> Result<LocalityReport> {
    let ext = spec.build()?;
    let seed = seed_or_random(seed, ext.d, prng_seed)?;
    let mut rng = prng(prng_seed ^ 0x5eed);
    locality_audit(&ext, &seed, trials, &mut rng)
}

/// The resilient function used by `bitfix-extract`, for callers that want it.
pub fn default_resilient(inputs: usize, outputs: usize) -> Result<Arc<dyn ResilientFunction>> {
    Ok(Arc::new(TribesOfMajorities::balanced(inputs, outputs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_files_match_generators() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("artifacts");
        for (name, v) in shipped_artifacts().unwrap() {
            let on_disk = read_json(&dir.join(name)).unwrap();
            assert_eq!(on_disk["hash"], v["hash"], "{name} is stale; rerun gen-design shipped");
        }
    }

    #[test]
    fn artifact_tamper_is_caught() {
        let mut v = gen_design(16, 4, 1, 4).unwrap();
        assert!(verify_artifact(&v).is_ok());
        v["sets"][1] = v["sets"][0].clone();
        assert!(verify_artifact(&v).is_err());
        assert!(verify_artifact(&json!({"kind": "mystery"})).is_err());
    }

    #[test]
    fn bitfix_report() {
        let g = desk_design_extractor().unwrap();
        let src = read_bit_fixing_source(r#"{"n":16,"free":[0,1,2,3,4,5,6,7,8,9,10,11],"fixed":"16:0000"}"#).unwrap();
        let r = bitfix_extract(&src, 0xabc, &g, 2, 2).unwrap();
        assert_eq!(r["witness"]["t_wise"], 2);
        assert_eq!(r["graph_scale"]["shrunk"], true);
        assert_eq!(parse_bits(r["output"].as_str().unwrap()).unwrap().len(), 2);
    }

    #[test]
    fn seeds() {
        assert_eq!(seed_or_random(None, 9, 1).unwrap(), seed_or_random(None, 9, 1).unwrap());
        assert!(seed_or_random(Some("101"), 4, 0).is_err());
        assert_eq!(parse_bits("4:a").unwrap(), parse_bits("0101").unwrap());
    }
}
