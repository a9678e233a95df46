//! Buildable construction specs and reproducible experiment runs.
//!
//! A config names a construction, a source family, a measurement, a budget
//! and a PRNG seed. The report embeds the config hash, the construction
//! tree hash and every raw number so a run can be rebuilt and re-checked.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::amplifier::{desk16, desk_profile};
use crate::artifact::content_hash;
use crate::bitcore::BitVector;
use crate::compositions::{condense_then_extract_descriptor, error_reduction_descriptor, ErrorReductionParams};
use crate::condenser::{CondenserDescriptor, CondenserParams};
use crate::error::{Error, Result};
use crate::harness::{
    extractor_error_exact, linear_affine_error_exact, locality_audit, prng, random_affine, random_bit_fixing,
    random_flat, SourceSpec, PRNG_NAME,
};
use crate::primitives::{
    leftover_hash_descriptor, leftover_hash_extractor, pairwise_sampler_extractor, trevisan_extractor, ExtractorDescriptor,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionSpec {
    LeftoverHash {
        n: usize,
        m: usize,
    },
    /// Leftover hash with `m = k - 2 delta` and claimed error `2^-delta`.
    StrongLeftoverHash {
        n: usize,
        k: usize,
        delta: usize,
    },
    PairwiseSampler {
        l: usize,
        d: usize,
        m: usize,
        #[serde(default)]
        embed_seed: bool,
    },
    Trevisan {
        n: usize,
        m: usize,
        kappa: f64,
        #[serde(default)]
        symbol_bits: Option<usize>,
    },
    /// The amplified basic extractor; `profile: "desk16"` or explicit sizes.
    Basic {
        #[serde(default)]
        profile: Option<String>,
        #[serde(default)]
        n: usize,
        #[serde(default)]
        c2: usize,
        #[serde(default)]
        blocks: usize,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        eps: f64,
    },
    ErrorReduction {
        t1: usize,
        t2: usize,
        delta1: f64,
        eps0: f64,
        eps1: f64,
        inner0: Box<ConstructionSpec>,
        inner1: Box<ConstructionSpec>,
    },
    /// Low-locality condenser with `rows` outputs (default 10k), then `ext`.
    CondenseThenExtract {
        n: usize,
        k: usize,
        #[serde(default)]
        rows: Option<usize>,
        ext: Box<ConstructionSpec>,
    },
}

impl ConstructionSpec {
    pub fn build(&self) -> Result<ExtractorDescriptor> {
        Ok(match self {
            ConstructionSpec::LeftoverHash { n, m } => leftover_hash_descriptor(*n, *m)?,
            ConstructionSpec::StrongLeftoverHash { n, k, delta } => leftover_hash_extractor(*n, *k, *delta)?,
            ConstructionSpec::PairwiseSampler { l, d, m, embed_seed } => {
                let e = pairwise_sampler_extractor(*l, *d, *m)?;
                if *embed_seed {
                    e.with_seed_embedding()?
                } else {
                    e
                }
            }
            ConstructionSpec::Trevisan { n, m, kappa, symbol_bits } => trevisan_extractor(*n, *m, *kappa, *symbol_bits)?,
            ConstructionSpec::Basic { profile, n, c2, blocks, m, eps } => match profile.as_deref() {
                Some("desk16") => desk16()?.descriptor(),
                Some(other) => return Err(Error::param(format!("unknown profile {other:?}"))),
                None => desk_profile(*n, *c2, *blocks, *m, 0, 0, *eps)?.descriptor(),
            },
            ConstructionSpec::ErrorReduction { t1, t2, delta1, eps0, eps1, inner0, inner1 } => {
                let p = ErrorReductionParams::new(*t1, *t2, *delta1, inner0.build()?, inner1.build()?)?;
                error_reduction_descriptor(&p, *eps0, *eps1)
            }
            ConstructionSpec::CondenseThenExtract { n, k, rows, ext } => {
                let mut p = CondenserParams::new(*n, *k)?;
                if let Some(t) = rows {
                    p = p.with_rows(*t);
                }
                condense_then_extract_descriptor(&CondenserDescriptor::from_params(&p)?, &ext.build()?)?
            }
        })
    }

    /// Inline JSON, or a path to a JSON file.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim_start();
        if t.starts_with('{') {
            Ok(serde_json::from_str(t)?)
        } else {
            Ok(serde_json::from_str(&std::fs::read_to_string(text)?)?)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Flat,
    BitFixing,
    Affine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub n: usize,
    pub k: usize,
}

impl SourceConfig {
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<SourceSpec> {
        match self.kind {
            SourceKind::Flat => random_flat(self.n, self.k, rng),
            SourceKind::BitFixing => random_bit_fixing(self.n, self.k, rng),
            SourceKind::Affine => random_affine(self.n, self.k, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// Exact SD of (seed, output) from uniform, enumerating the support.
    ExactError,
    /// Rank formula for linear extractors on affine sources.
    AffineError,
    /// Toggling audit at random seeds; one value per seed.
    Locality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Sources drawn (or seeds audited for locality).
    pub samples: usize,
    /// Random inputs per locality audit of a non-linear extractor.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub construction: ConstructionSpec,
    pub source: SourceConfig,
    pub measurement: Measurement,
    pub budget: Budget,
    pub prng_seed: u64,
}

impl ExperimentConfig {
    pub fn hash(&self) -> String {
        content_hash(&serde_json::to_value(self).expect("config serializes"))
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Value> {
    let ext = cfg.construction.build()?;
    if cfg.source.n != ext.n && cfg.measurement != Measurement::Locality {
        return Err(Error::LengthMismatch { expected: ext.n, got: cfg.source.n });
    }
    let mut rng = prng(cfg.prng_seed);
    let start = Instant::now();
    let mut raw = Vec::with_capacity(cfg.budget.samples);
    for _ in 0..cfg.budget.samples {
        let v = match cfg.measurement {
            Measurement::ExactError => extractor_error_exact(&ext, &cfg.source.draw(&mut rng)?.support()?)?,
            Measurement::AffineError => match cfg.source.draw(&mut rng)? {
                SourceSpec::Affine { basis, .. } => linear_affine_error_exact(&ext, &basis)?,
                _ => return Err(Error::param("affine_error needs affine sources")),
            },
            Measurement::Locality => {
                let seed = BitVector::random(ext.d, &mut rng);
                locality_audit(&ext, &seed, cfg.budget.trials, &mut rng)?.max as f64
            }
        };
        raw.push(v);
    }
    let claim = match cfg.measurement {
        Measurement::Locality => ext.locality_claim as f64,
        _ => ext.eps_claim,
    };
    let within = raw.iter().filter(|&&v| v <= claim + 1e-12).count();
    Ok(json!({
        "config": cfg,
        "config_hash": cfg.hash(),
        "profile_hash": ext.tree.hash(),
        "tree": ext.tree,
        "prng": PRNG_NAME,
        "claim": claim,
        "raw": raw,
        "summary": {
            "max": raw.iter().copied().fold(f64::NAN, f64::max),
            "mean": raw.iter().sum::<f64>() / raw.len().max(1) as f64,
            "within_claim": within,
            "samples": raw.len(),
        },
        "elapsed_ms": start.elapsed().as_millis() as u64,
    }))
}

/// Checks that the stored config hash matches the stored config and that the
/// construction still rebuilds to the same tree; returns a text summary.
pub fn summarize_report(report: &Value) -> Result<String> {
    let cfg: ExperimentConfig = serde_json::from_value(report["config"].clone())?;
    if report["config_hash"].as_str() != Some(cfg.hash().as_str()) {
        return Err(Error::Verification("config hash does not match the embedded config".into()));
    }
    let tree_hash = cfg.construction.build()?.tree.hash();
    if report["profile_hash"].as_str() != Some(tree_hash.as_str()) {
        return Err(Error::Verification("construction no longer rebuilds to the recorded tree".into()));
    }
    let s = &report["summary"];
    Ok(format!(
        "{:?} on {:?} sources (n={}, k={}): max {} mean {} | {}/{} within claim {} | config {} tree {}",
        cfg.measurement,
        cfg.source.kind,
        cfg.source.n,
        cfg.source.k,
        s["max"],
        s["mean"],
        s["within_claim"],
        s["samples"],
        report["claim"],
        &cfg.hash()[..12],
        &tree_hash[..12],
    ))
}

/// One line per raw value: `index,value`.
pub fn report_csv(report: &Value) -> Result<String> {
    let raw = report["raw"].as_array().ok_or_else(|| Error::Parse("report has no raw array".into()))?;
    let mut out = String::from("index,value\n");
    for (i, v) in raw.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    Ok(out)
}
