use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use locext::applications::{Hypergraph, Predicate};
use locext::artifact::{read_json, write_json};
use locext::bitfix::desk_design_extractor;
use locext::combinatorics::DesignExtractorGraph;
use locext::commands as cmd;
use locext::experiment::{report_csv, run_experiment, summarize_report, ConstructionSpec, ExperimentConfig};
use locext::{BitVector, Result};

#[derive(Parser)]
#[command(name = "locext", version, about = "Low-locality extractors, condensers and generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a seeded extractor given as a construction spec (JSON or path).
    Extract {
        #[arg(long)]
        spec: String,
        /// Input as len:hex or a 0/1 string.
        #[arg(long)]
        x: String,
        /// Seed; drawn from --prng-seed when omitted.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 0)]
        prng_seed: u64,
    },
    /// Apply the sparse condenser matrix.
    Condense {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        x: String,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 0)]
        prng_seed: u64,
        /// Include every row and its provenance.
        #[arg(long)]
        matrix: bool,
    },
    /// Deterministic extraction from a bit-fixing source file
    /// `{"n", "free": [...], "fixed": "len:hex"}`.
    BitfixExtract {
        #[arg(long)]
        source: PathBuf,
        /// Values of the free bits, low bit first.
        #[arg(long, default_value_t = 0)]
        assign: u64,
        /// Design-extractor artifact; the built-in 16-vertex graph otherwise.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        outputs: usize,
        #[arg(long, default_value_t = 2)]
        t_max: usize,
    },
    /// Build and verify design artifacts.
    GenDesign {
        #[command(subcommand)]
        kind: DesignKind,
    },
    /// Pseudorandom generators.
    Prg {
        #[command(subcommand)]
        kind: PrgKind,
    },
    /// Toggling audit of per-output-bit dependencies.
    AuditLocality {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        prng_seed: u64,
    },
    /// Run or summarize experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum DesignKind {
    /// (n, m, k, l)-design by greedy search.
    Design {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak design with overlap sum at most kappa (m - 1).
    Weak {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write every shipped artifact into a directory.
    Shipped {
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
    },
    /// Re-verify every artifact in a directory.
    Verify {
        #[arg(long, default_value = "artifacts")]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum PrgKind {
    /// Nisan generator with block width w and k levels; prints hex.
    Nisan {
        #[arg(long)]
        w: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 0)]
        prng_seed: u64,
    },
    /// Random local function on each input block.
    Rlf {
        /// JSON `{"n", "edges": [[...], ...]}`.
        #[arg(long)]
        graph: PathBuf,
        /// JSON `{"d", "table": [bool, ...]}`.
        #[arg(long)]
        predicate: PathBuf,
        #[arg(long, required = true)]
        x: Vec<String>,
    },
    /// Nisan-Zuckerman iteration of a seeded extractor.
    Nz {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        seed: Option<String>,
        #[arg(long, default_value_t = 0)]
        prng_seed: u64,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Report {
        #[arg(long)]
        report: PathBuf,
        /// Print raw values as CSV instead of the summary.
        #[arg(long)]
        csv: bool,
    },
}

fn emit(v: &Value, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => write_json(p, v),
        None => say(&serde_json::to_string_pretty(v)?),
    }
}

/// Prints a line; a closed pipe ends output quietly.
fn say(line: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract { spec, x, seed, prng_seed } => {
            let spec = ConstructionSpec::parse(&spec)?;
            let d = spec.build()?.d;
            let seed = cmd::seed_or_random(seed.as_deref(), d, prng_seed)?;
            emit(&cmd::extract(&spec, &cmd::parse_bits(&x)?, &seed)?, None)
        }
        Command::Condense { n, k, rows, x, seed, prng_seed, matrix } => {
            let p = cmd::condenser_params(n, k, rows)?;
            let seed = cmd::seed_or_random(seed.as_deref(), p.seed_len()?, prng_seed)?;
            emit(&cmd::condense(&p, &cmd::parse_bits(&x)?, &seed, matrix)?, None)
        }
        Command::BitfixExtract { source, assign, graph, outputs, t_max } => {
            let src = cmd::read_bit_fixing_source(&std::fs::read_to_string(source)?)?;
            let g = match graph {
                Some(p) => DesignExtractorGraph::from_artifact(&read_json(&p)?)?,
                None => desk_design_extractor()?,
            };
            emit(&cmd::bitfix_extract(&src, assign, &g, outputs, t_max)?, None)
        }
        Command::GenDesign { kind } => match kind {
            DesignKind::Design { n, m, k, l, out } => emit(&cmd::gen_design(n, m, k, l)?, out.as_ref()),
            DesignKind::Weak { m, kappa, l, out } => emit(&cmd::gen_weak_design(m, kappa, l)?, out.as_ref()),
            DesignKind::Shipped { dir } => {
                for p in cmd::write_shipped(&dir)? {
                    say(&format!("wrote {}", p.display()))?;
                }
                Ok(())
            }
            DesignKind::Verify { dir } => {
                for (p, summary) in cmd::verify_artifact_dir(&dir)? {
                    say(&format!("ok {}: {summary}", p.display()))?;
                }
                Ok(())
            }
        },
        Command::Prg { kind } => {
            let out = match kind {
                PrgKind::Nisan { w, k, seed, prng_seed } => {
                    let seed = cmd::seed_or_random(seed.as_deref(), locext::nisan::seed_len(w, k), prng_seed)?;
                    cmd::prg_nisan(w, k, &seed)?
                }
                PrgKind::Rlf { graph, predicate, x } => {
                    let g: Hypergraph = serde_json::from_value(read_json(&graph)?)?;
                    let g = Hypergraph::new(g.n, g.edges)?;
                    let q: Predicate = serde_json::from_value(read_json(&predicate)?)?;
                    let q = Predicate::new(q.d, q.table)?;
                    let xs = x.iter().map(|s| cmd::parse_bits(s)).collect::<Result<Vec<BitVector>>>()?;
                    cmd::prg_rlf(&g, &q, &xs)?
                }
                PrgKind::Nz { spec, rounds, seed, prng_seed } => {
                    let spec = ConstructionSpec::parse(&spec)?;
                    let len = locext::applications::nz_seed_len(&spec.build()?, rounds);
                    let seed = cmd::seed_or_random(seed.as_deref(), len, prng_seed)?;
                    cmd::prg_nz(&spec, rounds, &seed)?
                }
            };
            say(&out.to_hex())
        }
        Command::AuditLocality { spec, seed, trials, prng_seed } => {
            let spec = ConstructionSpec::parse(&spec)?;
            let report = cmd::audit_locality(&spec, seed.as_deref(), trials, prng_seed)?;
            emit(&serde_json::to_value(report)?, None)
        }
        Command::Experiment { action } => match action {
            ExperimentAction::Run { config, out } => {
                let cfg: ExperimentConfig = serde_json::from_value(read_json(&config)?)?;
                let report = run_experiment(&cfg)?;
                eprintln!("{}", summarize_report(&report)?);
                emit(&report, out.as_ref())
            }
            ExperimentAction::Report { report, csv } => {
                let v = read_json(&report)?;
                if csv {
                    say(report_csv(&v)?.trim_end())
                } else {
                    say(&summarize_report(&v)?)
                }
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
