//! A reproducible experiment: the config is hashed, the report carries the
//! raw measurements, and the summary is recomputed and checked on reload.

use locext::experiment::{report_csv, run_experiment, summarize_report, ExperimentConfig};

fn main() -> locext::Result<()> {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "construction": {"kind": "strong_leftover_hash", "n": 10, "k": 8, "delta": 2},
            "source": {"kind": "flat", "n": 10, "k": 8},
            "measurement": "exact_error",
            "budget": {"samples": 5},
            "prng_seed": 7
        }"#,
    )?;
    let report = run_experiment(&cfg)?;
    println!("config hash {}", report["config_hash"]);
    println!("{}", summarize_report(&report)?);
    print!("{}", report_csv(&report)?);
    Ok(())
}
