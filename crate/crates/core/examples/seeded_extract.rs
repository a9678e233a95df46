//! Leftover hashing and Trevisan's extractor on a random flat source:
//! exact error over every seed, then a locality audit of one seed.

use locext::harness::{extractor_error_exact, locality_audit, prng, random_flat};
use locext::primitives::{leftover_hash_extractor, trevisan_extractor};
use locext::BitVector;

fn main() -> locext::Result<()> {
    let mut rng = prng(1);
    let source = random_flat(12, 8, &mut rng)?;
    let support = source.support()?;

    let lhl = leftover_hash_extractor(12, 8, 2)?;
    println!("{}: n={} d={} m={} claimed eps {}", lhl.name, lhl.n, lhl.d, lhl.m, lhl.eps_claim);
    println!("  exact error on a flat (12, 8) source: {:.5}", extractor_error_exact(&lhl, &support)?);

    let trev = trevisan_extractor(12, 2, 2.0, None)?;
    println!("{}: n={} d={} m={}", trev.name, trev.n, trev.d, trev.m);
    if trev.d <= 16 {
        println!("  exact error: {:.5}", extractor_error_exact(&trev, &support)?);
    }

    let seed = BitVector::random(lhl.d, &mut rng);
    let x = BitVector::random(12, &mut rng);
    println!("Ext({}, {}) = {}", x.to_hex(), seed.to_hex(), lhl.evaluate(&x, &seed)?.to_hex());
    let audit = locality_audit(&lhl, &seed, 8, &mut rng)?;
    println!("locality per output bit {:?}, claim {}", audit.per_bit, lhl.locality_claim);
    Ok(())
}
