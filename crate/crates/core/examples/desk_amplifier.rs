//! The 16-bit desk profile of the three-level basic extractor: evaluate it,
//! list each output bit's parity footprint, and compute its exact error on
//! random affine sources from the footprint law.

use locext::amplifier::{basis_masks, desk16, footprint_law, DESK_EPS};
use locext::harness::{prng, random_affine, SourceSpec};
use locext::BitVector;

fn main() -> locext::Result<()> {
    let p = desk16()?;
    println!("profile {}: n={} seed={} output={} locality <= {}", p.name, p.n, p.seed_len(), p.output_len(), p.locality_bound());

    let mut rng = prng(2);
    let seed = BitVector::random(p.seed_len(), &mut rng);
    let x = BitVector::random(p.n, &mut rng);
    println!("output {}", p.basic_extract(&x, &seed)?.to_hex());
    for (j, fp) in p.output_footprints(&seed)?.iter().enumerate() {
        println!("  bit {j} = XOR of x at {:?}", fp.indices());
    }

    // one pass over all seeds; each source is then cheap
    let law = footprint_law(&p)?;
    for _ in 0..5 {
        if let SourceSpec::Affine { basis, .. } = random_affine(16, 12, &mut rng)? {
            let err = law.affine_error(&basis_masks(&basis), p.output_len())?;
            println!("affine (16, 12) source: error {err:.5} (target {DESK_EPS})");
        }
    }
    Ok(())
}
