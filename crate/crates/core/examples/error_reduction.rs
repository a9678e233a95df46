//! Repetition, chunking and XOR around two leftover-hash extractors. The
//! composed error on an affine source is computed exactly and compared with
//! the bound.

use locext::compositions::{copy_output, error_reduce, xor_copies_affine_error, ErrorReductionParams};
use locext::harness::{extractor_error_exact, linear_affine_error_exact, prng, random_affine, SourceSpec};
use locext::primitives::leftover_hash_descriptor;
use locext::BitVector;

fn main() -> locext::Result<()> {
    let mut rng = prng(3);
    let SourceSpec::Affine { basis, .. } = random_affine(12, 10, &mut rng)? else {
        unreachable!()
    };
    let inner0 = leftover_hash_descriptor(12, 8)?;
    let inner1 = leftover_hash_descriptor(4, 2)?;
    let eps0 = linear_affine_error_exact(&inner0, &basis)?;
    // worst flat chunk source with 13 of 16 points
    let mut eps1 = 0.0f64;
    for mask in (0u32..1 << 16).filter(|m| m.count_ones() == 13) {
        let support: Vec<BitVector> = (0..16).filter(|i| mask >> i & 1 == 1).map(|i| BitVector::from_u64(i, 4)).collect();
        eps1 = eps1.max(extractor_error_exact(&inner1, &support)?);
    }

    let p = ErrorReductionParams::new(2, 2, 8.0, inner0, inner1)?;
    let (d0, d1) = (p.inner0.d, p.inner1.d);
    let copy = |x: &BitVector, c: &BitVector| {
        copy_output(x, &c.slice(0, d0).unwrap(), &c.slice(d0, d1).unwrap(), &p).unwrap()
    };
    let sd = xor_copies_affine_error(&basis, d0 + d1, p.output_len(), p.t1, &copy)?;
    println!("eps0 = {eps0:.5}, eps1 = {eps1:.5}");
    println!("seed {} bits, output {} bits, {} bits dropped per copy", p.seed_len(), p.output_len(), p.dropped_bits());
    println!("composed error {sd:.6} <= bound {:.6}", p.claimed_error(eps0, eps1, 0.0, 0.0));

    let x = BitVector::random(12, &mut rng);
    let bundle = BitVector::random(p.seed_len(), &mut rng);
    println!("one evaluation: {}", error_reduce(&x, &bundle, &p)?.to_hex());
    Ok(())
}
