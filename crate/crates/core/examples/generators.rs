//! Pseudorandom generators: Nisan's generator against random width-3
//! programs, a random local function, and Nisan-Zuckerman on a pairwise
//! sampler extractor.

use locext::applications::{nz_prg, nz_seed_len, parallel_rlf, Hypergraph, Predicate};
use locext::harness::prng;
use locext::nisan::{nisan_expand_bits, robp_distinguish, seed_len, Robp};
use locext::primitives::pairwise_sampler_extractor;
use locext::BitVector;

fn main() -> locext::Result<()> {
    let mut rng = prng(6);

    let (w, k) = (4, 3);
    let seed = BitVector::random(seed_len(w, k), &mut rng);
    println!("nisan: {} seed bits -> {}", seed.len(), nisan_expand_bits(w, k, &seed)?.to_hex());
    let worst = (0..20)
        .map(|_| robp_distinguish(w, k, &Robp::random(3, 16, w << k, &mut rng).unwrap()).unwrap())
        .fold(0.0, f64::max);
    println!("  worst advantage over 20 programs: {worst:.4}");

    let g = Hypergraph::random(32, 16, 5, &mut rng)?;
    let q = Predicate::xor_and();
    let xs: Vec<BitVector> = (0..2).map(|_| BitVector::random(32, &mut rng)).collect();
    println!("rlf: 2 x 32 bits -> {}", parallel_rlf(&g, &q, &xs)?.to_hex());

    let ext = pairwise_sampler_extractor(6, 2, 6)?;
    let seed = BitVector::random(nz_seed_len(&ext, 3), &mut rng);
    println!("nz: {} seed bits -> {}", seed.len(), nz_prg(&seed, &ext, 3)?.to_hex());
    Ok(())
}
