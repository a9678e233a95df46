//! Sparse condenser for n = 64, k = 16: build one matrix from a seed, show
//! its row weights, and estimate the output collision probability on a flat
//! source.

use rand::seq::SliceRandom;

use locext::condenser::{build_condenser_matrix, CondenserParams};
use locext::harness::{estimate_collision, prng, random_flat, SourceSpec};
use locext::BitVector;

fn main() -> locext::Result<()> {
    let p = CondenserParams::new(64, 16)?;
    let seed_len = p.seed_len()?;
    println!("rows {}, clip {:.1}, seed {} bits, lambda <= {:.4}", p.t, p.clip, seed_len, p.lambda_bound);

    let mut rng = prng(4);
    let mat = build_condenser_matrix(&BitVector::random(seed_len, &mut rng), &p)?;
    println!("max row weight {}, clipped rows {}", mat.max_weight(), mat.clipped());

    let SourceSpec::Flat { support, .. } = random_flat(64, 16, &mut rng)? else {
        unreachable!()
    };
    let pairs: Vec<_> = (0..2_000)
        .map(|_| {
            let m = build_condenser_matrix(&BitVector::random(seed_len, &mut rng), &p).unwrap();
            let a = BitVector::from_u128(*support.choose(&mut rng).unwrap(), 64);
            let b = BitVector::from_u128(*support.choose(&mut rng).unwrap(), 64);
            (m.apply(&a).unwrap(), m.apply(&b).unwrap())
        })
        .collect();
    let est = estimate_collision(pairs);
    println!("collision {:.2e} +- {:.1e} over {} pairs, bound {:.3e}", est.value, est.sigma, 2_000, p.collision_bound());
    Ok(())
}
