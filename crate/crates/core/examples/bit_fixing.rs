//! Deterministic extraction from an oblivious bit-fixing source: XOR over
//! design-extractor neighborhoods, then tribes of majorities. Prints the
//! witness for the source and the exact output distribution.

use std::collections::BTreeMap;

use locext::bitfix::{desk_design_extractor, nobf_witness, obf_to_nobf, BitFixingSource, ResilientFunction, TribesOfMajorities};
use locext::harness::prng;

fn main() -> locext::Result<()> {
    let g = desk_design_extractor()?;
    println!("graph: {} outputs over {} inputs, degree {}, overlaps <= {}", g.left, g.right, g.degree, g.max_intersection());

    let src = BitFixingSource::random(16, 12, &mut prng(5))?;
    println!("free positions {:?}", src.free);
    let w = nobf_witness(&src, &g, 3)?;
    println!("good outputs {:?}, XORs of up to {} of them unbiased", w.good, w.t_wise);

    // 16 inputs leave room for one balanced output bit; two would get 8
    // inputs each and tribe biases of only 1/4 or 3/4
    let rf = TribesOfMajorities::balanced(g.left, 1)?;
    let mut counts = BTreeMap::new();
    for a in 0..1u64 << src.k() {
        let z = rf.eval(&obf_to_nobf(&src.assign(a), &g)?);
        *counts.entry(z.to_hex()).or_insert(0u64) += 1;
    }
    let total = (1u64 << src.k()) as f64;
    for (z, c) in counts {
        println!("  output {z}: {:.4}", c as f64 / total);
    }
    Ok(())
}
