//! The osculating algebra bundle: graded nilpotent fibers computed from
//! frame brackets, point by point.
//!
//! Run with: cargo run --example osculating_bundle

use carnot::bundled;
use carnot::rational::{format_rat, rat_int, Rat};
use num::Zero;

fn main() {
    let h3 = bundled::heisenberg3_validated();
    let origin = vec![Rat::zero(); 3];
    println!("=== heisenberg3: constant structure constants ===\n");
    let alg = h3.osculating_algebra_at(&origin).unwrap();
    println!("weights: {:?}", alg.weights());
    print_constants(&alg);
    println!("axioms: {}", if alg.verify().passed() { "pass" } else { "FAIL" });

    println!("\n=== engel4 at the origin: the depth-3 ladder ===\n");
    let e4 = bundled::engel4_validated();
    let alg = e4.osculating_algebra_at(&vec![Rat::zero(); 4]).unwrap();
    println!("weights: {:?}", alg.weights());
    print_constants(&alg);

    println!("\n=== twisted-heisenberg: the fiber varies with the point ===\n");
    let tw = bundled::twisted_heisenberg_validated();
    for x in [0i64, 1, 2] {
        let p = vec![rat_int(x), Rat::zero(), Rat::zero()];
        let alg = tw.osculating_algebra_at(&p).unwrap();
        println!(
            "at x = {x}: [e1,e2] = {}·e3 (axioms {})",
            format_rat(alg.constant(0, 1, 2)),
            if alg.verify().passed() { "pass" } else { "FAIL" }
        );
    }
    println!("\nA depth-1 chart osculates to the abelian algebra:");
    let ab = bundled::abelian_validated(3);
    let alg = ab.osculating_algebra_at(&vec![Rat::zero(); 3]).unwrap();
    let trivial = (0..3).all(|a| (0..3).all(|b| (0..3).all(|k| alg.constant(a, b, k).is_zero())));
    println!("abelian3: all structure constants zero = {trivial}");
}

fn print_constants(alg: &carnot::graded_algebra::GradedNilpotentLieAlgebra) {
    let n = alg.dim();
    for a in 0..n {
        for b in (a + 1)..n {
            for k in 0..n {
                let c = alg.constant(a, b, k);
                if !c.is_zero() {
                    println!("c[{}][{}]^[{}] = {}", a + 1, b + 1, k + 1, format_rat(c));
                }
            }
        }
    }
}
