//! The section module of the tangent algebroid: membership, the
//! evaluation maps at t ≠ 0 and t = 0, the splitting isomorphism Φ^ψ, and
//! the fiberwise bracket.
//!
//! Run with: cargo run --example sections_and_evaluation

use carnot::bundled;
use carnot::filtration::Splitting;
use carnot::rational::{rat, rat_int};
use carnot::sampling::Sampler;
use carnot::tangent_algebroid::{phi_psi, phi_psi_inverse, transition_matrix, GradedSection, HSection};

fn main() {
    let chart = bundled::heisenberg3_validated();

    println!("=== The glued section t^m·X for X of order m ===\n");
    // X3 = ∂z has order 2; the section t²·X3 belongs to the module
    let s = HSection::monomial(&chart, 2, 2).unwrap();
    println!("membership(t²·X3): {:?}", s.membership());
    println!("ev_(1/2)(t²·X3) = {}", s.ev_t(&rat(1, 2)).unwrap());
    let graded = s.ev0h().unwrap();
    let fiber = graded.value_at(&[rat_int(0), rat_int(0), rat_int(0)], &rat_int(0)).unwrap();
    println!("ev0H(t²·X3) at the origin = {fiber}  (the grading class σ₂(X3))");

    // a constant coefficient on an order-2 field is NOT in the module
    let vars = s.vars();
    let bad = HSection::new(
        &chart,
        vec![
            carnot::polyfields::Polynomial::zero(&vars),
            carnot::polyfields::Polynomial::zero(&vars),
            carnot::polyfields::Polynomial::one(&vars),
        ],
    )
    .unwrap();
    println!("membership(1·X3): {:?}", bad.membership());

    println!("\n=== Φ^ψ identifies graded sections with the module ===\n");
    let mut sampler = Sampler::new(2024);
    let psi = Splitting::random(&chart, &mut sampler);
    let y = GradedSection::random(&chart, &mut sampler);
    let through = phi_psi(&psi, &y).unwrap();
    println!("membership(Φ^ψ y): {:?}", through.membership());
    let back = phi_psi_inverse(&psi, &through).unwrap();
    println!("Φ^ψ round trip exact: {}", back == y);

    println!("\n=== Transition between two splittings, symbolic in t ===\n");
    let phi = Splitting::random(&chart, &mut sampler);
    let p = vec![rat_int(0), rat(1, 2), rat(-1, 3)];
    let m = transition_matrix(&psi, &phi, &p).unwrap();
    for (b, row) in m.iter().enumerate() {
        let entries: Vec<String> = row.iter().map(|e| format!("{e}")).collect();
        println!("row {}: [{}]", b + 1, entries.join(", "));
    }
    println!("(unitriangular; each off-diagonal entry is a multiple of t^(k−j))");

    println!("\n=== The algebroid bracket closes on the module ===\n");
    let s1 = HSection::monomial(&chart, 0, 1).unwrap(); // t·X1
    let s2 = HSection::monomial(&chart, 1, 1).unwrap(); // t·X2
    let bracket = s1.algebroid_bracket(&s2).unwrap();
    println!("[t·X1, t·X2] has coefficients:");
    for (a, c) in bracket.coeffs().iter().enumerate() {
        println!("  on X{}: {c}", a + 1);
    }
    println!("membership: {:?}", bracket.membership());
    println!("\nAt t = 0 the bracket becomes the osculating bracket:");
    let lhs = bracket.ev0h().unwrap();
    let origin = vec![rat_int(0); 3];
    println!(
        "ev0H([t·X1, t·X2]) at origin = {}",
        lhs.value_at(&origin, &rat_int(0)).unwrap()
    );
}
