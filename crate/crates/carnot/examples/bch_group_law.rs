//! Graded nilpotent Lie algebras and the Baker-Campbell-Hausdorff group
//! law, in exact rational arithmetic.
//!
//! Run with: cargo run --example bch_group_law

use carnot::graded_algebra::{engel, heisenberg, AlgebraVector};
use carnot::rational::rat;

fn main() {
    println!("=== Heisenberg algebra: weights (1,1,2), [e1,e2] = e3 ===\n");
    let h = heisenberg();
    let e1 = AlgebraVector::basis(3, 0);
    let e2 = AlgebraVector::basis(3, 1);

    println!("verify_algebra:");
    print!("{}", h.verify());

    println!("\nbracket(e1, e2) = {}", h.bracket(&e1, &e2).unwrap());
    println!("bch(e1, e2)     = {}", h.bch_product(&e1, &e2).unwrap());

    let u = AlgebraVector::new(vec![rat(1, 2), rat(2, 3), rat(-1, 4)]);
    let v = AlgebraVector::new(vec![rat(-1, 3), rat(1, 5), rat(1, 2)]);
    let w = AlgebraVector::new(vec![rat(1, 7), rat(-2, 5), rat(1, 3)]);
    let uv = h.bch_product(&u, &v).unwrap();
    println!("\nbch({u}, {v}) = {uv}");
    println!("inverse check: bch(u, -u) = {}", h.bch_product(&u, &u.neg()).unwrap());
    let assoc_left = h.bch_product(&uv, &w).unwrap();
    let assoc_right = h.bch_product(&u, &h.bch_product(&v, &w).unwrap()).unwrap();
    println!("associativity: (u·v)·w == u·(v·w) is {}", assoc_left == assoc_right);

    println!("\n=== Dilations scale weight-w coordinates by λ^w ===\n");
    let lambda = rat(1, 2);
    let du = h.dilate(&lambda, &u).unwrap();
    println!("δ_(1/2) {u} = {du}");
    let lhs = h.bch_product(&du, &h.dilate(&lambda, &v).unwrap()).unwrap();
    let rhs = h.dilate(&lambda, &uv).unwrap();
    println!("group automorphism: bch(δu, δv) == δ bch(u,v) is {}", lhs == rhs);

    println!("\n=== Engel algebra: depth 3, the 1/12 coefficient appears ===\n");
    let g = engel();
    let e1 = AlgebraVector::basis(4, 0);
    let e2 = AlgebraVector::basis(4, 1);
    println!("bch(e1, e2) = {}", g.bch_product(&e1, &e2).unwrap());
    println!("(the Dynkin series truncates at the depth, so this is exact)");
}
