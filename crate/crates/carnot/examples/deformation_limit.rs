//! The deformation check: composing two chart arrows at parameter t and
//! pulling the product back through the chart converges, as t → 0, to the
//! osculating group product — exactly for the invariant Heisenberg frame,
//! at first order for its twisted perturbation.
//!
//! Run with: cargo run --example deformation_limit

use carnot::bundled;
use carnot::exponential_charts::{ChartDomain, ExponentialChart, GradedConnection};
use carnot::filtration::Splitting;
use carnot::graded_algebra::AlgebraVector;
use carnot::rational::{format_rat, rat, rat_int, Rat};

fn main() {
    let ctrl = ChartDomain::default();

    println!("=== heisenberg3: the pullback product is exact in t ===\n");
    let chart = bundled::heisenberg3_validated();
    let exp = ExponentialChart::new(
        &GradedConnection::flat(&chart),
        &Splitting::canonical(&chart),
    )
    .unwrap();
    let x = vec![rat(1, 4), rat(-1, 3), rat_int(0)];
    let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 3), rat(-1, 4)]);
    let w = AlgebraVector::new(vec![rat(-1, 3), rat(1, 2), rat(1, 5)]);
    let ts: Vec<Rat> = vec![rat(1, 1), rat(1, 2), rat(1, 4), rat(1, 8)];
    let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    println!("convention: {}", report.convention);
    println!("limit bch(w,v) = {}", report.limit);
    for row in &report.rows {
        println!(
            "  t = {:>4}:  u(t) = ({})   e(t) = {}",
            format_rat(&row.t),
            row.product_coords.join(", "),
            if row.exact_zero { "0 (exact)".to_string() } else { format!("{:.3e}", row.error) }
        );
    }

    println!("\n=== twisted-heisenberg: first-order convergence ===\n");
    let tw = bundled::twisted_heisenberg_validated();
    let texp = ExponentialChart::new(
        &GradedConnection::flat(&tw),
        &Splitting::canonical(&tw),
    )
    .unwrap();
    let x = vec![rat_int(0); 3];
    let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 4), rat(1, 8)]);
    let w = AlgebraVector::new(vec![rat(1, 4), rat(-1, 2), rat(1, 8)]);
    let ts: Vec<Rat> = (3..=8).map(|k| rat(1, 1 << k)).collect();
    let report = texp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    println!("limit bch(w,v) at the origin = {}", report.limit);
    for row in &report.rows {
        println!("  t = {:>6}:  e(t) = {:.6e}", format_rat(&row.t), row.error);
    }
    println!("\nerror ratios e(t/2)/e(t): {:?}", report.error_ratios());
    println!("(≈ 1/2 per halving: the frame twist breaks invariance, so the");
    println!("product only converges to the osculating limit at order t)");

    println!("\n=== abelian3: everything commutes, the limit is v + w ===\n");
    let ab = bundled::abelian_validated(3);
    let aexp = ExponentialChart::new(
        &GradedConnection::flat(&ab),
        &Splitting::canonical(&ab),
    )
    .unwrap();
    let x = vec![rat_int(0); 3];
    let report = aexp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    println!("limit = {} (= v + w: {})", report.limit, report.limit == v.add(&w));
}
