//! Filtered charts: polynomial frames with orders, and the validation of
//! the Lie filtration condition at sample points.
//!
//! Run with: cargo run --example filtration_validation

use carnot::bundled;
use carnot::filtration::validate_filtration;

fn main() {
    for name in bundled::BUNDLED_NAMES {
        let chart = bundled::chart_by_name(name).unwrap();
        println!("=== {name} (dim {}, depth {}) ===", chart.dim(), chart.depth());
        for (a, field) in chart.frame().iter().enumerate() {
            println!("  X{} (order {}): {field}", a + 1, chart.orders()[a]);
        }
        println!("  subbundle ranks: {:?}", chart.ranks());
        print!("{}", indent(&validate_filtration(&chart).to_string()));
        println!();
    }

    println!("=== negative fixture: heisenberg3 with X3 relabeled to order 3 ===");
    let bad = bundled::heisenberg3_bad_order_chart();
    let report = validate_filtration(&bad);
    print!("{}", indent(&report.to_string()));
    println!("\n[X1,X2] = ∂z needs order ≤ 2, but the coarsest span with");
    println!("order ≤ 2 omits X3, so the bracket condition fails with a witness.");
}

fn indent(text: &str) -> String {
    text.lines()
        .map(|l| format!("  {l}\n"))
        .collect::<String>()
}
