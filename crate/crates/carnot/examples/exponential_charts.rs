//! Global exponential charts of the tangent groupoid: geodesic
//! exponentials, chart inversion, and the injectivity probe.
//!
//! Run with: cargo run --example exponential_charts

use carnot::bundled;
use carnot::exponential_charts::{
    ChartDomain, ExponentialChart, GradedConnection, TangentGroupoidElement,
};
use carnot::filtration::Splitting;
use carnot::graded_algebra::AlgebraVector;
use carnot::rational::{rat, rat_int};

fn main() {
    let ctrl = ChartDomain::default();

    println!("=== heisenberg3, flat graded connection, canonical splitting ===\n");
    let chart = bundled::heisenberg3_validated();
    let exp = ExponentialChart::new(
        &GradedConnection::flat(&chart),
        &Splitting::canonical(&chart),
    )
    .unwrap();
    println!("exact pipeline available: {}", exp.exact_available());

    let x = vec![rat_int(0); 3];
    let v = AlgebraVector::basis(3, 2); // weight-2 direction
    for t in [rat_int(0), rat(1, 2), rat(1, 4)] {
        match exp.global_chart(&x, &v, &t, &ctrl).unwrap() {
            TangentGroupoidElement::Osculating { v, .. } => {
                println!("t = 0   → osculating element v = {v}");
            }
            TangentGroupoidElement::Pair { range, .. } => {
                println!(
                    "t = {}  → pair arrow with range ({:.6}, {:.6}, {:.6})",
                    t, range[0], range[1], range[2]
                );
            }
        }
    }
    println!("(the weight-2 coordinate moves by t², the dilation at work)");

    println!("\n=== chart_log inverts the chart (Newton shooting) ===\n");
    let engel = bundled::engel4_validated();
    let eexp = ExponentialChart::new(
        &GradedConnection::flat(&engel),
        &Splitting::canonical(&engel),
    )
    .unwrap();
    let x = vec![rat(1, 4), rat(-1, 4), rat_int(0), rat(1, 8)];
    let v = AlgebraVector::new(vec![rat(1, 3), rat(1, 2), rat(-1, 4), rat(1, 5)]);
    let t = rat(1, 2);
    let arrow = eexp.global_chart(&x, &v, &t, &ctrl).unwrap();
    let log = eexp.chart_log(&arrow, &ctrl).unwrap();
    println!("original v: {v}");
    println!(
        "recovered:  ({})",
        log.v
            .iter()
            .map(|c| format!("{c:.12}"))
            .collect::<Vec<_>>()
            .join(", ")
    );

    println!("\n=== injectivity probes ===\n");
    let probe = eexp.injectivity_probe(&ChartDomain { radius: 0.5, ..ctrl.clone() }, 2000, 7);
    println!("engel4, radius 0.5: {}", probe.message);

    // the rotation/dilation frame wraps around at huge radii
    let spiral = bundled::spiral2_validated();
    let sexp = ExponentialChart::new(
        &GradedConnection::flat(&spiral),
        &Splitting::canonical(&spiral),
    )
    .unwrap();
    let probe = sexp.injectivity_probe(&ChartDomain { radius: 25.0, ..ctrl }, 4000, 13);
    println!("spiral2, radius 25:  {}", probe.message);
}
