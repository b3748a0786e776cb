//! Bundled example charts and manifests.
//!
//! Four official examples cover the corners of the construction:
//!
//! - `abelian-n`: trivial depth-1 filtration on the coordinate frame; the
//!   osculating groups are vector groups and everything commutes.
//! - `heisenberg3`: the left-invariant Heisenberg frame
//!   `X1 = ∂x − y/2·∂z`, `X2 = ∂y + x/2·∂z`, `X3 = ∂z` with orders
//!   (1,1,2); frame-flat exponentials are coordinate-affine, so the chart
//!   pipeline runs exactly over the rationals.
//! - `engel4`: a depth-3 filtration on R^4; frame-flat geodesics genuinely
//!   curve, exercising the numeric integrator.
//! - `twisted-heisenberg`: the Heisenberg frame with `X2` perturbed by
//!   `x^2·∂z`.  The filtration still holds but the frame is no longer
//!   left-invariant, so the chart-pullback product converges to the
//!   osculating product only in the limit, at first order in t.
//!
//! A fifth chart, `spiral2`, is used by the injectivity probe tests: its
//! frame combines a rotation and a radial field, so exponentials with huge
//! radii wrap around and collide.

use crate::filtration::{default_sample_points, FilteredChart, ValidatedChart};
use crate::polyfields::{PolyVectorField, Polynomial, VarSet};
use crate::rational::{rat, rat_int, Rat};
use num::Zero;
use std::sync::Arc;

/// Bundled charts raise the degree cap: random-section bracket sweeps
/// produce intermediate terms of degree up to ~13 on the depth-3 chart.
pub const BUNDLED_DEGREE_CAP: u32 = 16;

fn varset<S: Into<String>>(names: Vec<S>) -> Arc<VarSet> {
    VarSet::with_cap(names, BUNDLED_DEGREE_CAP)
}

fn parse(vars: &Arc<VarSet>, s: &str) -> Polynomial {
    Polynomial::parse(vars, s).expect("bundled polynomial is well-formed")
}

fn field(vars: &Arc<VarSet>, components: &[&str]) -> PolyVectorField {
    PolyVectorField::new(components.iter().map(|s| parse(vars, s)).collect())
}

/// Names of the official bundled manifests.
pub const BUNDLED_NAMES: [&str; 4] = ["abelian3", "heisenberg3", "engel4", "twisted-heisenberg"];

/// Coordinate frame on R^n with the trivial depth-1 filtration.
pub fn abelian_chart(n: usize) -> FilteredChart {
    assert!(n >= 1, "abelian chart needs at least one coordinate");
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let vars = varset(names);
    let frame: Vec<PolyVectorField> = (0..n)
        .map(|i| PolyVectorField::coordinate(&vars, n, i))
        .collect();
    FilteredChart::new(vars, frame, vec![1; n], 1, default_sample_points(n))
        .expect("bundled chart is well-formed")
}

/// The Heisenberg frame on R^3 with orders (1,1,2).
pub fn heisenberg3_chart() -> FilteredChart {
    heisenberg3_chart_with_orders(vec![1, 1, 2], 2)
}

/// Heisenberg frame with custom order labels (used by the negative
/// filtration fixtures).
pub fn heisenberg3_chart_with_orders(orders: Vec<u32>, depth: u32) -> FilteredChart {
    let vars = varset(vec!["x", "y", "z"]);
    let frame = vec![
        field(&vars, &["1", "0", "-1/2*y"]),
        field(&vars, &["0", "1", "1/2*x"]),
        field(&vars, &["0", "0", "1"]),
    ];
    FilteredChart::new(vars, frame, orders, depth, default_sample_points(3))
        .expect("bundled chart is well-formed")
}

/// The order-relabeled negative fixture: `X3` claimed to have order 3 at
/// depth 3, which breaks `[X1,X2] ∈ Γ(H^2)`.
pub fn heisenberg3_bad_order_chart() -> FilteredChart {
    heisenberg3_chart_with_orders(vec![1, 1, 3], 3)
}

/// Depth-3 Engel-type frame on R^4 with orders (1,1,2,3):
/// `[X1,X2] = X3`, `[X1,X3] = X4`, `[X2,X3] = 0`.
pub fn engel4_chart() -> FilteredChart {
    engel4_chart_with_orders(vec![1, 1, 2, 3], 3)
}

pub fn engel4_chart_with_orders(orders: Vec<u32>, depth: u32) -> FilteredChart {
    let vars = varset(vec!["x", "y", "z", "w"]);
    let frame = vec![
        field(&vars, &["1", "0", "0", "0"]),
        field(&vars, &["0", "1", "x", "1/2*x^2"]),
        field(&vars, &["0", "0", "1", "x"]),
        field(&vars, &["0", "0", "0", "1"]),
    ];
    FilteredChart::new(vars, frame, orders, depth, default_sample_points(4))
        .expect("bundled chart is well-formed")
}

/// Heisenberg frame with `X2` perturbed by `x^2·∂z`.  The bracket
/// `[X1, X2] = (1/2 + 2x)·X3` stays in `H^2`, so the filtration holds, but
/// the osculating structure constants vary with the base point.
pub fn twisted_heisenberg_chart() -> FilteredChart {
    let vars = varset(vec!["x", "y", "z"]);
    let frame = vec![
        field(&vars, &["1", "0", "-1/2*y"]),
        field(&vars, &["0", "1", "1/2*x + x^2"]),
        field(&vars, &["0", "0", "1"]),
    ];
    FilteredChart::new(vars, frame, vec![1, 1, 2], 2, default_sample_points(3))
        .expect("bundled chart is well-formed")
}

/// Rotation/dilation frame on R^2 minus the origin, depth 1:
/// `X1 = −y·∂x + x·∂y`, `X2 = x·∂x + y·∂y`.  Constant-coefficient
/// combinations flow as `w ↦ w·e^{(c2 + i·c1)s}` in complex notation, so
/// the frame-flat exponential is 2π-periodic in the rotation coefficient
/// and strongly contracting for negative radial coefficients.
pub fn spiral2_chart() -> FilteredChart {
    let vars = varset(vec!["x", "y"]);
    let frame = vec![
        field(&vars, &["0 - y", "x"]),
        field(&vars, &["x", "y"]),
    ];
    // sample points on an annulus; the frame is singular at the origin
    let points = vec![
        vec![rat_int(1), rat_int(0)],
        vec![rat_int(0), rat_int(1)],
        vec![rat_int(-1), rat_int(0)],
        vec![rat_int(0), rat_int(-1)],
        vec![rat(1, 2), rat(1, 2)],
        vec![rat_int(1), rat_int(1)],
        vec![rat(-1, 2), rat(3, 4)],
    ];
    FilteredChart::new(vars, frame, vec![1, 1], 1, points)
        .expect("bundled chart is well-formed")
}

fn validated(chart: FilteredChart) -> ValidatedChart {
    chart.validated().expect("bundled chart validates")
}

pub fn abelian_validated(n: usize) -> ValidatedChart {
    validated(abelian_chart(n))
}

pub fn heisenberg3_validated() -> ValidatedChart {
    validated(heisenberg3_chart())
}

pub fn engel4_validated() -> ValidatedChart {
    validated(engel4_chart())
}

pub fn twisted_heisenberg_validated() -> ValidatedChart {
    validated(twisted_heisenberg_chart())
}

pub fn spiral2_validated() -> ValidatedChart {
    validated(spiral2_chart())
}

/// Resolves a bundled chart by manifest name.  `abelian<n>` is parametric;
/// `heisenberg3-bad-order` is the negative filtration fixture.
pub fn chart_by_name(name: &str) -> Option<FilteredChart> {
    if let Some(digits) = name.strip_prefix("abelian") {
        if let Ok(n) = digits.parse::<usize>() {
            if (1..=9).contains(&n) {
                return Some(abelian_chart(n));
            }
        }
        return None;
    }
    match name {
        "heisenberg3" => Some(heisenberg3_chart()),
        "engel4" => Some(engel4_chart()),
        "twisted-heisenberg" => Some(twisted_heisenberg_chart()),
        "heisenberg3-bad-order" => Some(heisenberg3_bad_order_chart()),
        "spiral2" => Some(spiral2_chart()),
        _ => None,
    }
}

/// A corrupted-constant fixture: the Heisenberg constants with the
/// gradedness-violating entry `c_{13}^1 = 1` injected.
pub fn corrupted_graded_constants() -> crate::graded_algebra::GradedNilpotentLieAlgebra {
    let mut constants = vec![vec![vec![Rat::zero(); 3]; 3]; 3];
    constants[0][1][2] = rat_int(1);
    constants[1][0][2] = rat_int(-1);
    constants[0][2][0] = rat_int(1);
    constants[2][0][0] = rat_int(-1);
    crate::graded_algebra::GradedNilpotentLieAlgebra::new(vec![1, 1, 2], constants)
        .expect("shape is fine; the invariants are what is corrupted")
}

/// A corrupted-constant fixture violating the Jacobi identity.
pub fn corrupted_jacobi_constants() -> crate::graded_algebra::GradedNilpotentLieAlgebra {
    crate::graded_algebra::GradedNilpotentLieAlgebra::from_sparse_brackets(
        vec![1, 1, 1, 2, 3],
        &[
            (0, 1, 3, rat_int(1)),
            (0, 3, 4, rat_int(1)),
            (1, 3, 4, rat_int(1)),
            (2, 3, 4, rat_int(1)),
        ],
    )
    .expect("shape is fine; the invariants are what is corrupted")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::validate_filtration;

    #[test]
    fn official_charts_validate() {
        for name in BUNDLED_NAMES {
            let chart = chart_by_name(name).unwrap();
            let report = validate_filtration(&chart);
            assert!(report.passed(), "{name}: {report}");
        }
        assert!(chart_by_name("spiral2").is_some());
        assert!(chart_by_name("abelian5").is_some());
        assert!(chart_by_name("abelian0").is_none());
        assert!(chart_by_name("nonsense").is_none());
    }

    #[test]
    fn negative_fixtures_fail_as_designed() {
        assert!(!validate_filtration(&heisenberg3_bad_order_chart()).passed());
        assert!(!corrupted_graded_constants().verify().passed());
        assert!(!corrupted_jacobi_constants().verify().passed());
    }

    #[test]
    fn spiral2_validates_away_from_origin() {
        let chart = spiral2_chart();
        assert!(validate_filtration(&chart).passed());
        // frame brackets vanish: rotation and dilation commute
        let v = spiral2_validated();
        let brackets = v.frame_brackets().unwrap();
        assert!(brackets[0][1].is_zero());
    }
}
