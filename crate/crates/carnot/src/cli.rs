//! Command implementations behind the `carnot` binary: manifest-driven
//! validation, osculating algebra queries, BCH products, exponential chart
//! evaluation, deformation tables, and the bundled self-test.
//!
//! Every command returns a [`Report`]; the binary maps `passed` onto the
//! process exit status (0 pass, 1 check failure, 2 usage or parse error).

use crate::bundled;
use crate::exponential_charts::{
    multiply, ChartDomain, ExponentialChart, GradedConnection, TangentGroupoidElement,
};
use crate::filtration::{validate_filtration, Splitting, ValidatedChart};
use crate::graded_algebra::AlgebraVector;
use crate::manifest::{load_manifest, Manifest, ManifestError};
use crate::rational::{format_rat, parse_rat_vec, rat_to_f64, Rat};
use crate::report::Report;
use crate::sampling::Sampler;
use crate::tangent_algebroid::{phi_psi, phi_psi_inverse, transition_matrix, GradedSection};
use num::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("usage error: {0}")]
    Usage(String),
}

/// Option overrides shared by the commands (`--seed`, `--steps`, `--tol`).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub steps: Option<u32>,
    pub tol: Option<f64>,
    pub radius: Option<f64>,
}

fn effective_seed(manifest: &Manifest, over: &Overrides) -> u64 {
    over.seed.unwrap_or(manifest.params.seed)
}

fn chart_domain(manifest: &Manifest, over: &Overrides) -> ChartDomain {
    ChartDomain {
        radius: over.radius.unwrap_or(manifest.params.radius),
        steps: over.steps.unwrap_or(manifest.params.steps),
        newton_tol: manifest.params.newton_tol,
        newton_max_iter: ChartDomain::default().newton_max_iter,
    }
}

fn parse_point(manifest: &Manifest, text: &str) -> Result<Vec<Rat>, CliError> {
    let p = parse_rat_vec(text).map_err(|m| CliError::Usage(format!("--point: {m}")))?;
    if p.len() != manifest.chart.dim {
        return Err(CliError::Usage(format!(
            "--point has {} coordinates, chart has {}",
            p.len(),
            manifest.chart.dim
        )));
    }
    Ok(p)
}

fn parse_vector(manifest: &Manifest, text: &str, flag: &str) -> Result<AlgebraVector, CliError> {
    let v = parse_rat_vec(text).map_err(|m| CliError::Usage(format!("{flag}: {m}")))?;
    if v.len() != manifest.chart.dim {
        return Err(CliError::Usage(format!(
            "{flag} has {} coordinates, chart has {}",
            v.len(),
            manifest.chart.dim
        )));
    }
    Ok(AlgebraVector::new(v))
}

pub fn load(path_or_name: &str) -> Result<Manifest, CliError> {
    Ok(load_manifest(path_or_name)?)
}

/// `validate`: filtration condition, osculating algebra axioms at every
/// sample point, and connection gradedness.
pub fn cmd_validate(manifest: &Manifest, over: &Overrides) -> Result<Report, CliError> {
    let seed = effective_seed(manifest, over);
    let mut report = Report::new("validate", &manifest.name, seed);
    let chart = manifest.build_chart()?;
    let filtration = validate_filtration(&chart);
    for check in &filtration.checks {
        report.check(
            format!("filtration.{}", check.name),
            check.passed,
            check.witness.clone(),
        );
    }
    if !filtration.passed() {
        report.value("hint", "osculating checks skipped: chart is not a filtration");
        return Ok(report);
    }
    let validated = chart.validated().expect("report said pass");
    let mut algebra_witness = None;
    for p in validated.sample_points() {
        match validated.osculating_algebra_at(p) {
            Ok(alg) => {
                let verdict = alg.verify();
                if !verdict.passed() {
                    let failing = verdict
                        .checks
                        .iter()
                        .find(|c| !c.passed)
                        .expect("some check failed");
                    algebra_witness = Some(format!(
                        "point ({}): {} ({})",
                        crate::filtration::format_point(p),
                        failing.name,
                        failing.witness.clone().unwrap_or_default()
                    ));
                    break;
                }
            }
            Err(e) => {
                algebra_witness = Some(e.to_string());
                break;
            }
        }
    }
    report.check(
        "osculating_algebra_axioms",
        algebra_witness.is_none(),
        algebra_witness,
    );
    let conn = manifest.build_connection(&validated)?;
    let conn_report = conn.validate();
    report.check(
        "connection_graded",
        conn_report.passed,
        if conn_report.passed {
            None
        } else {
            Some(conn_report.offending.join("; "))
        },
    );
    Ok(report)
}

/// `osculate`: weights and structure constants at a point.
pub fn cmd_osculate(manifest: &Manifest, point: &str, over: &Overrides) -> Result<Report, CliError> {
    let seed = effective_seed(manifest, over);
    let mut report = Report::new("osculate", &manifest.name, seed);
    let p = parse_point(manifest, point)?;
    let chart = manifest.build_validated()?;
    match chart.osculating_algebra_at(&p) {
        Ok(alg) => {
            report.value(
                "weights",
                alg.weights()
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            let n = alg.dim();
            let mut any = false;
            for a in 0..n {
                for b in (a + 1)..n {
                    for k in 0..n {
                        let c = alg.constant(a, b, k);
                        if !c.is_zero() {
                            any = true;
                            report.value(
                                format!("c[{}][{}]^[{}]", a + 1, b + 1, k + 1),
                                format_rat(c),
                            );
                        }
                    }
                }
            }
            if !any {
                report.value("structure_constants", "all zero (abelian)");
            }
            let verdict = alg.verify();
            report.check("algebra_axioms", verdict.passed(), None);
        }
        Err(e) => report.check("osculating_algebra", false, Some(e.to_string())),
    }
    Ok(report)
}

/// `bch`: the group product in the osculating algebra at a point.
pub fn cmd_bch(
    manifest: &Manifest,
    point: &str,
    u_text: &str,
    v_text: &str,
    over: &Overrides,
) -> Result<Report, CliError> {
    let seed = effective_seed(manifest, over);
    let mut report = Report::new("bch", &manifest.name, seed);
    let p = parse_point(manifest, point)?;
    let u = parse_vector(manifest, u_text, "--vector (first)")?;
    let v = parse_vector(manifest, v_text, "--vector (second)")?;
    let chart = manifest.build_validated()?;
    match chart
        .osculating_algebra_at(&p)
        .map_err(|e| e.to_string())
        .and_then(|alg| alg.bch_product(&u, &v).map_err(|e| e.to_string()))
    {
        Ok(product) => {
            report.value("u", u.to_string());
            report.value("v", v.to_string());
            report.value("bch(u,v)", product.to_string());
        }
        Err(e) => report.check("bch", false, Some(e)),
    }
    Ok(report)
}

/// `chart`: the global exponential chart at `(x, v, t)`, with an optional
/// log round-trip check.
pub fn cmd_chart(
    manifest: &Manifest,
    point: &str,
    vector: &str,
    t_text: &str,
    roundtrip: bool,
    over: &Overrides,
) -> Result<Report, CliError> {
    let seed = effective_seed(manifest, over);
    let mut report = Report::new("chart", &manifest.name, seed);
    let x = parse_point(manifest, point)?;
    let v = parse_vector(manifest, vector, "--vector")?;
    let t = crate::rational::parse_rat(t_text)
        .map_err(|m| CliError::Usage(format!("--t: {m}")))?;
    let chart = manifest.build_validated()?;
    let conn = manifest.build_connection(&chart)?;
    let psi = Splitting::canonical(&chart);
    let exp = match ExponentialChart::new(&conn, &psi) {
        Ok(e) => e,
        Err(e) => {
            report.check("chart_setup", false, Some(e.to_string()));
            return Ok(report);
        }
    };
    let ctrl = chart_domain(manifest, over);
    report.value("t", format_rat(&t));
    match exp.global_chart(&x, &v, &t, &ctrl) {
        Ok(TangentGroupoidElement::Osculating { base, v }) => {
            report.value(
                "fiber",
                format!(
                    "osculating element at ({}) with v = {}",
                    crate::filtration::format_point(&base),
                    v
                ),
            );
        }
        Ok(TangentGroupoidElement::Pair { range, source, t }) => {
            report.value("range", format_f64_vec(&range));
            report.value("source", format_f64_vec(&source));
            if roundtrip {
                let arrow = TangentGroupoidElement::Pair {
                    range: range.clone(),
                    source,
                    t,
                };
                match exp.chart_log(&arrow, &ctrl) {
                    Ok(log) => {
                        let err = log
                            .v
                            .iter()
                            .zip(v.coords())
                            .fold(0.0f64, |m, (a, b)| m.max((a - rat_to_f64(b)).abs()));
                        let tol = over.tol.unwrap_or(manifest.params.tol);
                        report.value("roundtrip_error", format!("{err:.3e}"));
                        report.check(
                            "chart_log_roundtrip",
                            err <= tol,
                            (err > tol).then(|| format!("error {err:.3e} > tolerance {tol:.1e}")),
                        );
                    }
                    Err(e) => report.check("chart_log_roundtrip", false, Some(e.to_string())),
                }
            }
        }
        Err(e) => report.check("global_chart", false, Some(e.to_string())),
    }
    Ok(report)
}

/// `deform`: the t → 0 limit table of the chart-pullback product.
pub fn cmd_deform(
    manifest: &Manifest,
    point: &str,
    v_text: &str,
    w_text: &str,
    t_seq: Option<&str>,
    over: &Overrides,
) -> Result<Report, CliError> {
    let seed = effective_seed(manifest, over);
    let mut report = Report::new("deform", &manifest.name, seed);
    let x = parse_point(manifest, point)?;
    let v = parse_vector(manifest, v_text, "--vector (first)")?;
    let w = parse_vector(manifest, w_text, "--vector (second)")?;
    let ts: Vec<Rat> = match t_seq {
        Some(text) => parse_rat_vec(text).map_err(|m| CliError::Usage(format!("--t-seq: {m}")))?,
        None => manifest.t_sequence()?,
    };
    let chart = manifest.build_validated()?;
    let conn = manifest.build_connection(&chart)?;
    let psi = Splitting::canonical(&chart);
    let ctrl = chart_domain(manifest, over);
    let exp = match ExponentialChart::new(&conn, &psi) {
        Ok(e) => e,
        Err(e) => {
            report.check("chart_setup", false, Some(e.to_string()));
            return Ok(report);
        }
    };
    match exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl) {
        Ok(table) => {
            report.value("convention", table.convention.clone());
            report.value(
                "pipeline",
                if table.exact_pipeline {
                    "exact-rational"
                } else {
                    "rk4-newton (binary64)"
                },
            );
            report.value("limit", table.limit.to_string());
            for row in &table.rows {
                report.value(
                    format!("u(t={})", format_rat(&row.t)),
                    format!("({})", row.product_coords.join(", ")),
                );
                report.value(
                    format!("e(t={})", format_rat(&row.t)),
                    if row.exact_zero {
                        "0 (exact)".to_string()
                    } else {
                        format!("{:.6e}", row.error)
                    },
                );
            }
            report.check(
                "deformation_converges",
                table.converged,
                (!table.converged).then(|| {
                    format!(
                        "errors {:?} do not decay",
                        table.rows.iter().map(|r| r.error).collect::<Vec<_>>()
                    )
                }),
            );
        }
        Err(e) => report.check("deformation_limit_check", false, Some(e.to_string())),
    }
    Ok(report)
}

fn format_f64_vec(v: &[f64]) -> String {
    format!(
        "({})",
        v.iter()
            .map(|c| format!("{c:.17e}"))
            .collect::<Vec<_>>()
            .join(", ")
    )
}

/// `selftest`: the full invariant suite on the bundled manifests with
/// negative controls.  Seeded and deterministic.
pub fn cmd_selftest(over: &Overrides) -> Result<Report, CliError> {
    let seed = over.seed.unwrap_or(42);
    let mut report = Report::new("selftest", "bundled", seed);

    for name in bundled::BUNDLED_NAMES {
        let manifest = bundled_or_usage(name)?;
        let chart = match manifest.build_validated() {
            Ok(c) => c,
            Err(e) => {
                report.check(format!("{name}.filtration"), false, Some(e.to_string()));
                continue;
            }
        };
        report.check(format!("{name}.filtration"), true, None);
        selftest_chart(&mut report, name, &chart, seed, &manifest, over);
    }

    // negative controls: corrupted fixtures must fail with witnesses
    let bad_chart = bundled::heisenberg3_bad_order_chart();
    let bad_report = validate_filtration(&bad_chart);
    report.check(
        "negative.bad_order_fails_filtration",
        !bad_report.passed(),
        bad_report
            .passed()
            .then(|| "order-relabeled chart unexpectedly validated".to_string()),
    );
    let graded_fail = !bundled::corrupted_graded_constants().verify().passed();
    report.check(
        "negative.corrupted_gradedness_detected",
        graded_fail,
        (!graded_fail).then(|| "gradedness corruption passed verify".to_string()),
    );
    let jacobi_fail = !bundled::corrupted_jacobi_constants().verify().passed();
    report.check(
        "negative.corrupted_jacobi_detected",
        jacobi_fail,
        (!jacobi_fail).then(|| "jacobi corruption passed verify".to_string()),
    );
    Ok(report)
}

fn bundled_or_usage(name: &str) -> Result<Manifest, CliError> {
    crate::manifest::bundled_manifest(name)
        .ok_or_else(|| CliError::Usage(format!("unknown bundled manifest `{name}`")))
}

fn selftest_chart(
    report: &mut Report,
    name: &str,
    chart: &ValidatedChart,
    seed: u64,
    manifest: &Manifest,
    over: &Overrides,
) {
    let mut sampler = Sampler::new(seed);
    let n = chart.dim();

    // osculating algebra axioms at every sample point
    let mut axiom_witness = None;
    for p in chart.sample_points() {
        let alg = chart.osculating_algebra_at(p).expect("validated chart");
        let verdict = alg.verify();
        if !verdict.passed() {
            axiom_witness = Some(format!(
                "point ({})",
                crate::filtration::format_point(p)
            ));
            break;
        }
    }
    report.check(
        format!("{name}.osculating_axioms"),
        axiom_witness.is_none(),
        axiom_witness,
    );

    // BCH group law and dilation compatibility on sampled data
    let origin = vec![Rat::zero(); n];
    let alg = chart.osculating_algebra_at(&origin).expect("validated");
    let mut group_witness = None;
    for _ in 0..10 {
        let u = AlgebraVector::new(sampler.rational_vec(n, 3));
        let v = AlgebraVector::new(sampler.rational_vec(n, 3));
        let w = AlgebraVector::new(sampler.rational_vec(n, 3));
        let assoc_left = alg
            .bch_product(&alg.bch_product(&u, &v).unwrap(), &w)
            .unwrap();
        let assoc_right = alg
            .bch_product(&u, &alg.bch_product(&v, &w).unwrap())
            .unwrap();
        if assoc_left != assoc_right {
            group_witness = Some(format!("associativity fails at u = {u}"));
            break;
        }
        let lambda = sampler.nonzero_rational(3);
        let lhs = alg
            .bch_product(
                &alg.dilate(&lambda, &u).unwrap(),
                &alg.dilate(&lambda, &v).unwrap(),
            )
            .unwrap();
        let rhs = alg.dilate(&lambda, &alg.bch_product(&u, &v).unwrap()).unwrap();
        if lhs != rhs {
            group_witness = Some(format!("dilation λ = {} breaks bch", format_rat(&lambda)));
            break;
        }
    }
    report.check(format!("{name}.bch_group_law"), group_witness.is_none(), group_witness);

    // section module: Φ^ψ round trip, bracket closure, ev0H morphism
    let mut section_witness = None;
    for _ in 0..5 {
        let psi = Splitting::random(chart, &mut sampler);
        let y1 = GradedSection::random(chart, &mut sampler);
        let y2 = GradedSection::random(chart, &mut sampler);
        let s1 = phi_psi(&psi, &y1).unwrap();
        let s2 = phi_psi(&psi, &y2).unwrap();
        if phi_psi_inverse(&psi, &s1).unwrap() != y1 {
            section_witness = Some("Φ^ψ round trip failed".to_string());
            break;
        }
        let bracket = match s1.algebroid_bracket(&s2) {
            Ok(b) => b,
            Err(e) => {
                section_witness = Some(e.to_string());
                break;
            }
        };
        if !bracket.membership().is_member() {
            section_witness = Some("bracket left the section module".to_string());
            break;
        }
        let lhs = bracket.ev0h().unwrap();
        let g1 = s1.ev0h().unwrap();
        let g2 = s2.ev0h().unwrap();
        for p in chart.sample_points().iter().take(3) {
            let alg_p = chart.osculating_algebra_at(p).unwrap();
            let expected = alg_p
                .bracket(
                    &g1.value_at(p, &Rat::zero()).unwrap(),
                    &g2.value_at(p, &Rat::zero()).unwrap(),
                )
                .unwrap();
            if lhs.value_at(p, &Rat::zero()).unwrap() != expected {
                section_witness = Some(format!(
                    "ev0H morphism fails at ({})",
                    crate::filtration::format_point(p)
                ));
                break;
            }
        }
        if section_witness.is_some() {
            break;
        }
    }
    report.check(
        format!("{name}.section_module"),
        section_witness.is_none(),
        section_witness,
    );

    // transition matrices between random splittings stay unitriangular in t
    let mut transition_witness = None;
    for _ in 0..3 {
        let psi = Splitting::random(chart, &mut sampler);
        let phi = Splitting::random(chart, &mut sampler);
        let p = chart.sample_points()[0].clone();
        let m = transition_matrix(&psi, &phi, &p).unwrap();
        for (b, row) in m.iter().enumerate() {
            for (a, entry) in row.iter().enumerate() {
                let at0 = entry.subst(0, &Rat::zero()).constant_term();
                let expected = if a == b { Rat::from_integer(1.into()) } else { Rat::zero() };
                if at0 != expected {
                    transition_witness = Some(format!("entry ({},{}) at t=0", b + 1, a + 1));
                }
            }
        }
    }
    report.check(
        format!("{name}.splitting_transitions"),
        transition_witness.is_none(),
        transition_witness,
    );

    // exponential charts: t = 0 identity and a short deformation table
    let conn = GradedConnection::flat(chart);
    let psi = Splitting::canonical(chart);
    let exp = ExponentialChart::new(&conn, &psi).expect("flat connection is graded");
    let ctrl = chart_domain(manifest, over);
    let v = AlgebraVector::new(
        sampler
            .rational_vec(n, 2)
            .iter()
            .map(|c| c.clone() * crate::rational::rat(1, 4))
            .collect(),
    );
    let w = AlgebraVector::new(
        sampler
            .rational_vec(n, 2)
            .iter()
            .map(|c| c.clone() * crate::rational::rat(1, 4))
            .collect(),
    );
    let identity_ok = matches!(
        exp.global_chart(&origin, &v, &Rat::zero(), &ctrl),
        Ok(TangentGroupoidElement::Osculating { base, v: vv }) if base == origin && vv == v
    );
    report.check(
        format!("{name}.chart_t0_identity"),
        identity_ok,
        (!identity_ok).then(|| "t = 0 slice is not the identity".to_string()),
    );
    let ts: Vec<Rat> = (0..4).map(|k| crate::rational::rat(1, 1 << k)).collect();
    match exp.deformation_limit_check(&origin, &v, &w, &ts, &ctrl) {
        Ok(table) => {
            report.check(
                format!("{name}.deformation_converges"),
                table.converged,
                (!table.converged).then(|| {
                    format!(
                        "errors {:?}",
                        table.rows.iter().map(|r| r.error).collect::<Vec<_>>()
                    )
                }),
            );
        }
        Err(e) => report.check(format!("{name}.deformation_converges"), false, Some(e.to_string())),
    }

    // osculating fiber multiplication agrees with BCH through multiply()
    let g = TangentGroupoidElement::Osculating {
        base: origin.clone(),
        v: v.clone(),
    };
    let h = TangentGroupoidElement::Osculating {
        base: origin.clone(),
        v: w.clone(),
    };
    let fiber_ok = match multiply(chart, &g, &h) {
        Ok(TangentGroupoidElement::Osculating { v: prod, .. }) => {
            prod == alg.bch_product(&w, &v).unwrap()
        }
        _ => false,
    };
    report.check(
        format!("{name}.fiber_product_convention"),
        fiber_ok,
        (!fiber_ok).then(|| "multiply disagrees with bch(h.v, g.v)".to_string()),
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_command_on_bundled() {
        let m = load("heisenberg3").unwrap();
        let report = cmd_validate(&m, &Overrides::default()).unwrap();
        assert!(report.passed, "{}", report.to_text());
        let m = load("engel4").unwrap();
        assert!(cmd_validate(&m, &Overrides::default()).unwrap().passed);
        let m = load("heisenberg3-bad-order").unwrap();
        let report = cmd_validate(&m, &Overrides::default()).unwrap();
        assert!(!report.passed);
        assert!(report.to_text().contains("pair (1,2)"));
    }

    #[test]
    fn osculate_command_values() {
        let m = load("heisenberg3").unwrap();
        let report = cmd_osculate(&m, "0,0,0", &Overrides::default()).unwrap();
        assert!(report.passed);
        let text = report.to_text();
        assert!(text.contains("c[1][2]^[3] = 1"));
        // depth-1 chart is abelian
        let m = load("abelian3").unwrap();
        let report = cmd_osculate(&m, "0,0,0", &Overrides::default()).unwrap();
        assert!(report.to_text().contains("all zero (abelian)"));
        // engel4 carries the two ladder brackets
        let m = load("engel4").unwrap();
        let report = cmd_osculate(&m, "0,0,0,0", &Overrides::default()).unwrap();
        let text = report.to_text();
        assert!(text.contains("c[1][2]^[3] = 1"));
        assert!(text.contains("c[1][3]^[4] = 1"));
    }

    #[test]
    fn bch_command_examples() {
        let m = load("heisenberg3").unwrap();
        let report =
            cmd_bch(&m, "0,0,0", "1,0,0", "0,1,0", &Overrides::default()).unwrap();
        assert!(report.to_text().contains("bch(u,v) = (1, 1, 1/2)"));
        // inverse law
        let report =
            cmd_bch(&m, "0,0,0", "1,2,3", "-1,-2,-3", &Overrides::default()).unwrap();
        assert!(report.to_text().contains("bch(u,v) = (0, 0, 0)"));
        // engel4 degree-3 coefficient
        let m = load("engel4").unwrap();
        let report =
            cmd_bch(&m, "0,0,0,0", "1,0,0,0", "0,1,0,0", &Overrides::default()).unwrap();
        assert!(report.to_text().contains("(1, 1, 1/2, 1/12)"));
        // wrong dimension is a usage error
        assert!(matches!(
            cmd_bch(&m, "0,0,0,0", "1,0", "0,1,0,0", &Overrides::default()),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn chart_command_roundtrip() {
        let m = load("heisenberg3").unwrap();
        let report = cmd_chart(&m, "0,0,0", "0,0,1", "1/2", true, &Overrides::default()).unwrap();
        assert!(report.passed, "{}", report.to_text());
        let text = report.to_text();
        assert!(text.contains("roundtrip_error"));
        // t = 0 reports the osculating fiber
        let report = cmd_chart(&m, "0,0,0", "0,0,1", "0", false, &Overrides::default()).unwrap();
        assert!(report.to_text().contains("osculating element"));
    }

    #[test]
    fn deform_command_on_exact_chart() {
        let m = load("heisenberg3").unwrap();
        let report = cmd_deform(
            &m,
            "0,0,0",
            "1/2,1/4,0",
            "1/4,-1/2,1/8",
            None,
            &Overrides::default(),
        )
        .unwrap();
        assert!(report.passed, "{}", report.to_text());
        let text = report.to_text();
        assert!(text.contains("pipeline = exact-rational"));
        assert!(text.contains("0 (exact)"));
    }

    #[test]
    fn selftest_passes() {
        let report = cmd_selftest(&Overrides::default()).unwrap();
        assert!(report.passed, "{}", report.to_text());
        // deterministic output
        let again = cmd_selftest(&Overrides::default()).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }
}
