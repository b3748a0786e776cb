//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line and enforcing its stated time budget.
//!
//! Everything algebraic is asserted exactly over the rationals; the
//! numeric chart criteria pin their tolerances here, in code.

use carnot::bundled;
use carnot::exponential_charts::{
    multiply_exact, ChartDomain, ExactGroupoidElement, ExponentialChart, GradedConnection,
};
use carnot::filtration::{validate_filtration, Splitting, ValidatedChart};
use carnot::graded_algebra::{AlgebraVector, GradedNilpotentLieAlgebra};
use carnot::rational::{rat, rat_int, rat_to_f64, Rat};
use carnot::sampling::Sampler;
use carnot::tangent_algebroid::{phi_psi, transition_matrix, GradedSection, HSection};
use num::{One, Zero};
use std::time::Instant;

const SEED: u64 = 0xACCE97;

fn finish(criterion: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("ACCEPTANCE {criterion}: PASS ({elapsed:.2} s, budget {budget_s} s)");
    assert!(
        elapsed <= budget_s,
        "{criterion} exceeded its {budget_s} s budget: {elapsed:.2} s"
    );
}

fn official_charts() -> Vec<(&'static str, ValidatedChart)> {
    vec![
        ("abelian3", bundled::abelian_validated(3)),
        ("heisenberg3", bundled::heisenberg3_validated()),
        ("engel4", bundled::engel4_validated()),
        ("twisted-heisenberg", bundled::twisted_heisenberg_validated()),
    ]
}

/// Criterion 1: exact algebra axioms at every sample point of every
/// bundled chart; corrupted fixtures fail with the right witnesses.
#[test]
fn criterion_01_algebra_axioms() {
    let started = Instant::now();
    for (name, chart) in official_charts() {
        assert!(
            chart.sample_points().len() >= 17,
            "{name}: need at least 17 sample points"
        );
        for p in chart.sample_points() {
            let alg = chart.osculating_algebra_at(p).expect("validated chart");
            let verdict = alg.verify();
            assert!(verdict.passed(), "{name} at ({p:?}): {verdict}");
        }
    }
    // corrupted constants: c_{12}^3 = 1 with w_3 = 1 breaks gradedness,
    // witness names the entry
    let graded_bad = GradedNilpotentLieAlgebra::from_sparse_brackets(
        vec![1, 1, 1],
        &[(0, 1, 2, Rat::one())],
    )
    .unwrap();
    let report = graded_bad.verify();
    let fail = report.failure("gradedness").expect("gradedness must fail");
    assert!(fail.witness.as_deref().unwrap().contains("c[1][2][3]"));
    // Jacobi corruption carries the failing basis triple
    let report = bundled::corrupted_jacobi_constants().verify();
    let fail = report.failure("jacobi").expect("jacobi must fail");
    assert!(fail.witness.as_deref().unwrap().contains("(1,2,3)"));
    // the bundled graded corruption is caught as well
    assert!(!bundled::corrupted_graded_constants().verify().passed());
    finish("1 algebra-axioms", started, 2.0);
}

/// Criterion 2: BCH group axioms on 100 seeded rational triples in the
/// depth-3 engel4 osculating algebra, exactly.
#[test]
fn criterion_02_bch_group_axioms() {
    let started = Instant::now();
    let chart = bundled::engel4_validated();
    let alg = chart
        .osculating_algebra_at(&vec![Rat::zero(); 4])
        .expect("validated chart");
    assert_eq!(alg.depth(), 3);
    let mut sampler = Sampler::new(SEED);
    let zero = AlgebraVector::zero(4);
    for _ in 0..100 {
        let u = AlgebraVector::new(sampler.rational_vec(4, 4));
        let v = AlgebraVector::new(sampler.rational_vec(4, 4));
        let w = AlgebraVector::new(sampler.rational_vec(4, 4));
        let left = alg
            .bch_product(&alg.bch_product(&u, &v).unwrap(), &w)
            .unwrap();
        let right = alg
            .bch_product(&u, &alg.bch_product(&v, &w).unwrap())
            .unwrap();
        assert_eq!(left, right, "associativity fails for u={u} v={v} w={w}");
        assert_eq!(alg.bch_product(&u, &zero).unwrap(), u, "right identity");
        assert_eq!(alg.bch_product(&zero, &u).unwrap(), u, "left identity");
        assert!(
            alg.bch_product(&u, &u.neg()).unwrap().is_zero(),
            "inverse fails for u={u}"
        );
    }
    finish("2 bch-group-axioms", started, 5.0);
}

/// Criterion 3: dilations commute with bracket and BCH for 20 seeded
/// rational λ ≠ 0, exactly.
#[test]
fn criterion_03_dilation_homomorphism() {
    let started = Instant::now();
    let chart = bundled::engel4_validated();
    let alg = chart
        .osculating_algebra_at(&vec![Rat::zero(); 4])
        .expect("validated chart");
    let mut sampler = Sampler::new(SEED + 3);
    for _ in 0..20 {
        let lambda = sampler.nonzero_rational(4);
        let u = AlgebraVector::new(sampler.rational_vec(4, 3));
        let v = AlgebraVector::new(sampler.rational_vec(4, 3));
        let du = alg.dilate(&lambda, &u).unwrap();
        let dv = alg.dilate(&lambda, &v).unwrap();
        assert_eq!(
            alg.bracket(&du, &dv).unwrap(),
            alg.dilate(&lambda, &alg.bracket(&u, &v).unwrap()).unwrap(),
            "bracket homomorphism fails at λ = {lambda}"
        );
        assert_eq!(
            alg.bch_product(&du, &dv).unwrap(),
            alg.dilate(&lambda, &alg.bch_product(&u, &v).unwrap())
                .unwrap(),
            "group homomorphism fails at λ = {lambda}"
        );
    }
    finish("3 dilation-homomorphism", started, 2.0);
}

/// Criterion 4: filtration validation passes on the bundled charts and
/// fails on the order-relabeled fixture with a (pair, point) witness.
#[test]
fn criterion_04_filtration_validation() {
    let started = Instant::now();
    for name in ["heisenberg3", "engel4", "twisted-heisenberg"] {
        let chart = bundled::chart_by_name(name).unwrap();
        let report = validate_filtration(&chart);
        assert!(report.passed(), "{name}: {report}");
    }
    let report = validate_filtration(&bundled::heisenberg3_bad_order_chart());
    assert!(!report.passed());
    let fail = report.first_failure().expect("a failing check");
    assert_eq!(fail.name, "bracket_filtration");
    let witness = fail.witness.as_deref().unwrap();
    assert!(witness.contains("pair (1,2)"), "witness: {witness}");
    assert!(witness.contains("at point ("), "witness: {witness}");
    finish("4 filtration-validation", started, 2.0);
}

fn seeded_section_pairs(
    chart: &ValidatedChart,
    count: usize,
    seed: u64,
) -> Vec<(Splitting, HSection, HSection)> {
    let mut sampler = Sampler::new(seed);
    (0..count)
        .map(|_| {
            let psi = Splitting::random(chart, &mut sampler);
            let s1 = phi_psi(&psi, &GradedSection::random(chart, &mut sampler)).unwrap();
            let s2 = phi_psi(&psi, &GradedSection::random(chart, &mut sampler)).unwrap();
            (psi, s1, s2)
        })
        .collect()
}

/// Criterion 5: the algebroid bracket of 50 seeded section pairs, pushed
/// through Φ^ψ with random splittings, stays in the section module.
#[test]
fn criterion_05_section_module_closure() {
    let started = Instant::now();
    let h3 = bundled::heisenberg3_validated();
    let e4 = bundled::engel4_validated();
    let pairs: Vec<_> = seeded_section_pairs(&h3, 30, SEED + 5)
        .into_iter()
        .map(|p| (h3.clone(), p))
        .chain(
            seeded_section_pairs(&e4, 20, SEED + 5)
                .into_iter()
                .map(|p| (e4.clone(), p)),
        )
        .collect();
    assert_eq!(pairs.len(), 50);
    for (_, (_, s1, s2)) in &pairs {
        assert!(s1.membership().is_member());
        assert!(s2.membership().is_member());
        let bracket = s1.algebroid_bracket(s2).expect("bracket computes");
        assert!(
            bracket.membership().is_member(),
            "bracket left the section module"
        );
    }
    finish("5 section-module-closure", started, 5.0);
}

/// Criterion 6: the graded evaluation at t = 0 carries the algebroid
/// bracket onto the pointwise osculating bracket, exactly, on the same
/// 50 pairs.
#[test]
fn criterion_06_ev0_morphism() {
    let started = Instant::now();
    for (chart, count) in [
        (bundled::heisenberg3_validated(), 30),
        (bundled::engel4_validated(), 20),
    ] {
        for (_, s1, s2) in seeded_section_pairs(&chart, count, SEED + 5) {
            let lhs = s1.algebroid_bracket(&s2).unwrap().ev0h().unwrap();
            let g1 = s1.ev0h().unwrap();
            let g2 = s2.ev0h().unwrap();
            for p in chart.sample_points().iter().take(5) {
                let alg = chart.osculating_algebra_at(p).unwrap();
                let expected = alg
                    .bracket(
                        &g1.value_at(p, &Rat::zero()).unwrap(),
                        &g2.value_at(p, &Rat::zero()).unwrap(),
                    )
                    .unwrap();
                assert_eq!(
                    lhs.value_at(p, &Rat::zero()).unwrap(),
                    expected,
                    "morphism fails at ({p:?})"
                );
            }
        }
    }
    finish("6 ev0-morphism", started, 5.0);
}

/// Criterion 7: Φ^ψ round-trips exactly, and transition matrices between
/// 10 seeded splitting pairs are unitriangular with entry (j,k) a
/// rational multiple of t^{k−j}, identity at t = 0, symbolically in t.
#[test]
fn criterion_07_splitting_independence() {
    let started = Instant::now();
    let chart = bundled::engel4_validated();
    let mut sampler = Sampler::new(SEED + 7);
    for _ in 0..10 {
        let psi = Splitting::random(&chart, &mut sampler);
        let phi = Splitting::random(&chart, &mut sampler);
        let y = GradedSection::random(&chart, &mut sampler);
        // exact round trip
        let through = carnot::tangent_algebroid::phi_psi_inverse(&psi, &phi_psi(&psi, &y).unwrap())
            .unwrap();
        assert_eq!(through, y, "Φ^ψ round trip must be exact");
        // transition matrix structure, exactly in symbolic t
        let p = &chart.sample_points()[1];
        let m = transition_matrix(&psi, &phi, p).unwrap();
        for (row, cols) in m.iter().enumerate() {
            for (col, entry) in cols.iter().enumerate() {
                let (oj, ok) = (chart.orders()[row], chart.orders()[col]);
                if row == col {
                    assert!(entry.is_constant() && entry.constant_term().is_one());
                } else if oj >= ok {
                    assert!(entry.is_zero(), "entry ({row},{col}) below the diagonal");
                } else if !entry.is_zero() {
                    // a single term c·t^{k−j}
                    let terms: Vec<_> = entry.terms().collect();
                    assert_eq!(terms.len(), 1);
                    assert_eq!(terms[0].0[0], ok - oj, "t-power must be k−j");
                }
                // identity at t = 0
                let at0 = entry.subst(0, &Rat::zero()).constant_term();
                let expected = if row == col { Rat::one() } else { Rat::zero() };
                assert_eq!(at0, expected);
            }
        }
    }
    finish("7 splitting-independence", started, 3.0);
}

/// Criterion 8: exponential charts. The t = 0 slice is the identity; flat
/// affine charts match the closed form F(x)·diag(t^{o_a})·v to 1e−12;
/// curved charts agree with step-halved reruns to 1e−10 relative; and
/// chart_log round-trips to 1e−10 on 200 seeded samples inside the
/// probed domain.
#[test]
fn criterion_08_exponential_charts() {
    let started = Instant::now();
    let ctrl = ChartDomain::default();

    // (a) t = 0 identity on every bundled chart, any splitting
    for (_, chart) in official_charts() {
        let mut sampler = Sampler::new(SEED + 8);
        let exp = ExponentialChart::new(
            &GradedConnection::flat(&chart),
            &Splitting::random(&chart, &mut sampler),
        )
        .unwrap();
        let x: Vec<Rat> = sampler.rational_vec(chart.dim(), 2);
        let v = AlgebraVector::new(sampler.rational_vec(chart.dim(), 2));
        match exp.global_chart(&x, &v, &Rat::zero(), &ctrl).unwrap() {
            carnot::exponential_charts::TangentGroupoidElement::Osculating { base, v: vv } => {
                assert_eq!(base, x);
                assert_eq!(vv, v);
            }
            _ => panic!("t = 0 must land in the osculating fiber"),
        }
    }

    // (b) flat charts against the closed form, computed independently here
    // from the frame matrix
    for chart in [bundled::abelian_validated(3), bundled::heisenberg3_validated()] {
        let exp = ExponentialChart::new(
            &GradedConnection::flat(&chart),
            &Splitting::canonical(&chart),
        )
        .unwrap();
        let mut sampler = Sampler::new(SEED + 80);
        for _ in 0..25 {
            let x: Vec<Rat> = sampler
                .rational_vec(chart.dim(), 2)
                .iter()
                .map(|c| c.clone() * rat(1, 4))
                .collect();
            let v = AlgebraVector::new(
                sampler
                    .rational_vec(chart.dim(), 3)
                    .iter()
                    .map(|c| c.clone() * rat(1, 4))
                    .collect(),
            );
            for t in [Rat::one(), rat(1, 2), rat(1, 4), rat(1, 8)] {
                let numeric = match exp.global_chart(&x, &v, &t, &ctrl).unwrap() {
                    carnot::exponential_charts::TangentGroupoidElement::Pair { range, .. } => range,
                    _ => unreachable!(),
                };
                // closed form: x + F(x)·diag(t^{o_a})·v, exact then to f64
                let f = chart.frame_matrix_at(&x).unwrap();
                let dilated: Vec<Rat> = v
                    .coords()
                    .iter()
                    .zip(chart.orders())
                    .map(|(c, &o)| {
                        let mut acc = c.clone();
                        for _ in 0..o {
                            acc *= t.clone();
                        }
                        acc
                    })
                    .collect();
                let moved = f.mul_vec(&dilated);
                let expected: Vec<f64> = x
                    .iter()
                    .zip(&moved)
                    .map(|(a, b)| rat_to_f64(&(a.clone() + b.clone())))
                    .collect();
                let err = numeric
                    .iter()
                    .zip(&expected)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                assert!(err <= 1e-12, "closed form error {err:.3e} at t = {t}");
            }
        }
    }

    // (c) step-halving agreement on the curved chart
    let engel = bundled::engel4_validated();
    let exp = ExponentialChart::new(
        &GradedConnection::flat(&engel),
        &Splitting::canonical(&engel),
    )
    .unwrap();
    let halved = ChartDomain {
        steps: 512,
        ..ctrl.clone()
    };
    let mut sampler = Sampler::new(SEED + 81);
    for _ in 0..25 {
        let x: Vec<f64> = (0..4).map(|_| sampler.f64_in(-0.5, 0.5)).collect();
        let v: Vec<f64> = (0..4).map(|_| sampler.f64_in(-0.7, 0.7)).collect();
        let coarse = exp.exp_geodesic(&x, &v, &ctrl).unwrap();
        let fine = exp.exp_geodesic(&x, &v, &halved).unwrap();
        let scale = fine.iter().fold(1.0f64, |m, &c| m.max(c.abs()));
        let err = coarse
            .iter()
            .zip(&fine)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        assert!(err <= 1e-10, "step-halving relative error {err:.3e}");
    }

    // (d) chart_log round trips on 200 seeded samples inside the probed
    // domain
    let probe_ctrl = ChartDomain {
        radius: 0.9,
        ..ctrl.clone()
    };
    for chart in [bundled::heisenberg3_validated(), bundled::engel4_validated()] {
        let exp = ExponentialChart::new(
            &GradedConnection::flat(&chart),
            &Splitting::canonical(&chart),
        )
        .unwrap();
        let probe = exp.injectivity_probe(&probe_ctrl, 1000, SEED + 82);
        assert!(probe.collision.is_none(), "{}", probe.message);
        let mut sampler = Sampler::new(SEED + 83);
        for _ in 0..100 {
            let x: Vec<Rat> = sampler
                .rational_vec(chart.dim(), 2)
                .iter()
                .map(|c| c.clone() * rat(1, 4))
                .collect();
            let v = AlgebraVector::new(
                sampler
                    .rational_vec(chart.dim(), 3)
                    .iter()
                    .map(|c| c.clone() * rat(1, 4))
                    .collect(),
            );
            let t = [Rat::one(), rat(1, 2), rat(1, 4)][sampler.usize_below(3)].clone();
            let arrow = exp.global_chart(&x, &v, &t, &probe_ctrl).unwrap();
            let log = exp.chart_log(&arrow, &probe_ctrl).unwrap();
            let err = log
                .v
                .iter()
                .zip(v.coords())
                .fold(0.0f64, |m, (a, b)| m.max((a - rat_to_f64(b)).abs()));
            assert!(err <= 1e-10, "round-trip error {err:.3e} at t = {t}");
        }
    }
    finish("8 exponential-charts", started, 15.0);
}

/// Criterion 9: deformation content of the tangent-groupoid smooth
/// structure.  (a) heisenberg3 flat: the chart-pullback product equals the
/// convention-fixed BCH product exactly at t ∈ {1, 1/2, 1/4, 1/8};
/// (b) twisted-heisenberg: error ratios in [0.35, 0.65] along the dyadic
/// sequence; (c) abelian: the product is v + w to 1e−12 at all t.
#[test]
fn criterion_09_deformation_limit() {
    let started = Instant::now();
    let ctrl = ChartDomain::default();

    // (a) heisenberg3, exact rational pipeline, exact equality
    let h3 = bundled::heisenberg3_validated();
    let exp = ExponentialChart::new(&GradedConnection::flat(&h3), &Splitting::canonical(&h3))
        .unwrap();
    assert!(exp.exact_available());
    let x = vec![rat(1, 4), rat(-1, 3), Rat::zero()];
    let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 3), rat(-1, 4)]);
    let w = AlgebraVector::new(vec![rat(-1, 3), rat(1, 2), rat(1, 5)]);
    let ts = [Rat::one(), rat(1, 2), rat(1, 4), rat(1, 8)];
    let report = exp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    assert!(report.exact_pipeline);
    assert!(
        report.rows.iter().all(|r| r.exact_zero),
        "heisenberg pullback product must equal bch(w, v) exactly"
    );
    // cross-check the limit against a direct exact composition
    let alg = h3.osculating_algebra_at(&x).unwrap();
    assert_eq!(report.limit, alg.bch_product(&w, &v).unwrap());
    let h = exp.global_chart_exact(&x, &w, &rat(1, 2)).unwrap();
    let range = match &h {
        ExactGroupoidElement::Pair { range, .. } => range.clone(),
        _ => unreachable!(),
    };
    let g = exp.global_chart_exact(&range, &v, &rat(1, 2)).unwrap();
    let prod = multiply_exact(&h3, &g, &h).unwrap();
    let (_, u, _) = exp.chart_log_exact(&prod).unwrap();
    assert_eq!(u, report.limit);

    // (b) twisted-heisenberg: first-order convergence ratios
    let tw = bundled::twisted_heisenberg_validated();
    let texp = ExponentialChart::new(&GradedConnection::flat(&tw), &Splitting::canonical(&tw))
        .unwrap();
    assert!(!texp.exact_available());
    let x = vec![Rat::zero(); 3];
    let v = AlgebraVector::new(vec![rat(1, 2), rat(1, 4), rat(1, 8)]);
    let w = AlgebraVector::new(vec![rat(1, 4), rat(-1, 2), rat(1, 8)]);
    let ts: Vec<Rat> = (3..=8).map(|k| rat(1, 1 << k)).collect();
    let report = texp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    let ratios = report.error_ratios();
    assert_eq!(ratios.len(), 5);
    for ratio in &ratios {
        assert!(
            (0.35..=0.65).contains(ratio),
            "ratio {ratio} outside [0.35, 0.65]; errors {:?}",
            report.rows.iter().map(|r| r.error).collect::<Vec<_>>()
        );
    }

    // (c) abelian: v + w, exactly, at every t
    let ab = bundled::abelian_validated(3);
    let aexp = ExponentialChart::new(&GradedConnection::flat(&ab), &Splitting::canonical(&ab))
        .unwrap();
    let x = vec![rat(1, 3), rat(-1, 5), rat(2, 7)];
    let v = AlgebraVector::new(vec![rat(1, 3), rat(-1, 4), rat(1, 5)]);
    let w = AlgebraVector::new(vec![rat(1, 7), rat(2, 5), rat(-1, 3)]);
    let ts = [Rat::one(), rat(1, 2), rat(1, 4), rat(1, 8)];
    let report = aexp.deformation_limit_check(&x, &v, &w, &ts, &ctrl).unwrap();
    assert_eq!(report.limit, v.add(&w));
    for row in &report.rows {
        assert!(row.error <= 1e-12, "abelian error {} at t = {}", row.error, row.t);
    }
    finish("9 deformation-limit", started, 15.0);
}

/// Criterion 10: the Leibniz rule for the algebroid bracket at fixed
/// t ∈ {1, 1/2}, exactly, for 20 seeded polynomial functions.
#[test]
fn criterion_10_leibniz_rule() {
    let started = Instant::now();
    let chart = bundled::heisenberg3_validated();
    let mut sampler = Sampler::new(SEED + 10);
    let section_vars = chart.vars().extended("t");
    for round in 0..20 {
        let psi = Splitting::random(&chart, &mut sampler);
        let s1 = phi_psi(&psi, &GradedSection::random(&chart, &mut sampler)).unwrap();
        let s2 = phi_psi(&psi, &GradedSection::random(&chart, &mut sampler)).unwrap();
        let f = sampler.polynomial(&section_vars, 2, 2);
        for t0 in [rat_int(1), rat(1, 2)] {
            let lhs = s1
                .algebroid_bracket(&s2.scale_poly(&f).unwrap())
                .unwrap()
                .ev_t(&t0)
                .unwrap();
            let f_t = f
                .subst(chart.dim(), &t0)
                .drop_var(chart.dim(), chart.vars())
                .unwrap();
            let x_t = s1.ev_t(&t0).unwrap();
            let y_t = s2.ev_t(&t0).unwrap();
            let rhs = s1
                .algebroid_bracket(&s2)
                .unwrap()
                .ev_t(&t0)
                .unwrap()
                .scale_poly(&f_t)
                .unwrap()
                .add(&y_t.scale_poly(&x_t.apply(&f_t).unwrap()).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs, "Leibniz fails in round {round} at t = {t0}");
        }
    }
    finish("10 leibniz-rule", started, 3.0);
}
