use std::f64::consts::PI;
use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::monotone::{
    area_period_check, certify, certify_chow_wang, certify_numeric, chow_wang_h, chow_wang_terms, CurvatureAt, Method,
    MonotoneError, MonotoneOptions, Verdict,
};
use horseshoe::orbits::{measure_period, Annulus, OrbitOptions, Subsystem};

fn e(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn newton(g: &str, center: f64) -> Arc<Subsystem> {
    Arc::new(Subsystem::newtonian("test", &e(g), center).unwrap())
}

/// H from finite differences and composite Simpson quadrature, independent of
/// the symbolic derivatives and the adaptive quadrature in the library.
fn oracle_h(g: impl Fn(f64) -> f64, xc: f64, x: f64, curvature_at_x: bool) -> f64 {
    let d = 1e-4;
    let dg = |t: f64| (g(t + d) - g(t - d)) / (2.0 * d);
    let d2g = |t: f64| (g(t + d) - 2.0 * g(t) + g(t - d)) / (d * d);
    let n = 2000;
    let h = (x - xc) / n as f64;
    let mut s = g(xc) + g(x);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(xc + k as f64 * h);
    }
    let big_g = s * h / 3.0;
    let c = if curvature_at_x { d2g(x) } else { d2g(xc) };
    let gx = g(x);
    gx * gx + c * gx.powi(3) / (3.0 * dg(xc).powi(2)) - 2.0 * big_g * dg(x)
}

#[test]
fn harmonic_h_vanishes() {
    let s = newton("x", 0.0);
    for k in 0..=200 {
        let x = -10.0 + 0.1 * k as f64;
        assert!(chow_wang_h(&s, x).unwrap().abs() <= 1e-12, "x = {x}");
    }
}

#[test]
fn pointwise_and_centered_curvature_values() {
    let pend = newton("sin(x)", 0.0);
    let t = chow_wang_terms(&pend, PI / 2.0, CurvatureAt::Point).unwrap();
    assert!((t.h - 2.0 / 3.0).abs() < 1e-12, "{}", t.h);
    assert!((t.h - oracle_h(f64::sin, 0.0, PI / 2.0, true)).abs() < 1e-6);
    let c = chow_wang_h(&pend, PI / 2.0).unwrap();
    assert!((c - 1.0).abs() < 1e-12, "{c}");

    let duff = newton("x + x^3", 0.0);
    let t = chow_wang_terms(&duff, 1.0, CurvatureAt::Point).unwrap();
    assert!((t.h - 14.0).abs() < 1e-12);
    assert!((t.h - oracle_h(|x| x + x * x * x, 0.0, 1.0, true)).abs() < 1e-5);
    let c = chow_wang_h(&duff, 1.0).unwrap();
    assert!((c + 2.0).abs() < 1e-12);
    assert!((c - oracle_h(|x| x + x * x * x, 0.0, 1.0, false)).abs() < 1e-5);
}

#[test]
fn pendulum_h_is_the_square_of_one_minus_cosine() {
    let s = newton("sin(x)", 0.0);
    for k in 1..40 {
        let x = -PI + k as f64 * PI / 20.0;
        if x.abs() < 1e-12 {
            continue;
        }
        let h = chow_wang_h(&s, x).unwrap();
        assert!(h > 0.0);
        assert!((h - (1.0 - x.cos()).powi(2)).abs() < 1e-12);
    }
}

#[test]
fn pendulum_certificate_is_increasing() {
    let s = newton("sin(x)", 0.0);
    let cert = certify_chow_wang(&s, (-PI, PI), &MonotoneOptions::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Increasing);
    assert_eq!(cert.method, Method::ChowWang);
    assert_eq!(cert.grid.len(), 2 * 257);
    assert!(cert.grid.iter().all(|g| g.sign == 1 && g.x != 0.0));
    assert_eq!(cert.checks.equal_potential_ends, Some(true));
    assert_eq!(cert.label, "criterion satisfied on grid");
}

#[test]
fn harmonic_certificate_is_isochronous_after_period_check() {
    let s = newton("x", 0.0);
    let cert = certify_chow_wang(&s, (-1.0, 1.0), &MonotoneOptions::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Isochronous);
    assert_eq!(cert.periods.len(), 3);
}

#[test]
fn sign_condition_violation_is_reported() {
    let s = newton("x - x^2", 0.0);
    match certify_chow_wang(&s, (-0.5, 1.5), &MonotoneOptions::default()) {
        Err(MonotoneError::HypothesisViolated { detail }) => assert!(detail.contains("g(x) > 0")),
        other => panic!("{other:?}"),
    }
    let off = certify_chow_wang(&s, (0.2, 0.5), &MonotoneOptions::default());
    assert!(matches!(off, Err(MonotoneError::HypothesisViolated { .. })));
}

fn annulus(s: Arc<Subsystem>, a: f64, b: f64) -> Annulus {
    let c = s.center()[0];
    Annulus::from_seeds(s, [c + a, 0.0], [c + b, 0.0], OrbitOptions::default()).unwrap()
}

/// Monotonicity ground truth: periods at 20 energies, strictly ordered.
fn brute_force(s: &Subsystem, a: f64, b: f64) -> Verdict {
    let c = s.center()[0];
    let p: Vec<f64> = (0..20)
        .map(|k| {
            let r = a + (b - a) * k as f64 / 19.0;
            measure_period(s, [c + r, 0.0], &OrbitOptions::default()).unwrap().period
        })
        .collect();
    if p.windows(2).all(|w| w[1] > w[0] + 1e-9) {
        Verdict::Increasing
    } else if p.windows(2).all(|w| w[1] < w[0] - 1e-9) {
        Verdict::Decreasing
    } else if p.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-8) {
        Verdict::Isochronous
    } else {
        Verdict::Inconclusive
    }
}

#[test]
fn routes_agree_with_the_brute_force_profile() {
    let opts = MonotoneOptions::default();
    for (g, a, b, expected) in [
        ("sin(x)", 0.3, 2.0, Verdict::Increasing),
        ("x + x^3", 0.3, 1.5, Verdict::Decreasing),
        ("x", 0.3, 1.5, Verdict::Isochronous),
    ] {
        let s = newton(g, 0.0);
        let ann = annulus(s.clone(), a, b);
        assert_eq!(brute_force(&s, a, b), expected, "{g}");
        let num = certify_numeric(&ann, 9, &opts).unwrap();
        assert_eq!(num.verdict, expected, "{g} numeric");
        let cw = certify(&ann, &opts).unwrap();
        assert_eq!(cw.method, Method::ChowWang);
        assert_eq!(cw.verdict, expected, "{g} chow-wang");
    }
}

fn sir(alpha: f64) -> Arc<Subsystem> {
    let h = format!("(x + {alpha})^2 / 2 + y - log(1 + y)");
    Arc::new(Subsystem::hamiltonian("sir", &e(&h), Some(&e("-(1 + y)")), [-alpha, 0.0]).unwrap())
}

#[test]
fn sir_is_increasing_and_area_derivative_is_the_period() {
    let ann = Annulus::from_seeds(sir(-1.0), [-1.0 / 3.0, 0.0], [-2.0 / 3.0, 0.0], OrbitOptions::default()).unwrap();
    let cert = certify(&ann, &MonotoneOptions::default()).unwrap();
    assert_eq!(cert.method, Method::NumericArea);
    assert_eq!(cert.verdict, Verdict::Increasing);
    assert_eq!(cert.label, "evidence");
    let check = area_period_check(&ann, 9, 1e-4).unwrap();
    assert_eq!(check.rows.len(), 9);
    assert!(check.passed, "max rel error {}", check.max_rel_error);
}

#[test]
fn grid_csv_has_one_row_per_point() {
    let s = newton("sin(x)", 0.0);
    let cert = certify_chow_wang(&s, (-1.0, 1.0), &MonotoneOptions { points_per_side: 5, ..Default::default() }).unwrap();
    let mut out = Vec::new();
    cert.write_grid_csv(&mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 11);
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["method"], "chow-wang");
    assert_eq!(json["verdict"], "increasing");
}
