use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use horseshoe::expr::{Expr, Var};
use horseshoe::geometry::{build_quadrilateral, check_condition_i};
use horseshoe::monotone::chow_wang_h;
use horseshoe::ode::{integrate, Tolerances};
use horseshoe::orbits::{measure_period, Annulus, OrbitOptions, Placement, Subsystem};
use horseshoe::switching::{dwell_star, winding_counts, DwellBounds, SwitchedSystem, SwitchingSchedule};

fn e(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

/// Polynomial expressions in x and y, nested at most six levels deep.
fn polynomial() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("({c})")),
    ];
    leaf.prop_recursive(6, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn circles(cx: f64, ccw: bool) -> Arc<Subsystem> {
    let r = format!("(1 + sqrt((x - ({cx}))^2 + y^2))");
    let (fx, fy) = if ccw {
        (format!("-y / {r}"), format!("(x - ({cx})) / {r}"))
    } else {
        (format!("y / {r}"), format!("-(x - ({cx})) / {r}"))
    };
    Arc::new(Subsystem::general("circles", &e(&fx), &e(&fy), [cx, 0.0]).unwrap())
}

fn sir_annulus() -> Annulus {
    let h = e("(x - 1)^2 / 2 + y - log(1 + y)");
    let s = Arc::new(Subsystem::hamiltonian("sir", &h, Some(&e("-(1 + y)")), [1.0, 0.0]).unwrap());
    Annulus::from_seeds(s, [1.0 / 3.0, 0.0], [-1.0 / 3.0, 0.0], OrbitOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_central_differences(src in polynomial(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let f = e(&src);
        let h = 1e-5;
        for (var, dx, dy) in [(Var::X, h, 0.0), (Var::Y, 0.0, h)] {
            let d = f.differentiate(var).eval(x, y).unwrap();
            let fd = (f.eval(x + dx, y + dy).unwrap() - f.eval(x - dx, y - dy).unwrap()) / (2.0 * h);
            // Central differences carry O(h^2) truncation and O(eps/h) rounding
            // of the function values.
            let scale = f.eval(x + dx, y + dy).unwrap().abs().max(f.eval(x - dx, y - dy).unwrap().abs());
            let tol = 1e-6 * d.abs().max(1.0) + 1e-10 * scale;
            prop_assert!((d - fd).abs() <= tol, "{src}: d/d{var:?} = {d}, difference quotient {fd}");
        }
    }

    #[test]
    fn evaluation_is_deterministic(src in polynomial(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let f = e(&src);
        prop_assert_eq!(f.eval(x, y).unwrap().to_bits(), f.eval(x, y).unwrap().to_bits());
        prop_assert_eq!(e(&src), f);
    }

    #[test]
    fn printed_form_reparses_to_the_same_function(src in polynomial(), x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let f = e(&src);
        let printed = f.to_string();
        let g = Expr::parse(&printed).unwrap();
        let (a, b) = (f.eval(x, y).unwrap(), g.eval(x, y).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{src} printed as {printed}: {a} vs {b}");
        prop_assert_eq!(g.to_string(), printed);
    }

    #[test]
    fn parser_never_panics(src in "\\PC{0,40}") {
        if let Err(err) = Expr::parse(&src) {
            prop_assert!(err.offset() <= src.len());
        }
    }

    #[test]
    fn parser_survives_operator_soup(src in "[xy0-9.+*/^()e -]{0,30}") {
        let _ = Expr::parse(&src);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_drift_stays_within_the_tolerance_budget(amp in 0.1f64..2.5, rtol_exp in 6i32..11) {
        let s = Subsystem::newtonian("pendulum", &e("sin(x)"), 0.0).unwrap();
        let rtol = 10f64.powi(-rtol_exp);
        let tol = Tolerances::with(rtol, rtol * 1e-2);
        let traj = integrate(s.field(), [amp, 0.0], 50.0, &tol).unwrap();
        let h0 = s.energy([amp, 0.0]).unwrap().unwrap();
        for st in &traj.states {
            let h = s.energy(*st).unwrap().unwrap();
            prop_assert!((h - h0).abs() <= 100.0 * rtol * (1.0 + h0.abs()), "drift {} at rtol {rtol}", (h - h0).abs());
        }
    }

    #[test]
    fn tighter_tolerance_never_loses_accuracy(amp in 0.2f64..3.0, k in 5i32..10) {
        // The harmonic oscillator returns to its start after 2π.
        let field = horseshoe::ode::FieldFn::new("rotation", |p: [f64; 2]| Ok([-p[1], p[0]]));
        let err = |rtol: f64| {
            let end = integrate(&field, [amp, 0.0], 2.0 * PI, &Tolerances::with(rtol, rtol * 1e-2)).unwrap().final_state();
            (end[0] - amp).hypot(end[1])
        };
        let (loose, tight) = (err(10f64.powi(-k)), err(10f64.powi(-k - 2)));
        prop_assert!(tight <= loose.max(1e-13), "{loose} then {tight}");
    }

    #[test]
    fn chow_wang_is_translation_invariant(shift in -3.0f64..3.0, x in -1.5f64..1.5) {
        prop_assume!(x.abs() > 1e-3);
        let g = |s: f64| format!("sin(x - ({s})) + (x - ({s}))^3");
        let base = Subsystem::newtonian("base", &e(&g(0.0)), 0.0).unwrap();
        let moved = Subsystem::newtonian("moved", &e(&g(shift)), shift).unwrap();
        let (a, b) = (chow_wang_h(&base, x).unwrap(), chow_wang_h(&moved, x + shift).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn harmonic_restoring_force_has_vanishing_h(omega in 0.2f64..5.0, x in -10.0f64..10.0) {
        let s = Subsystem::newtonian("linear", &e(&format!("{} * x", omega * omega)), 0.0).unwrap();
        prop_assert!(chow_wang_h(&s, x).unwrap().abs() <= 1e-12 * (1.0 + (omega * omega * x).powi(2)));
    }

    #[test]
    fn dwell_scale_is_symmetric_and_homogeneous(a in 0.1f64..100.0, b in 0.1f64..100.0, s in 0.01f64..100.0) {
        prop_assume!((a - b).abs() > 1e-6 * a.max(b));
        let t = dwell_star(a, b).unwrap();
        prop_assert!((t - dwell_star(b, a).unwrap()).abs() <= 1e-12 * t);
        prop_assert!((dwell_star(s * a, s * b).unwrap() - s * t).abs() <= 1e-12 * s * t);
    }

    #[test]
    fn long_dwell_separates_the_bands(p_lo in 1.0f64..50.0, ratio in 1.001f64..2.0, m1 in 5.0f64..12.0, m2 in 5.0f64..12.0, first in 1usize..3) {
        let p = [p_lo, p_lo * ratio];
        let bounds = DwellBounds::from_periods([p, [p[0] * 1.3, p[1] * 1.7]]).unwrap();
        let t = bounds.t_star;
        let schedule = SwitchingSchedule::new(m1 * t[0], m2 * t[1], first).unwrap();
        for k in 1..=2 {
            let w = winding_counts(&schedule, &bounds, k);
            prop_assert!(w.difference() >= 5, "{w:?}");
            prop_assert!(w.big_n - 2 >= w.n + 3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn orbit_coordinates_are_a_bijection(c in 0.02f64..0.98) {
        let a = sir_annulus();
        let orbit = a.orbit_from_coordinate(c).unwrap();
        match a.coordinate_of_point(orbit.seed).unwrap() {
            Placement::Annulus(back) => prop_assert!((back - c).abs() <= 1e-6, "{c} came back as {back}"),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn orbits_are_nested_in_coordinate_order(c in 0.05f64..0.9, gap in 0.05f64..0.5) {
        let a = sir_annulus();
        let (lo, hi) = (c, (c + gap).min(0.99));
        let inner = a.orbit_from_coordinate(lo).unwrap();
        let outer = a.orbit_from_coordinate(hi).unwrap();
        for p in inner.resampled(64) {
            prop_assert!(outer.encloses(p), "{p:?} on orbit {lo} is outside orbit {hi}");
        }
        prop_assert!(inner.period < outer.period);
    }

    #[test]
    fn period_does_not_depend_on_the_seed(c in 0.05f64..0.95, frac in 0.0f64..1.0) {
        let a = sir_annulus();
        let orbit = a.orbit_from_coordinate(c).unwrap();
        let other = orbit.point_at(frac * orbit.period);
        let again = measure_period(a.subsystem(), other, a.options()).unwrap();
        prop_assert!((again.period - orbit.period).abs() <= 1e-8 * orbit.period, "{} vs {}", again.period, orbit.period);
    }

    #[test]
    fn quadrilateral_vertices_sit_on_two_band_orbits(d in 2.2f64..3.6, r_in in 0.6f64..1.0, r_out in 1.8f64..2.4) {
        prop_assume!(d < 2.0 * r_out - 0.1 && d > 2.0 * r_in + 0.1);
        let ring = |cx: f64| {
            Annulus::from_seeds(circles(cx, true), [cx + r_in, 0.0], [cx + r_out, 0.0], OrbitOptions::default()).unwrap()
        };
        let (a1, a2) = (ring(d / 2.0), ring(-d / 2.0));
        let w = check_condition_i(&a1, &a2).unwrap();
        let q = build_quadrilateral(&a1, &a2, &w).unwrap();
        for k in 0..2 {
            let [lo, hi] = q.bands[k];
            prop_assert!(0.0 <= lo && lo < hi && hi <= 1.0, "band {k}: {:?}", q.bands[k]);
        }
        // Circles make the band orbits explicit: radius is affine in area^(1/2).
        let radius_of = |c: f64| (r_in * r_in + c * (r_out * r_out - r_in * r_in)).sqrt();
        for v in q.vertices {
            let mut on = 0;
            for (k, cx) in [(0, d / 2.0), (1, -d / 2.0)] {
                let r = (v[0] - cx).hypot(v[1]);
                if q.bands[k].iter().any(|&c| (r - radius_of(c)).abs() <= 1e-7) {
                    on += 1;
                }
            }
            prop_assert_eq!(on, 2, "vertex {:?}", v);
        }
    }

    #[test]
    fn simulating_whole_periods_iterates_the_poincare_map(r in 1.2f64..1.8, theta in 0.0f64..2.0 * PI, k in 1usize..4, t1 in 3.0f64..12.0, t2 in 3.0f64..12.0) {
        let sys = SwitchedSystem::new(circles(1.0, true), circles(-1.0, false), Tolerances::default());
        let schedule = SwitchingSchedule::new(t1, t2, 1).unwrap();
        let x0 = [1.0 + r * theta.cos(), r * theta.sin()];
        let mut p = x0;
        for _ in 0..k {
            p = sys.poincare_map(&schedule, p).unwrap();
        }
        let end = sys.simulate_periods(&schedule, x0, k).unwrap().final_point().unwrap();
        prop_assert!((end[0] - p[0]).hypot(end[1] - p[1]) <= 1e-7 * k as f64, "{end:?} vs {p:?}");
    }
}
