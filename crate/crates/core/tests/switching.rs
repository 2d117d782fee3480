use std::f64::consts::PI;
use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::geometry::{build_quadrilateral, check_condition_i, Quadrilateral};
use horseshoe::ode::Tolerances;
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};
use horseshoe::switching::{
    build_blocks, dwell_star, evaluate_witness, recommend_schedule, verify_crossing, winding_counts, DwellBounds,
    SwitchedSystem, SwitchingError, SwitchingSchedule, WitnessOptions,
};

fn e(s: &str) -> Expr {
    Expr::parse(s).unwrap()
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

fn toy() -> (SwitchedSystem, Quadrilateral) {
    let (s1, s2) = (circles(1.0, true), circles(-1.0, false));
    let a1 = Annulus::from_seeds(s1.clone(), [0.0, 0.0], [-1.0, 0.0], OrbitOptions::default()).unwrap();
    let a2 = Annulus::from_seeds(s2.clone(), [0.0, 0.0], [1.0, 0.0], OrbitOptions::default()).unwrap();
    let w = check_condition_i(&a1, &a2).unwrap();
    let q = build_quadrilateral(&a1, &a2, &w).unwrap();
    (SwitchedSystem::new(s1, s2, Tolerances::default()), q)
}

fn radius(p: [f64; 2], cx: f64) -> f64 {
    (p[0] - cx).hypot(p[1])
}

#[test]
fn dwell_star_values() {
    assert!((dwell_star(4.0 * PI, 6.0 * PI).unwrap() - 12.0 * PI).abs() < 1e-12);
    assert!((dwell_star(6.0 * PI, 4.0 * PI).unwrap() - 12.0 * PI).abs() < 1e-12);
    let t = dwell_star(6.755238542, 7.023911051).unwrap();
    assert!((t - 176.60234299).abs() < 1e-5, "{t}");
    assert!(matches!(dwell_star(2.0 * PI, 2.0 * PI), Err(SwitchingError::Isochronous { .. })));
    assert!(dwell_star(0.0, 1.0).is_err());
}

#[test]
fn toy_schedule_windings_and_blocks() {
    let (_, q) = toy();
    let bounds = DwellBounds::from_quadrilateral(&q).unwrap();
    for k in 0..2 {
        assert!((bounds.t_star[k] - 12.0 * PI).abs() < 1e-6, "{:?}", bounds.t_star);
    }
    let rec = recommend_schedule(&bounds);
    let s = rec.schedules[0];
    assert_eq!(s.first, 1);
    assert!((s.dwell[0] - 60.0 * PI).abs() < 1e-5 && (s.dwell[1] - 36.0 * PI).abs() < 1e-5);
    assert!((rec.symmetric_total - 144.0 * PI).abs() < 1e-5);
    let w = winding_counts(&s, &bounds, 1);
    assert_eq!((w.big_n, w.n), (15, 10));

    let blocks = build_blocks(&q, &s).unwrap();
    assert_eq!(blocks[0].band, [11.0, 13.0]);
    assert_eq!(blocks[1].band, [13.0, 15.0]);
    for b in &blocks {
        for (j, ratio) in b.band.iter().enumerate() {
            let r = 30.0 / ratio - 1.0;
            for f in [0.0, 0.3, 0.7, 1.0] {
                let p = b.edges[2 * j].point(f);
                assert!((radius(p, 1.0) - r).abs() < 1e-6, "ratio {ratio}: {}", radius(p, 1.0));
                assert!(q.contains(p, 1e-6));
            }
        }
        assert!(b.area > 0.0);
    }
    // The k = 15 level is the inner orbit of subsystem 1.
    assert!((blocks[1].level_coordinates[1] - q.bands[0][0]).abs() < 1e-9);
}

#[test]
fn short_dwell_makes_the_bands_overlap() {
    let (_, q) = toy();
    let bounds = DwellBounds::from_quadrilateral(&q).unwrap();
    let short = SwitchingSchedule::new(2.0 * bounds.t_star[0], 3.0 * bounds.t_star[1], 1).unwrap();
    match build_blocks(&q, &short) {
        Err(SwitchingError::BandsOverlap { n, big_n }) => assert_eq!((n, big_n), (4, 6)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn maps_and_simulation() {
    let (sys, _) = toy();
    let tiny = SwitchingSchedule::new(1e-12, 1e-12, 1).unwrap();
    let p = [0.3, 0.4];
    let q = sys.poincare_map(&tiny, p).unwrap();
    assert!((q[0] - p[0]).abs() < 1e-10 && (q[1] - p[1]).abs() < 1e-10);
    // The origin lies on both unit circles: a full turn of each brings it back.
    let full = SwitchingSchedule::new(4.0 * PI, 4.0 * PI, 1).unwrap();
    let o = sys.poincare_map(&full, [0.0, 0.0]).unwrap();
    assert!(o[0].hypot(o[1]) < 1e-7, "{o:?}");

    let s = SwitchingSchedule::new(3.0, 2.0, 2).unwrap();
    let traj = sys.simulate_periods(&s, p, 1).unwrap();
    let end = traj.final_point().unwrap();
    let pm = sys.poincare_map(&s, p).unwrap();
    assert!((end[0] - pm[0]).abs() < 1e-9 && (end[1] - pm[1]).abs() < 1e-9);
    assert_eq!(traj.switches.len(), 1);
    assert_eq!(traj.switches[0].from, 2);
    // Radii about each segment's center are conserved.
    let r2 = radius(p, -1.0);
    let sw = [traj.switches[0].x, traj.switches[0].y];
    assert!((radius(sw, -1.0) - r2).abs() < 1e-8);
    assert!((radius(end, 1.0) - radius(sw, 1.0)).abs() < 1e-8);
    assert!(sys.simulate(&s, p, 0.0).unwrap().samples.is_empty());
    let mut csv = Vec::new();
    traj.write_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("t,x,y,subsystem"));
}

#[test]
fn sir_trajectories_stay_in_the_positive_population_half_plane() {
    let s = |alpha: f64| {
        let h = format!("(x + {alpha})^2 / 2 + y - log(1 + y)");
        Arc::new(Subsystem::hamiltonian("sir", &e(&h), Some(&e("-(1 + y)")), [-alpha, 0.0]).unwrap())
    };
    let sys = SwitchedSystem::new(s(-1.0), s(1.0), Tolerances::default());
    let sched = SwitchingSchedule::new(176.6 * 5.0, 3.0 * 176.6, 1).unwrap();
    let traj = sys.simulate_periods(&sched, [-0.5, 0.0], 2).unwrap();
    assert!(traj.samples.iter().all(|p| p.y > -1.0));
    assert_eq!(traj.switches.len(), 3);
}

#[test]
fn toy_crossing_witness() {
    let (sys, q) = toy();
    let bounds = DwellBounds::from_quadrilateral(&q).unwrap();
    let s = recommend_schedule(&bounds).schedules[0];
    let blocks = build_blocks(&q, &s).unwrap();
    let start = std::time::Instant::now();
    let w = verify_crossing(&sys, &s, &q, &blocks, &WitnessOptions::default()).unwrap();
    eprintln!("toy witness: {:.1} s", start.elapsed().as_secs_f64());
    assert!(w.passed);
    assert_eq!(w.pairs.len(), 4);
    assert!((w.entropy_bound.unwrap() - 2f64.ln()).abs() < 1e-15);
    for p in &w.pairs {
        assert_eq!(p.connections.len(), 8);
        for c in &p.connections {
            let [a, b] = c.end_positions.unwrap();
            assert!((a.min(b)).abs() < 1e-5 && (a.max(b) - 1.0).abs() < 1e-5);
            assert_eq!(c.refined, Some(true));
        }
    }

    // Same blocks, but the map barely moves anything: no crossings.
    let tiny = SwitchingSchedule::new(1e-3, 1e-3, 1).unwrap();
    let opts = WitnessOptions { connections: 2, samples: 64, refine_factor: 0, ..Default::default() };
    let neg = evaluate_witness(&sys, &tiny, &q, &blocks, &opts).unwrap();
    assert!(!neg.passed);
    assert!(neg.entropy_bound.is_none());
    assert!(matches!(
        verify_crossing(&sys, &tiny, &q, &blocks, &opts),
        Err(SwitchingError::WitnessFailed { .. })
    ));
}

#[test]
fn reduced_semi_map_matches_direct_integration() {
    let (toy, _) = toy();
    let h = "(x - 1)^2 / 2 + y - log(1 + y)";
    let sir = Arc::new(Subsystem::hamiltonian("sir", &e(h), Some(&e("-(1 + y)")), [1.0, 0.0]).unwrap());
    let sir = SwitchedSystem::new(sir.clone(), sir, Tolerances::default());
    for (sys, t, p) in [(&toy, 40.0, [0.3, 0.4]), (&sir, 100.0, [-0.5, 0.1]), (&sir, 5.0, [0.0, 0.2])] {
        let direct = sys.semi_map(1, t, p).unwrap();
        let reduced = sys.semi_map_reduced(1, t, p).unwrap();
        assert!((direct[0] - reduced[0]).hypot(direct[1] - reduced[1]) < 1e-7, "{direct:?} vs {reduced:?}");
    }
    // Off the period annulus (y <= -1 is outside the domain) both fail alike.
    assert!(sir.semi_map_reduced(1, 100.0, [0.0, -2.0]).is_err());
}
