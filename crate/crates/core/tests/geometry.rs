use std::sync::Arc;

use horseshoe::expr::Expr;
use horseshoe::geometry::{build_quadrilateral, check_condition_i, ArcRole, CaseTag, GeometryError, RegionWitness};
use horseshoe::orbits::{Annulus, OrbitOptions, Subsystem};

fn e(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

/// Circles about `(cx, 0)` with angular speed `1 / (1 + r)`.
fn circles(cx: f64, ccw: bool) -> Arc<Subsystem> {
    let r = format!("(1 + sqrt((x - ({cx}))^2 + y^2))");
    let (fx, fy) = if ccw {
        (format!("-y / {r}"), format!("(x - ({cx})) / {r}"))
    } else {
        (format!("y / {r}"), format!("-(x - ({cx})) / {r}"))
    };
    Arc::new(Subsystem::general("circles", &e(&fx), &e(&fy), [cx, 0.0]).unwrap())
}

fn ring(cx: f64, ccw: bool, r_in: f64, r_out: f64) -> Annulus {
    Annulus::from_seeds(circles(cx, ccw), [cx - r_in, 0.0], [cx - r_out, 0.0], OrbitOptions::default()).unwrap()
}

fn close(p: [f64; 2], q: [f64; 2], tol: f64) -> bool {
    (p[0] - q[0]).hypot(p[1] - q[1]) <= tol
}

#[test]
fn toy_pair_is_case_one_one_with_the_lens_vertices() {
    let a1 = ring(1.0, true, 1.0, 2.0);
    let a2 = ring(-1.0, false, 1.0, 2.0);
    let w = check_condition_i(&a1, &a2).unwrap();
    assert_eq!(w.case, CaseTag::InnerEscapesOut);
    assert_eq!((w.i, w.j), (1, 2));

    let q = build_quadrilateral(&a1, &a2, &w).unwrap();
    assert_eq!(q.eps, [1.0, 1.0]);
    let s = 15f64.sqrt() / 4.0;
    let expected = [[-0.75, s], [0.0, 3f64.sqrt()], [0.75, s], [0.0, 0.0]];
    for (v, x) in q.vertices.iter().zip(expected) {
        let folded = [v[0], v[1].abs()];
        assert!(close(folded, x, 1e-6), "{v:?} vs {x:?}");
    }
    assert_eq!(q.arc(1, ArcRole::Outer).label, "Q1");
    assert_eq!(q.arc(2, ArcRole::Inner).label, "Q4");
    // Arc ends agree with the vertices.
    for (k, arc) in q.arcs.iter().enumerate() {
        assert!(close(arc.point(0.0), q.vertices[k], 1e-6));
        assert!(close(arc.point(1.0), q.vertices[(k + 1) % 4], 1e-6));
    }
    let centroid = q.polygon.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
    let centroid = [centroid[0] / q.polygon.len() as f64, centroid[1] / q.polygon.len() as f64];
    assert!(q.contains(centroid, 0.0));
    for k in 1..=2 {
        let b = q.band_coordinate(k, centroid).unwrap();
        assert!(b > 0.0 && b < 1.0);
    }
    let desc = q.descriptor();
    assert_eq!(desc.arcs.len(), 4);
    let mut csv = Vec::new();
    q.write_arcs_csv(&mut csv).unwrap();
    assert!(String::from_utf8(csv).unwrap().starts_with("arc,subsystem,x,y"));
}

#[test]
fn identical_annuli_fail_condition_one() {
    let a = ring(0.0, true, 1.0, 2.0);
    let b = ring(0.0, true, 1.0, 2.0);
    match check_condition_i(&a, &b) {
        Err(GeometryError::ConditionFails { summary }) => assert!(summary.contains("in region")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn nested_annuli_fail_condition_one() {
    let a = ring(0.0, true, 1.0, 2.0);
    let b = ring(0.0, false, 3.0, 4.0);
    assert!(matches!(check_condition_i(&a, &b), Err(GeometryError::ConditionFails { .. })));
}

#[test]
fn crossing_circles_give_a_quadrilateral_inside_both_bands() {
    // Centers 3 apart, radii 1..2.5: outer orbits cross, inner ones do not.
    let a1 = ring(1.5, true, 1.0, 2.5);
    let a2 = ring(-1.5, true, 1.0, 2.5);
    let w = check_condition_i(&a1, &a2).unwrap();
    let q = build_quadrilateral(&a1, &a2, &w).unwrap();
    assert!(q.eps[0] <= 1.0);
    assert!(q.area > 0.0);
    for v in q.vertices {
        for k in 1..=2 {
            let b = q.band_coordinate(k, v).unwrap();
            assert!((-1e-6..=1.0 + 1e-6).contains(&b), "{b}");
        }
    }
}

#[test]
fn tangent_annuli_underflow() {
    // Outer circles touch at (2, 0) and the open annuli are disjoint.
    let a1 = ring(0.0, true, 1.0, 2.0);
    let a2 = ring(3.0, true, 0.5, 1.0);
    assert!(check_condition_i(&a1, &a2).is_err());
    let w = RegionWitness {
        case: CaseTag::OuterEscapesOut,
        i: 1,
        j: 2,
        inside_point: [2.0, 0.0],
        inside_coordinate: 1.0,
        escape_point: [-2.0, 0.0],
        escape_coordinate: None,
        corner: [2.0, 0.0],
        margin: 0.0,
        census: Vec::new(),
    };
    match build_quadrilateral(&a1, &a2, &w) {
        Err(GeometryError::EpsilonUnderflow { .. }) => {}
        other => panic!("{other:?}"),
    }
}
