//! Plane polylines: area, containment, simplicity and intersections.

use crate::Point;

/// Signed shoelace area of a closed ring (a repeated closing point is fine).
pub fn shoelace(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let o = points[0];
    let mut acc = 0.0;
    for k in 1..n - 1 {
        let a = [points[k][0] - o[0], points[k][1] - o[1]];
        let b = [points[k + 1][0] - o[0], points[k + 1][1] - o[1]];
        acc += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * acc
}

/// Even-odd point-in-polygon test on a closed ring.
pub fn contains(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the segment `ab`, with the segment parameter of the
/// closest point.
pub fn segment_distance(p: Point, a: Point, b: Point) -> (f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), t)
}

/// Distance from `p` to an open chain of segments.
pub fn distance_to(chain: &[Point], p: Point) -> f64 {
    chain.windows(2).map(|w| segment_distance(p, w[0], w[1]).0).fold(f64::INFINITY, f64::min)
}

pub fn length(chain: &[Point]) -> f64 {
    chain.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// How two segments meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentHit {
    None,
    /// Single point at parameters `s` on the first and `t` on the second.
    Point { s: f64, t: f64 },
    /// Collinear with a common stretch.
    Overlap,
}

pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> SegmentHit {
    let r = [b[0] - a[0], b[1] - a[1]];
    let q = [d[0] - c[0], d[1] - c[1]];
    let denom = r[0] * q[1] - r[1] * q[0];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let scale = (r[0].abs() + r[1].abs()) * (q[0].abs() + q[1].abs());
    if denom.abs() <= 1e-14 * scale {
        // Parallel: they meet only if collinear.
        let rr = r[0] * r[0] + r[1] * r[1];
        let qq = q[0] * q[0] + q[1] * q[1];
        if rr == 0.0 || qq == 0.0 {
            return SegmentHit::None;
        }
        if orient(a, b, c).abs() / rr.sqrt() > 1e-12 * (rr.sqrt() + qq.sqrt()) {
            return SegmentHit::None;
        }
        let t0 = (ac[0] * r[0] + ac[1] * r[1]) / rr;
        let t1 = t0 + (q[0] * r[0] + q[1] * r[1]) / rr;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        if hi < lo {
            return SegmentHit::None;
        }
        if hi - lo > 1e-12 {
            return SegmentHit::Overlap;
        }
        let p = [a[0] + lo * r[0], a[1] + lo * r[1]];
        let t = (((p[0] - c[0]) * q[0] + (p[1] - c[1]) * q[1]) / qq).clamp(0.0, 1.0);
        return SegmentHit::Point { s: lo, t };
    }
    let s = (ac[0] * q[1] - ac[1] * q[0]) / denom;
    let t = (ac[0] * r[1] - ac[1] * r[0]) / denom;
    if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
        SegmentHit::Point { s, t }
    } else {
        SegmentHit::None
    }
}

struct Seg {
    idx: usize,
    lo: f64,
    hi: f64,
}

// Candidate segment pairs whose x-extents overlap (sort and sweep).
fn candidate_pairs(segs_a: &[(Point, Point)], segs_b: &[(Point, Point)], mut visit: impl FnMut(usize, usize) -> bool) {
    let boxes = |segs: &[(Point, Point)]| -> Vec<Seg> {
        let mut v: Vec<Seg> = segs
            .iter()
            .enumerate()
            .map(|(idx, (p, q))| Seg { idx, lo: p[0].min(q[0]), hi: p[0].max(q[0]) })
            .collect();
        v.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        v
    };
    let a = boxes(segs_a);
    let b = boxes(segs_b);
    let mut start = 0;
    for sa in &a {
        while start < b.len() && b[start].hi < sa.lo {
            start += 1;
        }
        // b is sorted by lo only, so scan all candidates with lo ≤ sa.hi
        for sb in &b[start..] {
            if sb.lo > sa.hi {
                break;
            }
            if sb.hi < sa.lo {
                continue;
            }
            let (p, q) = segs_a[sa.idx];
            let (r, s) = segs_b[sb.idx];
            if p[1].max(q[1]) < r[1].min(s[1]) || r[1].max(s[1]) < p[1].min(q[1]) {
                continue;
            }
            if !visit(sa.idx, sb.idx) {
                return;
            }
        }
    }
}

fn ring_segments(ring: &[Point]) -> Vec<(Point, Point)> {
    let mut pts: Vec<Point> = ring.to_vec();
    if pts.len() > 1 {
        let (f, l) = (pts[0], pts[pts.len() - 1]);
        let span = bbox_diameter(&pts).max(1e-300);
        if (f[0] - l[0]).hypot(f[1] - l[1]) <= 1e-9 * span {
            pts.pop();
        }
    }
    let n = pts.len();
    (0..n).map(|i| (pts[i], pts[(i + 1) % n])).collect()
}

pub fn bbox_diameter(points: &[Point]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    (x1 - x0).hypot(y1 - y0)
}

/// Whether a closed ring has no self-intersections (adjacent segments may
/// share their common vertex).
pub fn is_simple_closed(ring: &[Point]) -> bool {
    let segs = ring_segments(ring);
    let n = segs.len();
    if n < 3 {
        return false;
    }
    let mut simple = true;
    candidate_pairs(&segs, &segs, |i, j| {
        if i >= j {
            return true;
        }
        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
        let (a, b) = segs[i];
        let (c, d) = segs[j];
        match segment_intersection(a, b, c, d) {
            SegmentHit::None => true,
            SegmentHit::Overlap => {
                simple = false;
                false
            }
            // adjacent segments always meet at their shared vertex
            SegmentHit::Point { .. } if adjacent => true,
            SegmentHit::Point { .. } => {
                simple = false;
                false
            }
        }
    });
    simple
}

/// An intersection of two chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: Point,
    /// Fractional vertex index along the first chain.
    pub s: f64,
    /// Fractional vertex index along the second chain.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntersectionError {
    #[error("the polylines overlap along a stretch")]
    DegenerateOverlap,
}

/// All intersection points of two open chains, merged within `merge_tol`.
pub fn curve_intersections(p1: &[Point], p2: &[Point], merge_tol: f64) -> Result<Vec<Crossing>, IntersectionError> {
    let segs = |p: &[Point]| -> Vec<(Point, Point)> { p.windows(2).map(|w| (w[0], w[1])).collect() };
    let (a, b) = (segs(p1), segs(p2));
    let mut out: Vec<Crossing> = Vec::new();
    let mut overlap = false;
    candidate_pairs(&a, &b, |i, j| {
        let (p, q) = a[i];
        let (r, s) = b[j];
        match segment_intersection(p, q, r, s) {
            SegmentHit::None => true,
            SegmentHit::Overlap => {
                overlap = true;
                false
            }
            SegmentHit::Point { s: u, t: v } => {
                let point = [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])];
                out.push(Crossing { point, s: i as f64 + u, t: j as f64 + v });
                true
            }
        }
    });
    if overlap {
        return Err(IntersectionError::DegenerateOverlap);
    }
    out.sort_by(|x, y| x.s.total_cmp(&y.s));
    let mut merged: Vec<Crossing> = Vec::new();
    for c in out {
        if merged.iter().any(|m| (m.point[0] - c.point[0]).hypot(m.point[1] - c.point[1]) <= merge_tol) {
            continue;
        }
        merged.push(c);
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(cx: f64, cy: f64, r: f64, n: usize) -> Vec<Point> {
        (0..=n).map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            [cx + r * a.cos(), cy + r * a.sin()]
        })
        .collect()
    }

    #[test]
    fn square_area_and_containment() {
        let sq = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        assert_eq!(shoelace(&sq), 2.0);
        assert!(contains(&sq, [1.0, 0.5]));
        assert!(!contains(&sq, [2.5, 0.5]));
        assert!(is_simple_closed(&sq));
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        assert!(!is_simple_closed(&bow));
        assert!(is_simple_closed(&circle(0.0, 0.0, 1.0, 500)));
        assert!(!is_simple_closed(&[[0.0, 0.0], [1.0, 0.0]]));
    }

    #[test]
    fn unit_circles_meet_on_the_axis() {
        let a = circle(-0.5, 0.0, 1.0, 4000);
        let b = circle(0.5, 0.0, 1.0, 4000);
        let mut hits = curve_intersections(&a, &b, 1e-9).unwrap();
        assert_eq!(hits.len(), 2);
        hits.sort_by(|p, q| p.point[1].total_cmp(&q.point[1]));
        let y = 0.75f64.sqrt();
        assert!(hits[0].point[0].abs() < 1e-6 && (hits[0].point[1] + y).abs() < 1e-6);
        assert!(hits[1].point[0].abs() < 1e-6 && (hits[1].point[1] - y).abs() < 1e-6);
    }

    #[test]
    fn disjoint_and_coincident_circles() {
        let a = circle(0.0, 0.0, 1.0, 200);
        assert!(curve_intersections(&a, &circle(5.0, 0.0, 1.0, 200), 1e-9).unwrap().is_empty());
        assert_eq!(curve_intersections(&a, &a, 1e-9).unwrap_err(), IntersectionError::DegenerateOverlap);
    }

    #[test]
    fn distance_to_segments() {
        let chain = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        assert_eq!(distance_to(&chain, [0.5, 0.5]), 0.5);
        assert_eq!(distance_to(&chain, [2.0, 1.0]), 1.0);
        assert_eq!(length(&chain), 2.0);
    }
}
