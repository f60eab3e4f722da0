//! Area of the inner boundary neighbourhood `{x in domain : dist(x, boundary) < t}`.
//!
//! The set is the domain intersected with the union of capsules of radius `t` around the
//! boundary segments. On every horizontal line both the domain and each capsule cut out
//! intervals whose lengths are exact; the line integral over `y` is done with Gauss-Legendre
//! rules on panels split at every vertex height and at heights `t` above and below them.

use super::chain::RealizedDomain;
use super::point::{signed_area, Point};
use crate::error::{ChainError, Result};

// 10-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// `M(t)` for a realized domain.
pub fn boundary_neighborhood_area(dom: &RealizedDomain, t: f64) -> Result<f64> {
    polygon_neighborhood_area(&dom.loops, t)
}

/// Drops nodes that lie on the straight line through their neighbours.
fn simplify(poly: &[Point]) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = poly[(k + n - 1) % n];
        let b = poly[k];
        let c = poly[(k + 1) % n];
        let scale = a.dist(b) * b.dist(c);
        if (b - a).cross(c - b).abs() > 1e-13 * scale || (b - a).dot(c - b) < 0.0 {
            out.push(b);
        }
    }
    out
}

/// `M(t)` for closed polygons bounding a domain (outer loop counter-clockwise, holes
/// clockwise).
pub fn polygon_neighborhood_area(loops: &[Vec<Point>], t: f64) -> Result<f64> {
    let loops: Vec<Vec<Point>> = loops.iter().map(|l| simplify(l)).collect();
    if loops.iter().any(|l| l.len() < 3) {
        return Err(ChainError::Geometry("degenerate boundary polygon".into()));
    }
    let total: f64 = loops.iter().map(|l| signed_area(l)).sum();
    if !(total > 0.0) {
        return Err(ChainError::Geometry("boundary polygon has no interior".into()));
    }
    let segs: Vec<(Point, Point)> = loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |k| (l[k], l[(k + 1) % l.len()])))
        .collect();
    let (mut lo, mut hi) = (segs[0].0, segs[0].0);
    for (a, _) in &segs {
        lo = Point::new(lo.x.min(a.x), lo.y.min(a.y));
        hi = Point::new(hi.x.max(a.x), hi.y.max(a.y));
    }
    let diam = lo.dist(hi);
    if !(t > 0.0 && t < diam) {
        return Err(ChainError::Param(format!("offset distance {t} outside (0, {diam})")));
    }

    // kinks of the chord length: vertex heights, heights t away, and the inward offsets of
    // each vertex along both edge normals and the bisector
    let mut breaks: Vec<f64> = Vec::with_capacity(6 * segs.len() + 2);
    for l in &loops {
        let n = l.len();
        for k in 0..n {
            let (a, v, b) = (l[(k + n - 1) % n], l[k], l[(k + 1) % n]);
            let n1 = (v - a).normalized().perp();
            let n2 = (b - v).normalized().perp();
            let mut ys = vec![v.y - t, v.y, v.y + t, v.y + n1.y * t, v.y + n2.y * t];
            let bis = (n1 + n2).normalized();
            let c = bis.dot(n1);
            if c > 1e-3 {
                ys.push(v.y + bis.y * t / c);
            }
            breaks.extend(ys.into_iter().filter(|y| *y > lo.y && *y < hi.y));
        }
    }
    breaks.push(lo.y);
    breaks.push(hi.y);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * diam);

    let tol = 1e-13 * total;
    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / t).ceil().max(1.0) as usize;
        for q in 0..pieces {
            let pa = a + (b - a) * q as f64 / pieces as f64;
            let pb = a + (b - a) * (q + 1) as f64 / pieces as f64;
            area += adaptive(&segs, t, pa, pb, panel(&segs, t, pa, pb), tol, 14);
        }
    }
    Ok(area.min(total))
}

/// Panel integral refined by halving until both halves agree with the whole.
fn adaptive(segs: &[(Point, Point)], t: f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(segs, t, a, m);
    let right = panel(segs, t, m, b);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive(segs, t, a, m, left, 0.5 * tol, depth - 1) + adaptive(segs, t, m, b, right, 0.5 * tol, depth - 1)
}

/// Integral over `[a, b]` after the smoothstep substitution that damps square-root endpoint
/// behaviour.
fn panel(segs: &[(Point, Point)], t: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    let mut sum = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W.iter()) {
        for s in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
            let y = a + h * s * s * (3.0 - 2.0 * s);
            let dy = h * 6.0 * s * (1.0 - s);
            sum += 0.5 * w * dy * line_length(segs, t, y);
        }
    }
    sum
}

/// Length of the horizontal line at height `y` inside the domain and within `t` of the
/// boundary.
fn line_length(segs: &[(Point, Point)], t: f64, y: f64) -> f64 {
    let mut xs: Vec<f64> = Vec::new();
    let mut caps: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in segs {
        if (a.y > y) != (b.y > y) {
            xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
        }
        if let Some(iv) = capsule_chord(a, b, t, y) {
            caps.push(iv);
        }
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    caps.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(caps.len());
    for c in caps {
        match merged.last_mut() {
            Some(m) if c.0 <= m.1 => m.1 = m.1.max(c.1),
            _ => merged.push(c),
        }
    }
    let mut len = 0.0;
    for pair in xs.chunks_exact(2) {
        let (l, r) = (pair[0], pair[1]);
        for &(cl, cr) in &merged {
            if cl >= r {
                break;
            }
            len += (r.min(cr) - l.max(cl)).max(0.0);
        }
    }
    len
}

/// Chord of the capsule of radius `t` around segment `ab` cut by the line at height `y`.
fn capsule_chord(a: Point, b: Point, t: f64, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in [a, b] {
        let dy = y - c.y;
        if dy.abs() < t {
            let r = (t * t - dy * dy).sqrt();
            lo = lo.min(c.x - r);
            hi = hi.max(c.x + r);
        }
    }
    // the rectangle swept by the segment's normal
    let d = b - a;
    let len = d.norm();
    let e = d * (1.0 / len);
    let n = e.perp();
    let mut il = f64::NEG_INFINITY;
    let mut ir = f64::INFINITY;
    let mut ok = true;
    // lower < coef * x + rest < upper for each slab
    for (dir, lower, upper) in [(n, -t, t), (e, 0.0, len)] {
        let coef = dir.x;
        let rest = dir.y * (y - a.y) - dir.x * a.x;
        if coef.abs() < 1e-300 {
            if !(rest > lower && rest < upper) {
                ok = false;
            }
        } else {
            let (p, q) = ((lower - rest) / coef, (upper - rest) / coef);
            il = il.max(p.min(q));
            ir = ir.min(p.max(q));
        }
    }
    if ok && il < ir {
        lo = lo.min(il);
        hi = hi.max(ir);
    }
    (lo < hi).then_some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> Vec<Vec<Point>> {
        vec![vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]]
    }

    #[test]
    fn unit_square_values() {
        let m = polygon_neighborhood_area(&square(), 0.1).unwrap();
        assert!((m - 0.36).abs() < 1e-12, "{m}");
        let full = polygon_neighborhood_area(&square(), 0.6).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_square_matches() {
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let rot: Vec<Vec<Point>> = square()
            .into_iter()
            .map(|l| l.into_iter().map(|p| Point::new(c * p.x - s * p.y, s * p.x + c * p.y)).collect())
            .collect();
        let m = polygon_neighborhood_area(&rot, 0.1).unwrap();
        assert!((m - 0.36).abs() < 1e-9, "{m}");
    }

    #[test]
    fn reflex_corner_adds_quarter_disc() {
        // L-shape: 3 unit cells, one reflex corner at (1, 1)
        let l = vec![vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ]];
        let t = 0.05;
        let exact = 8.0 * t - 5.0 * t * t + 0.25 * PI * t * t;
        let m = polygon_neighborhood_area(&l, t).unwrap();
        assert!((m - exact).abs() < 1e-9, "{m} vs {exact}");
    }

    #[test]
    fn hole_is_counted() {
        let outer = square().remove(0);
        let hole = vec![
            Point::new(0.4, 0.4),
            Point::new(0.4, 0.6),
            Point::new(0.6, 0.6),
            Point::new(0.6, 0.4),
        ];
        let t = 0.05;
        // outer collar plus the ring around the hole (outer offset of a square)
        let exact = (4.0 * t - 4.0 * t * t) + (0.8 * t + PI * t * t);
        let m = polygon_neighborhood_area(&[outer, hole], t).unwrap();
        assert!((m - exact).abs() < 1e-9, "{m} vs {exact}");
    }
}
