//! Declarative description of pieces, necks and widths, as read from JSON.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::point::{segment_distance, three_point_curvature, turn_angle, Point};
use crate::error::{ChainError, Result};

/// One smooth boundary arc of a piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Arc {
    Segment {
        from: Point,
        to: Point,
    },
    /// Circular arc `center + radius (cos a, sin a)` for `a` from `start` to `start + sweep`.
    Arc {
        center: Point,
        radius: f64,
        start: f64,
        sweep: f64,
    },
    /// A smooth curve known only through samples.
    Polyline {
        points: Vec<Point>,
    },
}

impl Arc {
    pub fn eval(&self, u: f64) -> Point {
        match self {
            Arc::Segment { from, to } => from.lerp(*to, u),
            Arc::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let a = start + sweep * u;
                *center + Point::new(a.cos(), a.sin()) * *radius
            }
            Arc::Polyline { points } => {
                let cum = cumulative(points);
                let total = *cum.last().unwrap();
                let target = (u.clamp(0.0, 1.0)) * total;
                let k = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                    Ok(k) => return points[k],
                    Err(k) => k.clamp(1, points.len() - 1),
                };
                let seg = cum[k] - cum[k - 1];
                let a = if seg > 0.0 { (target - cum[k - 1]) / seg } else { 0.0 };
                points[k - 1].lerp(points[k], a)
            }
        }
    }

    pub fn start(&self) -> Point {
        match self {
            Arc::Polyline { points } => points[0],
            _ => self.eval(0.0),
        }
    }

    pub fn end(&self) -> Point {
        match self {
            Arc::Polyline { points } => *points.last().unwrap(),
            _ => self.eval(1.0),
        }
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent(&self, u: f64) -> Point {
        match self {
            Arc::Segment { from, to } => (*to - *from).normalized(),
            Arc::Arc { start, sweep, .. } => {
                let a = start + sweep * u;
                Point::new(-a.sin(), a.cos()) * sweep.signum()
            }
            Arc::Polyline { points } => {
                let n = points.len();
                if u <= 0.0 {
                    return (points[1] - points[0]).normalized();
                }
                if u >= 1.0 {
                    return (points[n - 1] - points[n - 2]).normalized();
                }
                let cum = cumulative(points);
                let target = u * cum[n - 1];
                let k = cum.partition_point(|&c| c <= target).clamp(1, n - 1);
                (points[k] - points[k - 1]).normalized()
            }
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Arc::Segment { from, to } => from.dist(*to),
            Arc::Arc { radius, sweep, .. } => radius * sweep.abs(),
            Arc::Polyline { points } => *cumulative(points).last().unwrap(),
        }
    }

    /// Contribution `1/2 * integral (x dy - y dx)` to the enclosed signed area.
    pub fn area_term(&self) -> f64 {
        match self {
            Arc::Segment { from, to } => 0.5 * from.cross(*to),
            Arc::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let (a0, a1) = (*start, start + sweep);
                0.5 * (radius * radius * sweep + center.x * radius * (a1.sin() - a0.sin())
                    - center.y * radius * (a1.cos() - a0.cos()))
            }
            Arc::Polyline { points } => {
                0.5 * points.windows(2).map(|w| w[0].cross(w[1])).sum::<f64>()
            }
        }
    }

    /// Points along the arc, both endpoints included, no gap longer than `h`.
    pub fn discretize(&self, h: f64) -> Vec<Point> {
        match self {
            Arc::Polyline { points } => {
                let mut out = vec![points[0]];
                for w in points.windows(2) {
                    let n = (w[0].dist(w[1]) / h).ceil().max(1.0) as usize;
                    for k in 1..=n {
                        out.push(w[0].lerp(w[1], k as f64 / n as f64));
                    }
                }
                out
            }
            _ => {
                let n = (self.length() / h).ceil().max(1.0) as usize;
                let mut out: Vec<Point> = (0..=n).map(|k| self.eval(k as f64 / n as f64)).collect();
                out[0] = self.start();
                out[n] = self.end();
                out
            }
        }
    }

    /// Euclidean distance from `p` to the arc.
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Arc::Segment { from, to } => segment_distance(p, *from, *to).0,
            Arc::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                let d = p - *center;
                let ang = d.y.atan2(d.x);
                // offset of the polar angle measured along the sweep direction
                let rel = ((ang - start) * sweep.signum()).rem_euclid(2.0 * PI);
                if rel <= sweep.abs() {
                    (d.norm() - radius).abs()
                } else {
                    p.dist(self.eval(0.0)).min(p.dist(self.eval(1.0)))
                }
            }
            Arc::Polyline { points } => points
                .windows(2)
                .map(|w| segment_distance(p, w[0], w[1]).0)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Curvature samples from three-point circumradii on the parametric arc.
    pub fn curvature_samples(&self, n: usize) -> Vec<(Point, f64)> {
        match self {
            Arc::Segment { from, .. } => vec![(*from, 0.0)],
            Arc::Arc { .. } => {
                let n = n.max(2);
                let du = 0.5 / n as f64;
                (0..n)
                    .map(|k| {
                        let u = (k as f64 + 0.5) / n as f64;
                        let p = self.eval(u);
                        let c = three_point_curvature(self.eval(u - du), p, self.eval(u + du));
                        (p, c)
                    })
                    .collect()
            }
            Arc::Polyline { points } => points
                .windows(3)
                .map(|w| (w[1], three_point_curvature(w[0], w[1], w[2])))
                .collect(),
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Arc::Polyline { .. })
    }

    /// Unit tangent at the point of the arc closest to `p`.
    pub fn tangent_at_point(&self, p: Point) -> Point {
        match self {
            Arc::Segment { from, to } => (*to - *from).normalized(),
            Arc::Arc { center, sweep, .. } => {
                let d = (p - *center).normalized();
                d.perp() * sweep.signum()
            }
            Arc::Polyline { points } => {
                let k = points
                    .windows(2)
                    .enumerate()
                    .map(|(k, w)| (k, segment_distance(p, w[0], w[1]).0))
                    .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
                    .0;
                (points[k + 1] - points[k]).normalized()
            }
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Arc::Segment { from, to } => {
                if from.dist(*to) == 0.0 {
                    return Err("segment of zero length".into());
                }
            }
            Arc::Arc { radius, sweep, .. } => {
                if !(*radius > 0.0) || *sweep == 0.0 || sweep.abs() > 2.0 * PI + 1e-12 {
                    return Err(format!("arc with radius {radius} and sweep {sweep}"));
                }
            }
            Arc::Polyline { points } => {
                if points.len() < 2 {
                    return Err("polyline with fewer than two points".into());
                }
                if points.windows(2).any(|w| w[0] == w[1]) {
                    return Err("polyline with repeated point".into());
                }
            }
        }
        Ok(())
    }

    fn scaled(&self, c: f64) -> Arc {
        match self {
            Arc::Segment { from, to } => Arc::Segment {
                from: *from * c,
                to: *to * c,
            },
            Arc::Arc {
                center,
                radius,
                start,
                sweep,
            } => Arc::Arc {
                center: *center * c,
                radius: radius * c,
                start: *start,
                sweep: *sweep,
            },
            Arc::Polyline { points } => Arc::Polyline {
                points: points.iter().map(|p| *p * c).collect(),
            },
        }
    }
}

fn cumulative(points: &[Point]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(points.len());
    let mut s = 0.0;
    cum.push(0.0);
    for w in points.windows(2) {
        s += w[0].dist(w[1]);
        cum.push(s);
    }
    cum
}

/// Turning angle above which two arcs meet at a vertex.
pub const VERTEX_ANGLE_TOL: f64 = 1e-6;

/// A piece: a closed, simple, counter-clockwise chain of arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub arcs: Vec<Arc>,
}

impl PieceSpec {
    /// Indices `k` such that arcs `k-1` and `k` meet at a corner.
    pub fn vertex_arcs(&self) -> Vec<usize> {
        let n = self.arcs.len();
        (0..n)
            .filter(|&k| {
                let prev = &self.arcs[(k + n - 1) % n];
                turn_angle(prev.tangent(1.0), self.arcs[k].tangent(0.0)).abs() > VERTEX_ANGLE_TOL
            })
            .collect()
    }

    pub fn vertices(&self) -> Vec<Point> {
        self.vertex_arcs().into_iter().map(|k| self.arcs[k].start()).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }

    pub fn area(&self) -> f64 {
        self.arcs.iter().map(Arc::area_term).sum()
    }

    /// Closed polyline (first point not repeated) with spacing at most `h`.
    pub fn polyline(&self, h: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for a in &self.arcs {
            let pts = a.discretize(h);
            out.extend_from_slice(&pts[..pts.len() - 1]);
        }
        out
    }

    pub fn diameter(&self) -> f64 {
        let pts = self.polyline(self.perimeter() / 400.0);
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        lo.dist(hi)
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.arcs.iter().map(|a| a.distance(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let bad = |msg: String| ChainError::InvalidSpec(format!("piece {index}: {msg}"));
        if self.arcs.is_empty() {
            return Err(bad("no arcs".into()));
        }
        for a in &self.arcs {
            a.validate().map_err(bad)?;
        }
        let diam = self.diameter();
        let n = self.arcs.len();
        for k in 0..n {
            let gap = self.arcs[k].end().dist(self.arcs[(k + 1) % n].start());
            if gap > 1e-12 * diam {
                return Err(bad(format!("arcs {k} and {} do not meet (gap {gap:.3e})", (k + 1) % n)));
            }
        }
        if self.area() <= 0.0 {
            return Err(bad("boundary is not positively oriented".into()));
        }
        let poly = self.polyline(self.perimeter() / 2000.0);
        if let Some(p) = super::chain::first_self_intersection(&[poly]) {
            return Err(ChainError::Geometry(format!(
                "piece {index} boundary self-intersects near ({:.4}, {:.4})",
                p.x, p.y
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> PieceSpec {
        PieceSpec {
            arcs: self.arcs.iter().map(|a| a.scaled(c)).collect(),
        }
    }
}

/// Parametrization `G(s, t)` of a neck on `[0, L] x [-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Homotopy {
    /// `G(s, t) = start + s e + t half_width n`, with `e` the unit direction and `n` its
    /// clockwise normal, so the Jacobian `det[dG/dt, dG/ds]` is positive.
    StraightStrip {
        start: Point,
        end: Point,
        half_width: f64,
    },
    /// Annular strip around the circle of the given radius; the core curve runs from angle
    /// `start` through `sweep`.
    ArcStrip {
        center: Point,
        radius: f64,
        start: f64,
        sweep: f64,
        half_width: f64,
    },
    /// Values on a uniform `(s, t)` grid, rows indexed by `s`, interpolated by bicubic
    /// Catmull-Rom splines.
    SampledGrid {
        length: f64,
        points: Vec<Vec<Point>>,
    },
}

impl Homotopy {
    pub fn length(&self) -> f64 {
        match self {
            Homotopy::StraightStrip { start, end, .. } => start.dist(*end),
            Homotopy::ArcStrip { radius, sweep, .. } => radius * sweep.abs(),
            Homotopy::SampledGrid { length, .. } => *length,
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Point {
        match self {
            Homotopy::StraightStrip {
                start,
                end,
                half_width,
            } => {
                let l = start.dist(*end);
                let e = (*end - *start) * (1.0 / l);
                let n = Point::new(e.y, -e.x);
                *start + e * s + n * (t * half_width)
            }
            Homotopy::ArcStrip {
                center,
                radius,
                start,
                sweep,
                half_width,
            } => {
                let a = start + sweep * s / (radius * sweep.abs());
                let r = radius + t * half_width * sweep.signum();
                *center + Point::new(a.cos(), a.sin()) * r
            }
            Homotopy::SampledGrid { .. } => self.grid_eval(s, t).0,
        }
    }

    /// Partial derivative in `s`.
    pub fn ds(&self, s: f64, t: f64) -> Point {
        match self {
            Homotopy::StraightStrip { start, end, .. } => (*end - *start).normalized(),
            Homotopy::ArcStrip {
                radius,
                start,
                sweep,
                half_width,
                ..
            } => {
                let rate = sweep / (radius * sweep.abs());
                let a = start + rate * s;
                let r = radius + t * half_width * sweep.signum();
                Point::new(-a.sin(), a.cos()) * (r * rate)
            }
            Homotopy::SampledGrid { .. } => self.grid_eval(s, t).1,
        }
    }

    /// Partial derivative in `t`.
    pub fn dt(&self, s: f64, t: f64) -> Point {
        match self {
            Homotopy::StraightStrip {
                start,
                end,
                half_width,
            } => {
                let e = (*end - *start).normalized();
                Point::new(e.y, -e.x) * *half_width
            }
            Homotopy::ArcStrip {
                radius,
                start,
                sweep,
                half_width,
                ..
            } => {
                let a = start + sweep * s / (radius * sweep.abs());
                Point::new(a.cos(), a.sin()) * (half_width * sweep.signum())
            }
            Homotopy::SampledGrid { .. } => self.grid_eval(s, t).2,
        }
    }

    pub fn jacobian(&self, s: f64, t: f64) -> f64 {
        self.dt(s, t).cross(self.ds(s, t))
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Homotopy::SampledGrid { .. })
    }

    /// Neck coordinates `(s, t)` of `p`, if the inverse map converges. The returned pair may
    /// fall outside `[0, L] x [-1, 1]`.
    pub fn invert(&self, p: Point) -> Option<(f64, f64)> {
        match self {
            Homotopy::StraightStrip {
                start,
                end,
                half_width,
            } => {
                let e = (*end - *start).normalized();
                let n = Point::new(e.y, -e.x);
                let d = p - *start;
                Some((d.dot(e), d.dot(n) / half_width))
            }
            Homotopy::ArcStrip {
                center,
                radius,
                start,
                sweep,
                half_width,
            } => {
                let d = p - *center;
                let r = d.norm();
                if r == 0.0 {
                    return None;
                }
                let mut rel = ((d.y.atan2(d.x) - start) * sweep.signum()).rem_euclid(2.0 * PI);
                if rel > PI + 0.5 * sweep.abs() {
                    rel -= 2.0 * PI;
                }
                Some((rel * radius, (r - radius) / (half_width * sweep.signum())))
            }
            Homotopy::SampledGrid { length, points } => {
                let ns = points.len();
                let nt = points[0].len();
                let mut best = (f64::INFINITY, 0.0, 0.0);
                for (a, row) in points.iter().enumerate() {
                    for (b, q) in row.iter().enumerate() {
                        let d = q.dist(p);
                        if d < best.0 {
                            best = (
                                d,
                                length * a as f64 / (ns - 1) as f64,
                                -1.0 + 2.0 * b as f64 / (nt - 1) as f64,
                            );
                        }
                    }
                }
                let (_, mut s, mut t) = best;
                let scale = self.ds(s, t).norm() * length;
                for _ in 0..40 {
                    let r = self.eval(s, t) - p;
                    if r.norm() <= 1e-13 * scale {
                        return Some((s, t));
                    }
                    let (gs, gt) = (self.ds(s, t), self.dt(s, t));
                    let det = gt.cross(gs);
                    if det == 0.0 {
                        return None;
                    }
                    // solve [gs gt] (ds, dt) = r
                    let dsv = r.cross(gt) / gs.cross(gt);
                    let dtv = gs.cross(r) / gs.cross(gt);
                    s -= dsv;
                    t -= dtv;
                }
                let r = self.eval(s, t) - p;
                (r.norm() <= 1e-9 * scale).then_some((s, t))
            }
        }
    }

    fn grid_eval(&self, s: f64, t: f64) -> (Point, Point, Point) {
        let Homotopy::SampledGrid { length, points } = self else {
            unreachable!()
        };
        let ns = points.len();
        let nt = points[0].len();
        let a = (s / length) * (ns - 1) as f64;
        let b = (t + 1.0) * 0.5 * (nt - 1) as f64;
        let mut vals = Vec::with_capacity(ns);
        let mut dts = Vec::with_capacity(ns);
        for row in points {
            let (v, d) = catmull_rom(row, b);
            vals.push(v);
            dts.push(d);
        }
        let (v, dv) = catmull_rom(&vals, a);
        let (dt, _) = catmull_rom(&dts, a);
        (
            v,
            dv * ((ns - 1) as f64 / length),
            dt * (0.5 * (nt - 1) as f64),
        )
    }

    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            Homotopy::StraightStrip {
                start,
                end,
                half_width,
            } => {
                if start.dist(*end) == 0.0 || !(*half_width > 0.0) {
                    return Err("straight strip of zero length or width".into());
                }
            }
            Homotopy::ArcStrip {
                radius,
                sweep,
                half_width,
                ..
            } => {
                if !(*radius > 0.0) || *sweep == 0.0 || !(*half_width > 0.0) || *half_width >= *radius {
                    return Err("arc strip needs 0 < half_width < radius and nonzero sweep".into());
                }
            }
            Homotopy::SampledGrid { length, points } => {
                if !(*length > 0.0) {
                    return Err("sampled grid of zero length".into());
                }
                if points.len() < 2 || points[0].len() < 2 {
                    return Err("sampled grid needs at least 2x2 values".into());
                }
                if points.iter().any(|r| r.len() != points[0].len()) {
                    return Err("sampled grid rows differ in length".into());
                }
            }
        }
        Ok(())
    }

    fn scaled(&self, c: f64) -> Homotopy {
        match self {
            Homotopy::StraightStrip {
                start,
                end,
                half_width,
            } => Homotopy::StraightStrip {
                start: *start * c,
                end: *end * c,
                half_width: half_width * c,
            },
            Homotopy::ArcStrip {
                center,
                radius,
                start,
                sweep,
                half_width,
            } => Homotopy::ArcStrip {
                center: *center * c,
                radius: radius * c,
                start: *start,
                sweep: *sweep,
                half_width: half_width * c,
            },
            Homotopy::SampledGrid { length, points } => Homotopy::SampledGrid {
                length: length * c,
                points: points
                    .iter()
                    .map(|r| r.iter().map(|p| *p * c).collect())
                    .collect(),
            },
        }
    }
}

/// Cubic Hermite interpolation through uniform knots `0..n` with Catmull-Rom tangents.
/// Returns the value and derivative with respect to the knot coordinate.
fn catmull_rom(v: &[Point], x: f64) -> (Point, Point) {
    let n = v.len();
    let tangent = |i: usize| -> Point {
        if i == 0 {
            v[1] - v[0]
        } else if i == n - 1 {
            v[n - 1] - v[n - 2]
        } else {
            (v[i + 1] - v[i - 1]) * 0.5
        }
    };
    let i = (x.floor().max(0.0) as usize).min(n - 2);
    let u = x - i as f64;
    let (p0, p1, m0, m1) = (v[i], v[i + 1], tangent(i), tangent(i + 1));
    let (u2, u3) = (u * u, u * u * u);
    let val = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
        + m0 * (u3 - 2.0 * u2 + u)
        + p1 * (-2.0 * u3 + 3.0 * u2)
        + m1 * (u3 - u2);
    let der = p0 * (6.0 * u2 - 6.0 * u)
        + m0 * (3.0 * u2 - 4.0 * u + 1.0)
        + p1 * (-6.0 * u2 + 6.0 * u)
        + m1 * (3.0 * u2 - 2.0 * u);
    (val, der)
}

/// A neck joining pieces `i` and `j`; `G(0, .)` lies on piece `i`, `G(L, .)` on piece `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeckSpec {
    pub i: usize,
    pub j: usize,
    pub homotopy: Homotopy,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

impl NeckSpec {
    pub fn length(&self) -> f64 {
        self.length.unwrap_or_else(|| self.homotopy.length())
    }

    pub fn validate(&self, index: usize, pieces: usize) -> Result<()> {
        let bad = |msg: String| ChainError::InvalidSpec(format!("neck {index}: {msg}"));
        self.homotopy.validate().map_err(bad)?;
        if self.i >= pieces || self.j >= pieces {
            return Err(bad(format!("attaches to missing piece ({}, {})", self.i, self.j)));
        }
        let l = self.homotopy.length();
        if let Some(given) = self.length {
            if (given - l).abs() > 1e-9 * l.max(1.0) {
                return Err(bad(format!("L = {given} disagrees with the homotopy length {l}")));
            }
        }
        if !(l > 0.0) {
            return Err(bad("zero length".into()));
        }
        Ok(())
    }

    /// Checks that `det[dG/dt, dG/ds]` stays positive on a sampling grid.
    pub fn check_jacobian(&self, index: usize, samples: usize) -> Result<()> {
        let l = self.length();
        let scale = (self.homotopy.dt(0.0, 0.0).norm() * self.homotopy.ds(0.0, 0.0).norm()).max(1e-300);
        for a in 0..=samples {
            let s = l * a as f64 / samples as f64;
            for b in 0..=samples {
                let t = -1.0 + 2.0 * b as f64 / samples as f64;
                let jac = self.homotopy.jacobian(s, t);
                if !(jac > 1e-12 * scale) {
                    return Err(ChainError::DegenerateNeck {
                        neck: index,
                        s,
                        t,
                        jacobian: jac,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> NeckSpec {
        NeckSpec {
            i: self.i,
            j: self.j,
            homotopy: self.homotopy.scaled(c),
            length: self.length.map(|l| l * c),
        }
    }
}

/// Width interval of one neck.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEntry {
    pub neck: usize,
    pub interval: [f64; 2],
}

/// One interval `I = (t1, t2)` per neck.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WidthFamily {
    pub entries: Vec<WidthEntry>,
}

impl WidthFamily {
    pub fn symmetric(count: usize, half: f64) -> Self {
        WidthFamily {
            entries: (0..count)
                .map(|k| WidthEntry {
                    neck: k,
                    interval: [-half, half],
                })
                .collect(),
        }
    }

    /// Intervals indexed by neck, after validation.
    pub fn intervals(&self, necks: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = vec![None; necks];
        for e in &self.entries {
            let [t1, t2] = e.interval;
            if e.neck >= necks {
                return Err(ChainError::InvalidSpec(format!("width for missing neck {}", e.neck)));
            }
            if out[e.neck].is_some() {
                return Err(ChainError::InvalidSpec(format!("neck {} has two widths", e.neck)));
            }
            if !(-1.0 < t1 && t1 < 0.0 && 0.0 < t2 && t2 < 1.0) {
                return Err(ChainError::InvalidSpec(format!(
                    "interval ({t1}, {t2}) of neck {} must satisfy -1 < t1 < 0 < t2 < 1",
                    e.neck
                )));
            }
            if t2 - t1 < 1e-9 {
                return Err(ChainError::InvalidSpec(format!("neck {} interval shorter than 1e-9", e.neck)));
            }
            out[e.neck] = Some((t1, t2));
        }
        out.into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| ChainError::InvalidSpec(format!("neck {k} has no width interval"))))
            .collect()
    }
}

/// Geometric constants supplied by the user instead of estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserConstants {
    pub rho: f64,
    pub kappa: f64,
    pub delta: f64,
    pub tau: f64,
    pub w: f64,
}

/// The JSON domain description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub pieces: Vec<PieceSpec>,
    #[serde(default)]
    pub necks: Vec<NeckSpec>,
    #[serde(default)]
    pub widths: WidthFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<UserConstants>,
}

impl DomainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DomainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(ChainError::InvalidSpec("no pieces".into()));
        }
        for (k, p) in self.pieces.iter().enumerate() {
            p.validate(k)?;
        }
        for (k, n) in self.necks.iter().enumerate() {
            n.validate(k, self.pieces.len())?;
            n.check_jacobian(k, 32)?;
        }
        if !self.widths.entries.is_empty() {
            self.widths.intervals(self.necks.len())?;
        }
        Ok(())
    }

    /// Same configuration with every neck interval replaced by `(-half, half)`.
    pub fn with_symmetric_widths(&self, half: f64) -> Self {
        DomainConfig {
            widths: WidthFamily::symmetric(self.necks.len(), half),
            ..self.clone()
        }
    }

    /// Dilation of the whole configuration by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        DomainConfig {
            pieces: self.pieces.iter().map(|p| p.scaled(c)).collect(),
            necks: self.necks.iter().map(|n| n.scaled(c)).collect(),
            widths: self.widths.clone(),
            constants: self.constants,
        }
    }
}

/// Axis-aligned rectangle as a piece, counter-clockwise from the lower-left corner.
pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> PieceSpec {
    let p = [
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ];
    PieceSpec {
        arcs: (0..4)
            .map(|k| Arc::Segment {
                from: p[k],
                to: p[(k + 1) % 4],
            })
            .collect(),
    }
}

/// Full circle as a single-arc piece.
pub fn disc(center: Point, radius: f64) -> PieceSpec {
    PieceSpec {
        arcs: vec![Arc::Arc {
            center,
            radius,
            start: 0.0,
            sweep: 2.0 * PI,
        }],
    }
}

/// Two squares of side 2 centred at `(-2, 0)` and `(2, 0)`, joined by a horizontal strip of
/// half-width 1/2 along the x-axis; `width` is the realized neck width.
pub fn two_squares(width: f64) -> DomainConfig {
    DomainConfig {
        pieces: vec![rectangle(-3.0, -1.0, -1.0, 1.0), rectangle(1.0, -1.0, 3.0, 1.0)],
        necks: vec![NeckSpec {
            i: 0,
            j: 1,
            homotopy: Homotopy::StraightStrip {
                start: Point::new(-1.0, 0.0),
                end: Point::new(1.0, 0.0),
                half_width: 0.5,
            },
            length: Some(2.0),
        }],
        widths: WidthFamily::symmetric(1, width),
        constants: None,
    }
}
