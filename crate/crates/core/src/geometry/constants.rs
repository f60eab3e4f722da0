//! Estimation and verification of the five geometric constants of a base domain.

use serde::Serialize;

use super::point::{three_point_curvature, Point};
use super::spec::{Arc, DomainConfig, Homotopy, NeckSpec, PieceSpec, UserConstants};
use crate::error::{ChainError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    UserSupplied,
    Estimated,
}

/// Admissible geometric constants of a base domain, with the reference area and length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricConstants {
    pub rho_star: f64,
    pub kappa_star: f64,
    pub delta_star: f64,
    pub tau_star: f64,
    pub w_star: f64,
    pub a_star: f64,
    pub l_star: f64,
    pub provenance: Provenance,
}

// Safety factor applied when a constant is estimated from sampled input data.
const SAMPLED_MARGIN: f64 = 0.02;
// Relative slack of the estimated cut-distance ratio.
const TAU_MARGIN: f64 = 1e-3;

fn rail_length(g: &Homotopy, len: f64, t: f64) -> f64 {
    match g {
        Homotopy::StraightStrip { .. } => len,
        Homotopy::ArcStrip {
            radius,
            sweep,
            half_width,
            ..
        } => sweep.abs() * (radius + t * half_width * sweep.signum()),
        Homotopy::SampledGrid { .. } => {
            let n = 2048;
            (0..n)
                .map(|q| {
                    g.eval(len * q as f64 / n as f64, t)
                        .dist(g.eval(len * (q + 1) as f64 / n as f64, t))
                })
                .sum()
        }
    }
}

fn t_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| -1.0 + 2.0 * k as f64 / n as f64)
}

/// `A*` (total piece area) and `L*` (piece perimeters plus twice the longest rail of each neck).
pub fn reference_scales(pieces: &[PieceSpec], necks: &[NeckSpec], samples: usize) -> (f64, f64) {
    let a: f64 = pieces.iter().map(PieceSpec::area).sum();
    let mut l: f64 = pieces.iter().map(PieceSpec::perimeter).sum();
    for n in necks {
        let len = n.length();
        let longest = t_grid(2 * samples)
            .map(|t| rail_length(&n.homotopy, len, t))
            .fold(0.0, f64::max);
        l += 2.0 * longest;
    }
    (a, l)
}

fn arc_max_curvature(a: &Arc, samples: usize) -> f64 {
    a.curvature_samples(samples).into_iter().map(|x| x.1).fold(0.0, f64::max)
}

fn slice_curvatures(g: &Homotopy, len: f64, t: f64, samples: usize) -> f64 {
    match g {
        Homotopy::StraightStrip { .. } => 0.0,
        Homotopy::ArcStrip {
            radius,
            sweep,
            half_width,
            ..
        } => 1.0 / (radius + t * half_width * sweep.signum()),
        Homotopy::SampledGrid { .. } => {
            let ds = len / (2.0 * samples as f64);
            (0..samples)
                .map(|k| {
                    let s = len * (k as f64 + 0.5) / samples as f64;
                    three_point_curvature(g.eval(s - ds, t), g.eval(s, t), g.eval(s + ds, t))
                })
                .fold(0.0, f64::max)
        }
    }
}

/// Largest sampled curvature of piece arcs and neck slices, and whether any sampled data
/// contributed.
fn max_curvature(pieces: &[PieceSpec], necks: &[NeckSpec], samples: usize) -> (f64, bool) {
    let mut k = 0.0f64;
    let mut sampled = false;
    for p in pieces {
        for a in &p.arcs {
            k = k.max(arc_max_curvature(a, samples));
            sampled |= a.is_sampled();
        }
    }
    for n in necks {
        let len = n.length();
        sampled |= n.homotopy.is_sampled();
        for t in t_grid(samples) {
            k = k.max(slice_curvatures(&n.homotopy, len, t, samples));
        }
    }
    (k, sampled)
}

/// One vertex of the base domain with its two boundary curves.
struct VertexSample {
    point: Point,
    /// Unit directions of the two curves leaving the vertex.
    rays: (Point, Point),
    /// Distance to the next vertex along either curve.
    reach: f64,
    /// Largest curvature of the two curves.
    curvature: f64,
    label: String,
}

/// Arclength coordinate of `q` on a fine polyline of the piece.
fn arclength_of(poly: &[Point], cum: &[f64], q: Point) -> f64 {
    let n = poly.len();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let (d, u) = super::point::segment_distance(q, a, b);
        if d < best.0 {
            best = (d, cum[k] + u * a.dist(b));
        }
    }
    best.1
}

fn vertex_samples(pieces: &[PieceSpec], necks: &[NeckSpec], samples: usize) -> Vec<VertexSample> {
    let mut out = Vec::new();
    for (pi, piece) in pieces.iter().enumerate() {
        let poly = piece.polyline(piece.perimeter() / 8000.0);
        let mut cum = vec![0.0];
        for k in 1..poly.len() {
            cum.push(cum[k - 1] + poly[k - 1].dist(poly[k]));
        }
        let per = cum[poly.len() - 1] + poly[poly.len() - 1].dist(poly[0]);
        let fwd = |a: f64, b: f64| (b - a).rem_euclid(per);

        // corners of the base boundary on this piece: piece vertices and full-width junctions
        let mut marks: Vec<(f64, Point, Option<(usize, usize)>)> = piece
            .vertices()
            .into_iter()
            .map(|v| (arclength_of(&poly, &cum, v), v, None))
            .collect();
        let mut attached = Vec::new();
        for (k, n) in necks.iter().enumerate() {
            for (end, s) in [(0usize, 0.0), (1usize, n.length())] {
                if (end == 0 && n.i == pi) || (end == 1 && n.j == pi) {
                    attached.push((k, end, s));
                    for t in [-1.0, 1.0] {
                        let p = n.homotopy.eval(s, t);
                        marks.push((arclength_of(&poly, &cum, p), p, Some((k, end))));
                    }
                }
            }
        }
        // distance to the next corner along the piece, ignoring the given neck end's own corners
        let next_mark = |c: f64, forward: bool, skip: Point, own: Option<(usize, usize)>| -> f64 {
            let mut best = (f64::INFINITY, f64::INFINITY);
            for &(cm, pm, owner) in &marks {
                if pm.dist(skip) == 0.0 || (own.is_some() && owner == own) {
                    continue;
                }
                let off = if forward { fwd(c, cm) } else { fwd(cm, c) };
                if off > 0.0 && off < best.0 {
                    best = (off, pm.dist(skip));
                }
            }
            best.1
        };
        let piece_curv = |p: Point| -> f64 {
            piece
                .arcs
                .iter()
                .filter(|a| a.distance(p) < 1e-9 * per)
                .map(|a| arc_max_curvature(a, samples))
                .fold(0.0, f64::max)
        };

        let na = piece.arcs.len();
        for k in piece.vertex_arcs() {
            let v = piece.arcs[k].start();
            let c = arclength_of(&poly, &cum, v);
            let mut reach = next_mark(c, true, v, None).min(next_mark(c, false, v, None));
            if !reach.is_finite() {
                // a single corner: half the largest extent of the piece from it
                reach = 0.5 * poly.iter().map(|q| q.dist(v)).fold(0.0, f64::max);
            }
            out.push(VertexSample {
                point: v,
                rays: (-piece.arcs[(k + na - 1) % na].tangent(1.0), piece.arcs[k].tangent(0.0)),
                reach,
                curvature: piece_curv(v),
                label: format!("vertex of piece {pi}"),
            });
        }

        // junctions of the slices G(., t) with the piece, for every t
        for &(k, end, s) in &attached {
            let n = &necks[k];
            let g = &n.homotopy;
            let len = n.length();
            let c0 = arclength_of(&poly, &cum, g.eval(s, 0.0));
            for t in t_grid(2 * samples) {
                if t.abs() < 1e-12 {
                    continue;
                }
                let p = g.eval(s, t);
                let c = arclength_of(&poly, &cum, p);
                // the piece side leaving the neck end goes away from the core curve
                let forward = fwd(c0, c) < 0.5 * per;
                let arc = piece
                    .arcs
                    .iter()
                    .min_by(|a, b| a.distance(p).partial_cmp(&b.distance(p)).unwrap())
                    .unwrap();
                let side = arc.tangent_at_point(p) * if forward { 1.0 } else { -1.0 };
                let along = g.ds(s, t).normalized() * if end == 0 { 1.0 } else { -1.0 };
                let other_end = g.eval(len - s, t);
                let reach = next_mark(c, forward, p, Some((k, end))).min(p.dist(other_end));
                let curvature = piece_curv(p).max(slice_curvatures(g, len, t, samples));
                out.push(VertexSample {
                    point: p,
                    rays: (side, along),
                    reach,
                    curvature,
                    label: format!("junction of neck {k} end {end} at t = {t:.4}"),
                });
            }
        }
    }
    out
}

fn vertex_bound(v: &VertexSample, l_star: f64) -> f64 {
    let theta0 = v.rays.0.dot(v.rays.1).clamp(-1.0, 1.0).acos();
    if v.curvature * l_star < 1e-12 {
        (v.reach / l_star).min((0.5 * theta0).tan())
    } else {
        (v.reach / l_star)
            .min(theta0 / (4.0 * v.curvature * l_star))
            .min((0.25 * theta0).tan())
    }
}

struct CutSample {
    ratio_num: f64,
    vertex_dist: f64,
    label: String,
}

/// Cut distance along the inward normal: the first `s` where the distance to the piece
/// boundary falls below `s`, to relative tolerance `1e-9` of the diameter.
fn cut_distance(piece: &PieceSpec, p: Point, n: Point, diam: f64, steps: usize) -> f64 {
    let tol = 1e-10 * diam;
    let bad = |s: f64| piece.distance(p + n * s) < s - tol;
    let ds = diam / steps as f64;
    let mut lo = 0.0;
    let mut hi = None;
    let mut s = ds;
    while s <= 2.0 * diam {
        if bad(s) {
            hi = Some(s);
            break;
        }
        lo = s;
        s += ds;
    }
    let Some(mut hi) = hi else { return 2.0 * diam };
    while hi - lo > 1e-12 * diam {
        let mid = 0.5 * (lo + hi);
        if bad(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

fn cut_samples(pieces: &[PieceSpec], samples: usize, offset: f64) -> Vec<CutSample> {
    let mut out = Vec::new();
    for (pi, piece) in pieces.iter().enumerate() {
        let diam = piece.diameter();
        let per = piece.perimeter();
        let verts = piece.vertices();
        for (ai, arc) in piece.arcs.iter().enumerate() {
            let n = ((4 * samples) as f64 * arc.length() / per).ceil().max(2.0) as usize;
            for q in 0..n {
                let u = (q as f64 + offset) / n as f64;
                let p = arc.eval(u);
                let normal = arc.tangent(u).perp();
                let vd = verts.iter().map(|v| v.dist(p)).fold(f64::INFINITY, f64::min);
                if vd < 1e-9 * diam {
                    continue;
                }
                out.push(CutSample {
                    ratio_num: cut_distance(piece, p, normal, diam, 8 * samples),
                    vertex_dist: vd,
                    label: format!("piece {pi} arc {ai} u = {u:.4}"),
                });
            }
        }
    }
    out
}

fn neck_ratios(g: &Homotopy, len: f64, samples: usize, offset: f64) -> Vec<(f64, f64, f64, f64, String)> {
    // (t-derivative ratio, |ds| min, 1/|ds| max, det ratio)
    let mut out = Vec::new();
    for a in 0..=samples {
        let s = len * ((a as f64 + offset) / (samples as f64 + 1.0)).min(1.0);
        let mut tmin = f64::INFINITY;
        let mut tmax = 0.0f64;
        let mut smin = f64::INFINITY;
        let mut smax = 0.0f64;
        let mut det = f64::INFINITY;
        for t in t_grid(samples) {
            let (gs, gt) = (g.ds(s, t), g.dt(s, t));
            tmin = tmin.min(gt.norm());
            tmax = tmax.max(gt.norm());
            smin = smin.min(gs.norm());
            smax = smax.max(gs.norm());
            det = det.min(gt.cross(gs).abs() / (gt.norm() * gs.norm()));
        }
        out.push((tmin / tmax, smin, 1.0 / smax, det, format!("s = {s:.4}")));
    }
    out
}

/// Estimates admissible constants for the base domain (all necks at full width).
pub fn estimate_geometric_constants(
    pieces: &[PieceSpec],
    necks: &[NeckSpec],
    samples: usize,
) -> Result<GeometricConstants> {
    let samples = samples.max(8);
    let (a_star, l_star) = reference_scales(pieces, necks, samples);

    let (kmax, sampled_k) = max_curvature(pieces, necks, samples);
    let mut kappa_star = l_star * kmax;
    if sampled_k {
        kappa_star *= 1.0 + SAMPLED_MARGIN;
    }

    let verts = vertex_samples(pieces, necks, samples);
    let mut delta_star = verts
        .iter()
        .map(|v| vertex_bound(v, l_star))
        .fold(1.0, f64::min);
    let corner_count = pieces.iter().map(|p| p.vertices().len()).sum::<usize>() + 4 * necks.len();
    if corner_count > 0 {
        delta_star = delta_star.min(1.0 / corner_count as f64);
    }
    if sampled_k {
        delta_star *= 1.0 - SAMPLED_MARGIN;
    }

    let cap = l_star * delta_star;
    let tau_star = cut_samples(pieces, samples, 0.5)
        .iter()
        .map(|c| c.ratio_num / c.vertex_dist.min(cap))
        .fold(f64::INFINITY, f64::min)
        * (1.0 - TAU_MARGIN);

    let mut w_star = 1.0f64;
    for n in necks {
        for r in neck_ratios(&n.homotopy, n.length(), samples, 0.0) {
            w_star = w_star.min(r.0).min(r.1).min(r.2).min(r.3);
        }
        if n.homotopy.is_sampled() {
            w_star *= 1.0 - SAMPLED_MARGIN;
        }
    }

    let consts = GeometricConstants {
        rho_star: l_star * l_star / a_star,
        kappa_star,
        delta_star,
        tau_star: if tau_star.is_finite() { tau_star } else { 1.0 },
        w_star,
        a_star,
        l_star,
        provenance: Provenance::Estimated,
    };
    verify_constants(pieces, necks, &consts, samples)?;
    Ok(consts)
}

/// Checks every defining inequality on a grid finer than the estimation grid.
pub fn verify_constants(
    pieces: &[PieceSpec],
    necks: &[NeckSpec],
    c: &GeometricConstants,
    samples: usize,
) -> Result<()> {
    let vs = 2 * samples.max(8) + 1;
    let (a_star, l_star) = reference_scales(pieces, necks, vs);
    let fail = |constant: &'static str, sample: String, detail: String| {
        Err(ChainError::ConstantEstimation {
            constant,
            sample,
            detail,
        })
    };
    let rho = l_star * l_star / a_star;
    if c.rho_star < rho * (1.0 - 1e-12) {
        return fail("rho", "base metrics".into(), format!("{} < L*^2/A* = {rho}", c.rho_star));
    }

    for (pi, p) in pieces.iter().enumerate() {
        for (ai, a) in p.arcs.iter().enumerate() {
            for (q, k) in a.curvature_samples(vs) {
                if k * l_star > c.kappa_star * (1.0 + 1e-9) + 1e-12 {
                    return fail(
                        "kappa",
                        format!("piece {pi} arc {ai} at ({:.4}, {:.4})", q.x, q.y),
                        format!("curvature {k} exceeds kappa*/L* = {}", c.kappa_star / l_star),
                    );
                }
            }
        }
    }
    for (nk, n) in necks.iter().enumerate() {
        for t in t_grid(vs) {
            let k = slice_curvatures(&n.homotopy, n.length(), t, vs);
            if k * l_star > c.kappa_star * (1.0 + 1e-9) + 1e-12 {
                return fail(
                    "kappa",
                    format!("neck {nk} slice t = {t:.4}"),
                    format!("curvature {k} exceeds kappa*/L* = {}", c.kappa_star / l_star),
                );
            }
        }
    }

    for v in vertex_samples(pieces, necks, vs) {
        let b = vertex_bound(&v, l_star);
        if c.delta_star > b * (1.0 + 1e-9) {
            return fail(
                "delta",
                format!("{} at ({:.4}, {:.4})", v.label, v.point.x, v.point.y),
                format!("admits at most {b}, got {}", c.delta_star),
            );
        }
    }

    let cap = l_star * c.delta_star;
    for s in cut_samples(pieces, vs, 0.25) {
        let need = c.tau_star * s.vertex_dist.min(cap);
        if s.ratio_num + 1e-8 * cap < need {
            return fail(
                "tau",
                s.label,
                format!("cut distance {} below tau* eta = {need}", s.ratio_num),
            );
        }
    }

    for (nk, n) in necks.iter().enumerate() {
        for r in neck_ratios(&n.homotopy, n.length(), vs, 0.5) {
            let worst = r.0.min(r.1).min(r.2).min(r.3);
            if worst < c.w_star * (1.0 - 1e-12) {
                return fail("w", format!("neck {nk} {}", r.4), format!("ratio {worst} below w* = {}", c.w_star));
            }
        }
    }
    Ok(())
}

/// Constants for a configuration: user-supplied values are verified, otherwise estimated.
pub fn constants_for(cfg: &DomainConfig, samples: usize) -> Result<GeometricConstants> {
    match cfg.constants {
        Some(UserConstants {
            rho,
            kappa,
            delta,
            tau,
            w,
        }) => {
            let (a_star, l_star) = reference_scales(&cfg.pieces, &cfg.necks, samples);
            let c = GeometricConstants {
                rho_star: rho,
                kappa_star: kappa,
                delta_star: delta,
                tau_star: tau,
                w_star: w,
                a_star,
                l_star,
                provenance: Provenance::UserSupplied,
            };
            verify_constants(&cfg.pieces, &cfg.necks, &c, samples)?;
            Ok(c)
        }
        None => estimate_geometric_constants(&cfg.pieces, &cfg.necks, samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spec::{disc, rectangle, two_squares};
    use std::f64::consts::PI;

    #[test]
    fn two_squares_reference_values() {
        let cfg = two_squares(0.5);
        let c = estimate_geometric_constants(&cfg.pieces, &cfg.necks, 32).unwrap();
        assert_eq!(c.a_star, 8.0);
        assert_eq!(c.l_star, 20.0);
        assert_eq!(c.rho_star, 50.0);
        assert_eq!(c.kappa_star, 0.0);
        assert!((c.delta_star - 1.0 / 40.0).abs() < 1e-12, "{}", c.delta_star);
        assert!((c.tau_star - 1.0).abs() < 2e-3, "{}", c.tau_star);
        assert_eq!(c.w_star, 1.0);
    }

    #[test]
    fn reference_constants_verify_when_supplied() {
        let mut cfg = two_squares(0.5);
        cfg.constants = Some(UserConstants {
            rho: 50.0,
            kappa: 0.0,
            delta: 1.0 / 40.0,
            tau: 1.0,
            w: 1.0,
        });
        let c = constants_for(&cfg, 32).unwrap();
        assert_eq!(c.provenance, Provenance::UserSupplied);
    }

    #[test]
    fn inadmissible_supplied_constant_is_reported() {
        let mut cfg = two_squares(0.5);
        cfg.constants = Some(UserConstants {
            rho: 50.0,
            kappa: 0.0,
            delta: 1.0 / 20.0,
            tau: 1.0,
            w: 1.0,
        });
        match constants_for(&cfg, 16) {
            Err(ChainError::ConstantEstimation { constant, .. }) => assert_eq!(constant, "delta"),
            other => panic!("expected a delta failure, got {other:?}"),
        }
    }

    #[test]
    fn unit_disc_curvature_constant() {
        let p = vec![disc(Point::new(0.0, 0.0), 1.0)];
        let c = estimate_geometric_constants(&p, &[], 32).unwrap();
        assert!((c.kappa_star - 2.0 * PI).abs() < 1e-9 * 2.0 * PI);
        assert!((c.rho_star - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn unit_square_constants() {
        let p = vec![rectangle(0.0, 0.0, 1.0, 1.0)];
        let c = estimate_geometric_constants(&p, &[], 16).unwrap();
        assert_eq!(c.rho_star, 16.0);
        assert_eq!(c.kappa_star, 0.0);
        // corner reach is a full side, capped by the vertex count
        assert!((c.delta_star - 0.25).abs() < 1e-12);
    }
}
