//! Maps that flatten a smooth side of a piece (normal coordinates) or a neck (rescaled
//! homotopy coordinates) onto a rectangle.

use serde::Serialize;

use crate::error::{ChainError, Result};
use crate::geometry::{Arc, GeometricConstants, Point, RealizedDomain, RealizedNeck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StraightenKind {
    /// Arc `arc` of piece `piece`.
    Side { piece: usize, arc: usize },
    Neck { neck: usize },
}

#[derive(Clone, Debug)]
enum Source {
    Side { arc: Arc, length: f64 },
    Neck { neck: RealizedNeck, scale: f64 },
}

/// `F: [s0, s1] x [t0, t1] -> domain` with its Jacobian determinant.
#[derive(Clone, Debug)]
pub struct StraighteningMap {
    pub kind: StraightenKind,
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    /// Interval the Jacobian is guaranteed to lie in.
    pub certified: (f64, f64),
    /// Smallest and largest Jacobian seen on the sampling grid.
    pub sampled: (f64, f64),
    source: Source,
}

const GRID_S: usize = 64;
const GRID_T: usize = 16;

/// Builds and certifies a straightening map.
///
/// Side maps are `γ(s) + t n(s)` in arclength `s` with inward normal `n`, on the part of the
/// arc more than `eta` (in arclength) from the piece's vertices and for `0 ≤ t ≤ (3/4) τ* η`.
/// Neck maps are `G(s, t1 + (t + w)|I|/(2w))` on `[0, L] x [-w, w]` with `w` the minimum
/// width; `eta` is ignored.
pub fn straighten(
    dom: &RealizedDomain,
    consts: &GeometricConstants,
    kind: StraightenKind,
    eta: f64,
) -> Result<StraighteningMap> {
    let (source, s_range, t_range, certified) = match kind {
        StraightenKind::Side { piece, arc } => {
            let spec = dom
                .pieces
                .get(piece)
                .ok_or_else(|| ChainError::Param(format!("no piece {piece}")))?;
            let a = spec
                .arcs
                .get(arc)
                .ok_or_else(|| ChainError::Param(format!("piece {piece} has no arc {arc}")))?;
            let l = dom.perimeter;
            let curv = if consts.kappa_star > 0.0 {
                l / (consts.kappa_star * consts.tau_star)
            } else {
                f64::INFINITY
            };
            if !(eta > 0.0 && eta <= (l * consts.delta_star).min(curv)) {
                return Err(ChainError::Param(format!("eta {eta} too large for side straightening")));
            }
            let verts = spec.vertex_arcs();
            let n = spec.arcs.len();
            let len = a.length();
            let lo = if verts.contains(&arc) { eta } else { 0.0 };
            let hi = if verts.contains(&((arc + 1) % n)) { len - eta } else { len };
            if !(hi > lo) {
                return Err(ChainError::Param(format!("arc {arc} of piece {piece} lies within eta of its vertices")));
            }
            let spread = 0.75 * consts.tau_star * consts.kappa_star * eta / l;
            let certified = (1.0 - spread, 1.0 + spread);
            (
                Source::Side {
                    arc: a.clone(),
                    length: len,
                },
                (lo, hi),
                (0.0, 0.75 * consts.tau_star * eta),
                certified,
            )
        }
        StraightenKind::Neck { neck } => {
            let nk = dom
                .necks
                .get(neck)
                .ok_or_else(|| ChainError::Param(format!("no neck {neck}")))?;
            let w = nk.min_width;
            let span = nk.interval.1 - nk.interval.0;
            let ws = consts.w_star;
            let certified = (0.5 * ws.powi(3), 0.5 / ws.powi(3));
            (
                Source::Neck {
                    neck: nk.clone(),
                    scale: span / (2.0 * w),
                },
                (0.0, nk.length),
                (-w, w),
                certified,
            )
        }
    };
    let mut map = StraighteningMap {
        kind,
        s_range,
        t_range,
        certified,
        sampled: (f64::INFINITY, f64::NEG_INFINITY),
        source,
    };
    let slack = 1e-9;
    for i in 0..=GRID_S {
        let s = s_range.0 + (s_range.1 - s_range.0) * i as f64 / GRID_S as f64;
        for k in 0..=GRID_T {
            let t = t_range.0 + (t_range.1 - t_range.0) * k as f64 / GRID_T as f64;
            let j = map.jacobian(s, t);
            map.sampled = (map.sampled.0.min(j), map.sampled.1.max(j));
            if !(j >= certified.0 - slack && j <= certified.1 + slack) {
                return Err(ChainError::Straightening(format!(
                    "{kind:?}: Jacobian {j} at ({s}, {t}) outside [{}, {}]",
                    certified.0, certified.1
                )));
            }
        }
    }
    Ok(map)
}

impl StraighteningMap {
    pub fn eval(&self, s: f64, t: f64) -> Point {
        match &self.source {
            Source::Side { arc, length } => {
                let u = s / length;
                arc.eval(u) + inward(arc, u) * t
            }
            Source::Neck { neck, scale } => neck.point(s, self.neck_t(t, *scale)),
        }
    }

    fn neck_t(&self, t: f64, scale: f64) -> f64 {
        let Source::Neck { neck, .. } = &self.source else { unreachable!() };
        neck.interval.0 + (t - self.t_range.0) * scale
    }

    /// Absolute Jacobian determinant of the map at `(s, t)`.
    pub fn jacobian(&self, s: f64, t: f64) -> f64 {
        match &self.source {
            Source::Side { arc, length, .. } => 1.0 - t * signed_curvature(arc, s / length),
            Source::Neck { neck, scale } => neck.homotopy.jacobian(s, self.neck_t(t, *scale)).abs() * scale,
        }
    }
}

/// Inward normal of a counter-clockwise piece boundary.
fn inward(arc: &Arc, u: f64) -> Point {
    arc.tangent(u).perp()
}

/// Curvature, positive where the piece is locally convex.
fn signed_curvature(arc: &Arc, u: f64) -> f64 {
    match arc {
        Arc::Segment { .. } => 0.0,
        Arc::Arc { radius, sweep, .. } => sweep.signum() / radius,
        Arc::Polyline { points } => {
            let n = points.len();
            if n < 3 {
                return 0.0;
            }
            let k = ((u.clamp(0.0, 1.0) * (n - 1) as f64).round() as usize).clamp(1, n - 2);
            let (a, b, c) = (points[k - 1], points[k], points[k + 1]);
            let den = a.dist(b) * b.dist(c) * c.dist(a);
            if den == 0.0 {
                0.0
            } else {
                2.0 * (b - a).cross(c - a) / den
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disc, realize_config, two_squares, DomainConfig, Provenance, WidthFamily};

    fn consts(kappa: f64) -> GeometricConstants {
        GeometricConstants {
            rho_star: 50.0,
            kappa_star: kappa,
            delta_star: 1.0 / 40.0,
            tau_star: 1.0,
            w_star: 1.0,
            a_star: 8.0,
            l_star: 20.0,
            provenance: Provenance::UserSupplied,
        }
    }

    #[test]
    fn straight_side_has_unit_jacobian() {
        let dom = realize_config(&two_squares(0.5), 0.05).unwrap();
        let m = straighten(&dom, &consts(0.0), StraightenKind::Side { piece: 0, arc: 0 }, 0.02).unwrap();
        assert_eq!(m.sampled, (1.0, 1.0));
        assert_eq!(m.t_range.1, 0.015);
        // bottom side of the left square, pushed up by t
        let p = m.eval(1.0, 0.01);
        assert!((p.y - (-0.99)).abs() < 1e-12);
    }

    #[test]
    fn circular_side_matches_annulus() {
        let r = 2.0;
        let cfg = DomainConfig {
            pieces: vec![disc(Point::new(0.0, 0.0), r)],
            necks: vec![],
            widths: WidthFamily::default(),
            constants: None,
        };
        let dom = realize_config(&cfg, 0.05).unwrap();
        let l = dom.perimeter;
        // curvature 1/r = kappa*/L
        let c = GeometricConstants {
            delta_star: 1.0,
            ..consts(l / r)
        };
        let eta = r / 10.0;
        let m = straighten(&dom, &c, StraightenKind::Side { piece: 0, arc: 0 }, eta).unwrap();
        assert!(m.sampled.0 >= 0.9 && m.sampled.1 <= 1.0);
        assert!((m.jacobian(0.3, 0.1) - (1.0 - 0.1 / r)).abs() < 1e-12);
        // finite-difference Jacobian of the map itself
        let (s, t, e) = (1.7, 0.12, 1e-6);
        let fs = (m.eval(s + e, t) - m.eval(s - e, t)) * (0.5 / e);
        let ft = (m.eval(s, t + e) - m.eval(s, t - e)) * (0.5 / e);
        assert!((fs.cross(ft) - m.jacobian(s, t)).abs() < 1e-6);
        assert!(m.eval(s, t).norm() < r);
    }

    #[test]
    fn underestimated_curvature_is_caught() {
        let cfg = DomainConfig {
            pieces: vec![disc(Point::new(0.0, 0.0), 1.0)],
            necks: vec![],
            widths: WidthFamily::default(),
            constants: None,
        };
        let dom = realize_config(&cfg, 0.05).unwrap();
        let c = GeometricConstants { delta_star: 1.0, ..consts(1.0) };
        let r = straighten(&dom, &c, StraightenKind::Side { piece: 0, arc: 0 }, 0.2);
        assert!(matches!(r, Err(ChainError::Straightening(_))));
    }

    #[test]
    fn strip_neck_has_constant_jacobian() {
        let dom = realize_config(&two_squares(0.1), 0.05).unwrap();
        let m = straighten(&dom, &consts(0.0), StraightenKind::Neck { neck: 0 }, 0.0).unwrap();
        assert!((m.sampled.0 - 0.5).abs() < 1e-12 && (m.sampled.1 - 0.5).abs() < 1e-12);
        assert!((m.t_range.1 - 0.1).abs() < 1e-12);
        let p = m.eval(1.0, 0.1);
        assert!((p.x - 0.0).abs() < 1e-12 && (p.y.abs() - 0.05).abs() < 1e-12);
    }
}
