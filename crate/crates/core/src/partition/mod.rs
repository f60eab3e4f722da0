//! The δ-partition of a chain domain into bulk, boundary, corner, neck and neck-end regions,
//! a partition of unity subordinate to it, and straightening maps for sides and necks.

mod straighten;

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{ChainError, Result};
use crate::geometry::{CornerKind, GeometricConstants, Point, RealizedDomain};

pub use straighten::{straighten, StraightenKind, StraighteningMap};

/// Regions of the δ-partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PartitionLabel {
    /// Bulk: away from the boundary.
    Omega0,
    /// Collar of the smooth sides.
    Omega1,
    /// Discs around vertices.
    Omega2,
    /// Interior of thin necks.
    Omega3,
    /// Ends of thin necks.
    Omega4,
}

impl PartitionLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Whether a neck is resolved by the partition (`Wide`) or collapsed into neck regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NeckRegime {
    /// Minimum width above `4δ`: its junction corners get vertex discs.
    Wide,
    /// Minimum width at most `4δ`.
    Thin,
}

/// Scale and constants of a δ-partition of one realized domain.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionParams {
    pub delta: f64,
    pub tau_star: f64,
    pub kappa_star: f64,
    pub delta_star: f64,
    pub w_star: f64,
    /// Boundary length of the realized domain.
    pub length: f64,
    pub regimes: Vec<NeckRegime>,
    /// Centers of the vertex discs.
    pub centers: Vec<Point>,
}

/// Largest admissible partition scale: `min(L δ*/20, L/(κ* τ*))`.
pub fn max_delta(dom: &RealizedDomain, consts: &GeometricConstants) -> f64 {
    let l = dom.perimeter;
    let curv = if consts.kappa_star > 0.0 {
        l / (consts.kappa_star * consts.tau_star)
    } else {
        f64::INFINITY
    };
    (l * consts.delta_star / 20.0).min(curv)
}

pub fn admissible_delta(dom: &RealizedDomain, consts: &GeometricConstants, delta: f64) -> bool {
    delta > 0.0 && delta <= max_delta(dom, consts)
}

impl PartitionParams {
    /// Fails on an inadmissible `delta` or when two vertex discs of radius `delta` overlap.
    pub fn new(dom: &RealizedDomain, consts: &GeometricConstants, delta: f64) -> Result<PartitionParams> {
        if !admissible_delta(dom, consts, delta) {
            return Err(ChainError::Param(format!(
                "delta {delta} not in (0, {}]",
                max_delta(dom, consts)
            )));
        }
        let regimes: Vec<NeckRegime> = dom
            .necks
            .iter()
            .map(|n| if n.min_width > 4.0 * delta { NeckRegime::Wide } else { NeckRegime::Thin })
            .collect();
        let centers: Vec<Point> = dom
            .corners
            .iter()
            .filter(|c| match c.kind {
                CornerKind::Piece { .. } => true,
                CornerKind::Junction { neck, .. } => regimes[neck] == NeckRegime::Wide,
            })
            .map(|c| c.point)
            .collect();
        for (a, p) in centers.iter().enumerate() {
            for q in &centers[a + 1..] {
                if p.dist(*q) < 2.0 * delta {
                    return Err(ChainError::Param(format!(
                        "vertex discs of radius {delta} around ({}, {}) and ({}, {}) overlap",
                        p.x, p.y, q.x, q.y
                    )));
                }
            }
        }
        Ok(PartitionParams {
            delta,
            tau_star: consts.tau_star,
            kappa_star: consts.kappa_star,
            delta_star: consts.delta_star,
            w_star: consts.w_star,
            length: dom.perimeter,
            regimes,
            centers,
        })
    }

    /// Depth of the boundary collar, `(3/4) τ* δ`.
    pub fn collar(&self) -> f64 {
        0.75 * self.tau_star * self.delta
    }

    fn center_distance(&self, x: Point) -> (f64, Point) {
        self.centers
            .iter()
            .map(|&c| (x.dist(c), c))
            .fold((f64::INFINITY, x), |a, b| if b.0 < a.0 { b } else { a })
    }

    fn mouth_distance(&self, dom: &RealizedDomain, x: Point) -> (f64, Point) {
        dom.necks
            .iter()
            .filter(|n| self.regimes[n.index] == NeckRegime::Thin)
            .map(|n| n.mouth_distance(x))
            .fold((f64::INFINITY, x), |a, b| if b.0 < a.0 { b } else { a })
    }

    fn in_thin_neck(&self, dom: &RealizedDomain, x: Point) -> bool {
        dom.necks
            .iter()
            .any(|n| self.regimes[n.index] == NeckRegime::Thin && n.contains(x))
    }
}

/// Region of `x`, resolving overlaps in the order corner discs, neck ends, neck interiors and
/// side collars, bulk.
pub fn classify_point(dom: &RealizedDomain, params: &PartitionParams, x: Point) -> Result<PartitionLabel> {
    if !dom.contains(x) {
        return Err(ChainError::OutsideDomain(x));
    }
    let d = params.delta;
    if params.center_distance(x).0 < d {
        return Ok(PartitionLabel::Omega2);
    }
    if params.mouth_distance(dom, x).0 < d {
        return Ok(PartitionLabel::Omega4);
    }
    if params.in_thin_neck(dom, x) {
        return Ok(PartitionLabel::Omega3);
    }
    if dom.boundary_distance(x) < params.collar() {
        return Ok(PartitionLabel::Omega1);
    }
    Ok(PartitionLabel::Omega0)
}

/// Values and gradients of the five cutoffs at one point, indexed by region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffValues {
    pub chi: [f64; 5],
    pub grad: [Point; 5],
}

/// `1` up to `a`, `0` from `b`, quintic smoothstep in between; returns value and slope.
fn falloff(r: f64, a: f64, b: f64) -> (f64, f64) {
    if r <= a {
        return (1.0, 0.0);
    }
    if r >= b {
        return (0.0, 0.0);
    }
    let u = (r - a) / (b - a);
    let s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / (b - a);
    (1.0 - s, -ds)
}

/// Angular pair `(sin, cos)` of a falloff, so the two squares sum to one.
fn angular(s: f64, ds: f64, dir: Point) -> (f64, Point, f64, Point) {
    let a = FRAC_PI_2 * s;
    let (sn, cs) = a.sin_cos();
    let g = dir * (FRAC_PI_2 * ds);
    (sn, g * cs, cs, g * (-sn))
}

fn unit_from(x: Point, foot: Point) -> Point {
    let d = x - foot;
    let n = d.norm();
    if n > 0.0 {
        d * (1.0 / n)
    } else {
        Point::new(0.0, 0.0)
    }
}

/// Partition of unity `Σ χ_j² = 1` built by nesting: the corner cutoff takes its share
/// first, then the neck ends, neck interiors and side collars split what remains, and the
/// bulk keeps the rest.
#[derive(Clone, Copy)]
pub struct CutoffField<'a> {
    pub dom: &'a RealizedDomain,
    pub params: &'a PartitionParams,
}

impl<'a> CutoffField<'a> {
    pub fn new(dom: &'a RealizedDomain, params: &'a PartitionParams) -> Self {
        CutoffField { dom, params }
    }

    pub fn eval(&self, x: Point) -> CutoffValues {
        let p = self.params;
        let d = p.delta;
        let zero = Point::new(0.0, 0.0);

        let (rc, c) = p.center_distance(x);
        let (s2, ds2) = falloff(rc, 0.25 * d, 0.5 * d);
        let corner = angular(s2, ds2, unit_from(x, c));

        let (rm, foot) = p.mouth_distance(self.dom, x);
        let (s4, ds4) = falloff(rm, 0.25 * d, 0.5 * d);
        let ends = angular(s4, ds4, unit_from(x, foot));

        // neck ends mask the jump of the interior indicator across the mouths
        let inside = if p.in_thin_neck(self.dom, x) { (1.0, zero, 0.0, zero) } else { (0.0, zero, 1.0, zero) };

        let nb = self.dom.nearest_boundary(x);
        let (s1, ds1) = falloff(nb.distance, 0.5 * p.collar(), p.collar());
        let collar = angular(s1, ds1, unit_from(x, nb.foot));

        let mut chi = [0.0; 5];
        let mut grad = [zero; 5];
        let (mut acc, mut gacc) = (1.0, zero);
        for (j, (pv, pg, qv, qg)) in [(2, corner), (4, ends), (3, inside), (1, collar)] {
            chi[j] = acc * pv;
            grad[j] = pg * acc + gacc * pv;
            gacc = qg * acc + gacc * qv;
            acc *= qv;
        }
        chi[0] = acc;
        grad[0] = gacc;
        CutoffValues { chi, grad }
    }

    /// Largest `δ |∇χ_j|` over the given points.
    pub fn gradient_constant(&self, points: &[Point]) -> f64 {
        points
            .iter()
            .flat_map(|&x| self.eval(x).grad)
            .map(|g| g.norm() * self.params.delta)
            .fold(0.0, f64::max)
    }
}

/// `x,y,label` rows of a regular grid of points inside the domain.
pub fn label_raster_csv(dom: &RealizedDomain, params: &PartitionParams, nx: usize, ny: usize) -> String {
    let (lo, hi) = dom.bbox();
    let mut out = String::from("x,y,label\n");
    for j in 0..ny {
        for i in 0..nx {
            let x = Point::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / nx as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / ny as f64,
            );
            if let Ok(l) = classify_point(dom, params, x) {
                let _ = writeln!(out, "{},{},{}", x.x, x.y, l.index());
            }
        }
    }
    out
}
