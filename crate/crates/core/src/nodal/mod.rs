//! Nodal domains of P1 eigenfunctions: extraction, Courant-sharpness report and
//! classification into bulk, boundary, corner and neck domains.

mod classify;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{ChainError, Result};
use crate::fem::Spectrum;
use crate::geometry::Point;
use crate::mesh::TriMesh;

pub use classify::{classify_nodal_domains, ClassCounts, ClassifierParams, CutoffSamples, DomainClass};

/// Relative threshold below which a vertex value counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Relative gap under which consecutive eigenvalues are treated as one cluster.
pub const DEFAULT_CLUSTER_RTOL: f64 = 1e-3;

/// One connected component of `{u > 0}` or `{u < 0}`.
#[derive(Clone, Debug, Serialize)]
pub struct NodalDomain {
    pub sign: i8,
    /// Triangles meeting the domain (a cut triangle can belong to two domains).
    pub triangles: Vec<usize>,
    pub area: f64,
    /// `∫_D u²`.
    pub mass: f64,
}

/// Sign components of a P1 function.
///
/// The function is thresholded first: values within `zero_tol` of zero become zero. The
/// components are then exact for the piecewise-linear interpolant, since the positive part
/// of a linear function on a triangle is convex and touches exactly the positive vertices.
/// Two same-sign vertices therefore share a domain iff a path of mesh edges with that sign
/// joins them.
#[derive(Clone, Debug)]
pub struct NodalDecomposition {
    pub domains: Vec<NodalDomain>,
    /// Absolute threshold used.
    pub zero_tol: f64,
    pub nu: usize,
    /// Thresholded vertex values.
    pub values: Vec<f64>,
    /// Domain of each vertex (`None` on the zero band or in a discarded domain).
    pub vertex_domain: Vec<Option<usize>>,
}

/// A triangle or part of one on which `u` has one sign; `values` are the linear
/// interpolant's values at `points`.
#[derive(Clone, Copy, Debug)]
pub struct Piece {
    pub points: [Point; 3],
    pub values: [f64; 3],
}

impl Piece {
    pub fn area(&self) -> f64 {
        0.5 * (self.points[1] - self.points[0]).cross(self.points[2] - self.points[0]).abs()
    }

    /// Exact `∫ u²` of the linear interpolant.
    pub fn mass(&self) -> f64 {
        let [a, b, c] = self.values;
        self.area() / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a)
    }
}

/// Calls `f(piece, whole)` for every part of triangle `tri` where `sign * u > 0`; `whole` is
/// true when that part is the full triangle.
pub fn sign_pieces(points: [Point; 3], values: [f64; 3], sign: f64, mut f: impl FnMut(Piece, bool)) {
    let g = values.map(|v| sign * v);
    if g.iter().all(|&v| v <= 0.0) {
        return;
    }
    if g.iter().all(|&v| v >= 0.0) {
        f(Piece { points, values }, true);
        return;
    }
    let mut poly: Vec<(Point, f64)> = Vec::with_capacity(4);
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        if g[a] > 0.0 {
            poly.push((points[a], values[a]));
            if g[b] < 0.0 {
                let t = g[a] / (g[a] - g[b]);
                poly.push((points[a].lerp(points[b], t), 0.0));
            }
        } else if g[b] > 0.0 {
            if g[a] < 0.0 {
                let t = g[a] / (g[a] - g[b]);
                poly.push((points[a].lerp(points[b], t), 0.0));
            } else {
                poly.push((points[a], 0.0));
            }
        }
    }
    for k in 1..poly.len().saturating_sub(1) {
        let piece = Piece {
            points: [poly[0].0, poly[k].0, poly[k + 1].0],
            values: [poly[0].1, poly[k].1, poly[k + 1].1],
        };
        f(piece, false);
    }
}

fn find(root: &mut [usize], mut v: usize) -> usize {
    while root[v] != v {
        root[v] = root[root[v]];
        v = root[v];
    }
    v
}

/// Extracts the nodal domains of `coeffs` (one value per mesh vertex). `rel_tol` scales the
/// zero threshold by `max |coeffs|`; domains of mass below `zero_tol²` are dropped.
pub fn extract_nodal_domains(mesh: &TriMesh, coeffs: &[f64], rel_tol: f64) -> Result<NodalDecomposition> {
    let n = mesh.num_vertices();
    assert_eq!(coeffs.len(), n);
    let peak = coeffs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let zero_tol = rel_tol * peak;
    if !(peak > 0.0) || coeffs.iter().all(|v| v.abs() <= zero_tol) {
        return Err(ChainError::NullEigenfunction);
    }
    let values: Vec<f64> = coeffs.iter().map(|&v| if v.abs() <= zero_tol { 0.0 } else { v }).collect();
    let sign = |v: usize| (values[v] > 0.0) as i8 - (values[v] < 0.0) as i8;

    let mut root: Vec<usize> = (0..n).collect();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if sign(a) != 0 && sign(a) == sign(b) {
                let (ra, rb) = (find(&mut root, a), find(&mut root, b));
                if ra != rb {
                    root[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut raw: Vec<NodalDomain> = Vec::new();
    let mut vertex_domain = vec![None; n];
    for v in 0..n {
        if sign(v) == 0 {
            continue;
        }
        let r = find(&mut root, v);
        if label[r] == usize::MAX {
            label[r] = raw.len();
            raw.push(NodalDomain {
                sign: sign(v),
                triangles: Vec::new(),
                area: 0.0,
                mass: 0.0,
            });
        }
        vertex_domain[v] = Some(label[r]);
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let vals = tri.map(|v| values[v]);
        for s in [1i8, -1] {
            let Some(&v) = tri.iter().find(|&&v| sign(v) == s) else { continue };
            let d = vertex_domain[v].unwrap();
            let dom = &mut raw[d];
            dom.triangles.push(t);
            sign_pieces(pts, vals, s as f64, |p, _| {
                dom.area += p.area();
                dom.mass += p.mass();
            });
        }
    }
    let floor = zero_tol * zero_tol;
    let mut remap = vec![None; raw.len()];
    let mut domains = Vec::new();
    for (k, d) in raw.into_iter().enumerate() {
        if d.mass >= floor {
            remap[k] = Some(domains.len());
            domains.push(d);
        }
    }
    for vd in vertex_domain.iter_mut() {
        *vd = vd.and_then(|k| remap[k]);
    }
    Ok(NodalDecomposition {
        nu: domains.len(),
        domains,
        zero_tol,
        values,
        vertex_domain,
    })
}

impl NodalDecomposition {
    /// Domain of the part of triangle `t` with sign `s`, if any.
    pub fn domain_of(&self, tri: [usize; 3], s: f64) -> Option<usize> {
        tri.iter()
            .find(|&&v| self.values[v] * s > 0.0)
            .and_then(|&v| self.vertex_domain[v])
    }

    /// `(∫_D |∇u|², ∫_D u², ratio)` for domain `k`, with `u` restricted to the domain.
    pub fn rayleigh(&self, mesh: &TriMesh, k: usize) -> Result<(f64, f64, f64)> {
        let d = self.domains.get(k).ok_or(ChainError::DegenerateRegion)?;
        let s = d.sign as f64;
        let (mut energy, mut mass) = (0.0, 0.0);
        for &t in &d.triangles {
            let tri = mesh.triangles[t];
            let p = mesh.triangle_points(t);
            let u = tri.map(|v| self.values[v]);
            let area2 = (p[1] - p[0]).cross(p[2] - p[0]);
            // gradient of the linear interpolant
            let g = ((p[1] - p[2]).perp() * u[0] + (p[2] - p[0]).perp() * u[1] + (p[0] - p[1]).perp() * u[2])
                * (-1.0 / area2);
            sign_pieces(p, u, s, |piece, _| {
                energy += g.norm2() * piece.area();
                mass += piece.mass();
            });
        }
        if !(mass > 0.0) {
            return Err(ChainError::DegenerateRegion);
        }
        Ok((energy, mass, energy / mass))
    }
}

/// Courant data of one eigenpair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CourantRow {
    /// 1-based index.
    pub m: usize,
    pub mu: f64,
    pub nu: usize,
    /// Cluster tag: the first index of the eigenvalue cluster containing `m`.
    pub cluster: usize,
    /// Last index of that cluster.
    pub cluster_end: usize,
    /// `ν = cluster`: as many nodal domains as the lowest index of the eigenvalue.
    pub sharp: bool,
    /// `ν > cluster_end`: the Courant bound fails even with degeneracy slack.
    pub violation: bool,
}

/// Groups consecutive eigenvalues whose relative gap is below `rtol` and returns
/// `(first, last)` 1-based indices for each position.
pub fn clusters(values: &[f64], rtol: f64) -> Vec<(usize, usize)> {
    let n = values.len();
    let mut out = vec![(0, 0); n];
    let mut start = 0;
    for k in 0..=n {
        let split = k == n || (k > start && values[k] - values[k - 1] > rtol * values[k].abs().max(values[k - 1].abs()).max(1e-300));
        if split && k > start {
            for slot in out.iter_mut().take(k).skip(start) {
                *slot = (start + 1, k);
            }
            start = k;
        }
    }
    out
}

/// Courant rows for the first `nus.len()` eigenpairs of `spec`.
pub fn courant_report(spec: &Spectrum, nus: &[usize], rtol: f64) -> Vec<CourantRow> {
    let values = spec.values();
    let cl = clusters(&values, rtol);
    nus.iter()
        .enumerate()
        .map(|(k, &nu)| {
            let (first, last) = cl[k];
            // a cluster cut off by the end of the computed spectrum may continue
            let last = if last == values.len() { usize::MAX } else { last };
            CourantRow {
                m: k + 1,
                mu: values[k],
                nu,
                cluster: first,
                cluster_end: last.min(values.len()),
                sharp: nu == first,
                violation: nu > last,
            }
        })
        .collect()
}

/// Per-eigenpair nodal summary.
#[derive(Clone, Debug, Serialize)]
pub struct NodalRow {
    pub courant: CourantRow,
    /// Bulk, boundary, corner and neck counts.
    pub classes: Option<[usize; 4]>,
}

/// `m,mu,nu,nu0,nu1,nu2,nu3,sharp,cluster` rows (class counts empty when unclassified).
pub fn nodal_csv(rows: &[NodalRow]) -> String {
    let mut s = String::from("m,mu,nu,nu0,nu1,nu2,nu3,sharp,cluster\n");
    for r in rows {
        let c = &r.courant;
        let classes = match r.classes {
            Some(k) => format!("{},{},{},{}", k[0], k[1], k[2], k[3]),
            None => ",,,".to_string(),
        };
        let _ = writeln!(s, "{},{:.12e},{},{},{},{}", c.m, c.mu, c.nu, classes, c.sharp, c.cluster);
    }
    s
}
