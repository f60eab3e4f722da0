//! Classification of nodal domains by how their mass splits over the partition of unity.

use rayon::prelude::*;
use serde::Serialize;

use super::{sign_pieces, NodalDecomposition, Piece};
use crate::error::{ChainError, Result};
use crate::geometry::{Point, Region};
use crate::mesh::TriMesh;
use crate::partition::CutoffField;

/// Mass-concentration parameter `ε`, eigenvalue exponent `β` and the partition scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifierParams {
    pub epsilon: f64,
    pub beta: f64,
    pub delta: f64,
    /// True when `|Ω|^{1/2-β} μ^{-β}` exceeded the admissible maximum and was capped.
    pub capped: bool,
}

impl ClassifierParams {
    pub const DEFAULT_EPSILON: f64 = 0.1;
    pub const DEFAULT_BETA: f64 = 0.375;

    /// `δ = |Ω|^{1/2-β} μ^{-β}`, capped at `max_delta`.
    pub fn new(epsilon: f64, beta: f64, area: f64, mu: f64, max_delta: f64) -> Result<ClassifierParams> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(ChainError::Param(format!("epsilon {epsilon} not in (0, 1/2)")));
        }
        if !(beta > 0.0 && beta < 0.5) {
            return Err(ChainError::Param(format!("beta {beta} not in (0, 1/2)")));
        }
        if !(mu > 0.0 && area > 0.0 && max_delta > 0.0) {
            return Err(ChainError::Param(format!("need positive area, eigenvalue and scale, got {area}, {mu}, {max_delta}")));
        }
        let natural = area.powf(0.5 - beta) * mu.powf(-beta);
        Ok(ClassifierParams {
            epsilon,
            beta,
            delta: natural.min(max_delta),
            capped: natural > max_delta,
        })
    }
}

/// Degree-5 rule on the reference triangle: barycentric points and weights summing to 1.
const QUAD: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

fn at(p: &[Point; 3], b: [f64; 3]) -> Point {
    Point::new(
        b[0] * p[0].x + b[1] * p[1].x + b[2] * p[2].x,
        b[0] * p[0].y + b[1] * p[1].y + b[2] * p[2].y,
    )
}

/// `χ_j²` at a point, followed by `χ_4²` restricted to the pieces and to the necks.
fn weights(field: &CutoffField, x: Point) -> [f64; 7] {
    let c = field.eval(x).chi;
    let sq = c.map(|v| v * v);
    let neck = matches!(field.dom.region_of(x), Region::Neck(_));
    [
        sq[0],
        sq[1],
        sq[2],
        sq[3],
        sq[4],
        if neck { 0.0 } else { sq[4] },
        if neck { sq[4] } else { 0.0 },
    ]
}

/// Cutoff weights at the quadrature points of every mesh triangle, reused across
/// eigenfunctions; triangles cut by a nodal line are evaluated on the fly.
pub struct CutoffSamples<'a> {
    pub field: CutoffField<'a>,
    per_triangle: Vec<[[f64; 7]; 7]>,
}

impl<'a> CutoffSamples<'a> {
    pub fn new(mesh: &TriMesh, field: CutoffField<'a>) -> Self {
        let per_triangle = (0..mesh.num_triangles())
            .into_par_iter()
            .map(|t| {
                let p = mesh.triangle_points(t);
                QUAD.map(|(b, _)| weights(&field, at(&p, b)))
            })
            .collect();
        CutoffSamples { field, per_triangle }
    }

    /// `[‖u_0‖², …, ‖u_4‖², ‖u_4‖²_pieces, ‖u_4‖²_necks]` over one piece.
    fn integrate(&self, piece: &Piece, cached: Option<usize>) -> [f64; 7] {
        let area = piece.area();
        let mut out = [0.0; 7];
        for (q, (b, w)) in QUAD.iter().enumerate() {
            let u = b[0] * piece.values[0] + b[1] * piece.values[1] + b[2] * piece.values[2];
            let wts = match cached {
                Some(t) => self.per_triangle[t][q],
                None => weights(&self.field, at(&piece.points, *b)),
            };
            let base = w * area * u * u;
            for j in 0..7 {
                out[j] += base * wts[j];
            }
        }
        out
    }
}

/// Class membership of one nodal domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DomainClass {
    pub bulk: bool,
    pub boundary: bool,
    pub corner: bool,
    pub neck: bool,
}

impl DomainClass {
    pub fn any(&self) -> bool {
        self.bulk || self.boundary || self.corner || self.neck
    }

    /// Bit mask, bulk = 1, boundary = 2, corner = 4, neck = 8.
    pub fn mask(&self) -> u8 {
        self.bulk as u8 | (self.boundary as u8) << 1 | (self.corner as u8) << 2 | (self.neck as u8) << 3
    }
}

/// Class counts of one eigenfunction.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCounts {
    pub nu: usize,
    /// Bulk, boundary, corner and neck counts.
    pub counts: [usize; 4],
    pub classes: Vec<DomainClass>,
    /// Per domain: `‖u_j‖²/‖u‖²` for `j = 0..4`, then the `u_4` fractions on pieces and
    /// necks.
    pub fractions: Vec<[f64; 7]>,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Classifies every domain of `decomp`. `index` only labels a classification gap.
pub fn classify_nodal_domains(
    mesh: &TriMesh,
    decomp: &NodalDecomposition,
    cutoffs: &CutoffSamples,
    params: &ClassifierParams,
    index: usize,
) -> Result<ClassCounts> {
    let nd = decomp.domains.len();
    let mut masses = vec![[0.0; 7]; nd];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let vals = tri.map(|v| decomp.values[v]);
        for s in [1.0, -1.0] {
            let Some(d) = decomp.domain_of(*tri, s) else { continue };
            sign_pieces(pts, vals, s, |piece, whole| {
                let m = cutoffs.integrate(&piece, whole.then_some(t));
                for j in 0..7 {
                    masses[d][j] += m[j];
                }
            });
        }
    }
    let eps = params.epsilon;
    let mut counts = [0usize; 4];
    let mut classes = Vec::with_capacity(nd);
    let mut fractions = Vec::with_capacity(nd);
    for (d, m) in masses.iter().enumerate() {
        // the cutoff squares sum to one, so the total is the sum of the five shares
        let total: f64 = m[..5].iter().sum();
        let c = DomainClass {
            bulk: m[0] >= (1.0 - eps) * total,
            boundary: m[1] >= 0.25 * eps * total,
            corner: m[2] >= 0.25 * eps * total || m[5] >= 0.125 * eps * total,
            neck: m[3] >= 0.25 * eps * total || m[6] >= 0.125 * eps * total,
        };
        if !c.any() {
            return Err(ChainError::ClassificationGap { index, domain: d });
        }
        for (k, on) in [c.bulk, c.boundary, c.corner, c.neck].into_iter().enumerate() {
            counts[k] += on as usize;
        }
        classes.push(c);
        fractions.push(m.map(|v| v / total));
    }
    Ok(ClassCounts {
        nu: nd,
        counts,
        classes,
        fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{solve, BoundaryCondition};
    use crate::geometry::{realize_config, two_squares, GeometricConstants, Provenance};
    use crate::mesh::triangulate;
    use crate::nodal::{extract_nodal_domains, DEFAULT_ZERO_TOL};
    use crate::partition::{max_delta, PartitionParams};

    fn figure_constants() -> GeometricConstants {
        GeometricConstants {
            rho_star: 50.0,
            kappa_star: 0.0,
            delta_star: 1.0 / 40.0,
            tau_star: 1.0,
            w_star: 1.0,
            a_star: 8.0,
            l_star: 20.0,
            provenance: Provenance::UserSupplied,
        }
    }

    #[test]
    fn quadrature_is_exact_for_quintics() {
        let wsum: f64 = QUAD.iter().map(|q| q.1).sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        // ∫ x^2 y^3 over the unit right triangle is 2! 3! / 7! = 1/420
        let p = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let s: f64 = QUAD.iter().map(|(b, w)| {
            let x = at(&p, *b);
            w * 0.5 * x.x.powi(2) * x.y.powi(3)
        }).sum();
        assert!((s - 1.0 / 420.0).abs() < 1e-14);
    }

    #[test]
    fn delta_is_capped() {
        let p = ClassifierParams::new(0.1, 0.375, 9.0, 100.0, 0.02).unwrap();
        assert!(p.capped && p.delta == 0.02);
        let q = ClassifierParams::new(0.1, 0.375, 1.0, 1e12, 0.02).unwrap();
        assert!(!q.capped && (q.delta - 10f64.powf(-4.5)).abs() < 1e-12);
        assert!(ClassifierParams::new(0.6, 0.375, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn thin_neck_domains_are_classified() {
        let dom = realize_config(&two_squares(0.02), 0.05).unwrap();
        let mesh = triangulate(&dom, 0.05).unwrap();
        let consts = figure_constants();
        let spec = solve(&mesh, BoundaryCondition::Neumann, 12, 0).unwrap();
        let params = PartitionParams::new(&dom, &consts, max_delta(&dom, &consts)).unwrap();
        let field = CutoffField::new(&dom, &params);
        let samples = CutoffSamples::new(&mesh, field);
        for (k, pair) in spec.pairs.iter().enumerate().skip(1) {
            let decomp = extract_nodal_domains(&mesh, &pair.coeffs, DEFAULT_ZERO_TOL).unwrap();
            let cp = ClassifierParams::new(0.1, 0.375, mesh.area(), pair.mu, params.delta).unwrap();
            let cc = classify_nodal_domains(&mesh, &decomp, &samples, &cp, k + 1).unwrap();
            assert!(cc.total() >= cc.nu);
            for f in &cc.fractions {
                assert!((f[..5].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((f[5] + f[6] - f[4]).abs() < 1e-12);
            }
        }
    }
}
