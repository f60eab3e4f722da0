//! Dirichlet regions on a flat cylinder `R/(P Z) x R` and the Faber-Krahn type area bound.

use std::f64::consts::PI;

use serde::Serialize;

use super::{unit_disc_eigenvalue, BoundReport};
use crate::error::{ChainError, Result};
use crate::fem::{solve, solve_dofs, BoundaryCondition, DofMap};
use crate::geometry::{disc, point::signed_area, realize_config, Arc, DomainConfig, PieceSpec, Point, WidthFamily};
use crate::mesh::{rectangle_mesh, triangulate};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CylinderShape {
    /// `{0 ≤ y ≤ height}`, wrapping once around the cylinder.
    Band { height: f64 },
    Disc { center: Point, radius: f64 },
    /// Simple counter-clockwise polygon whose horizontal extent is below the circumference,
    /// so it embeds in the cylinder without overlap.
    Polygon { points: Vec<Point> },
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderRegion {
    pub circumference: f64,
    pub shape: CylinderShape,
}

impl CylinderRegion {
    pub fn new(circumference: f64, shape: CylinderShape) -> Result<CylinderRegion> {
        if !(circumference > 0.0) {
            return Err(ChainError::Param(format!("circumference {circumference} must be positive")));
        }
        let fits = match &shape {
            CylinderShape::Band { height } => *height > 0.0,
            CylinderShape::Disc { radius, .. } => *radius > 0.0 && 2.0 * radius < circumference,
            CylinderShape::Polygon { points } => {
                let (lo, hi) = points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.x), a.1.max(p.x)));
                points.len() >= 3 && hi - lo < circumference && signed_area(points) > 0.0
            }
        };
        if !fits {
            return Err(ChainError::Param("region does not embed in the cylinder".into()));
        }
        Ok(CylinderRegion { circumference, shape })
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            CylinderShape::Band { height } => self.circumference * height,
            CylinderShape::Disc { radius, .. } => PI * radius * radius,
            CylinderShape::Polygon { points } => signed_area(points),
        }
    }

    /// First Dirichlet eigenvalue by P1 elements at mesh size about `h`. Bands use a
    /// structured mesh whose left and right columns are identified.
    pub fn first_eigenvalue(&self, h: f64) -> Result<f64> {
        let piece = match &self.shape {
            CylinderShape::Band { height } => {
                let p = self.circumference;
                let nx = ((p / h).ceil() as usize).max(3);
                let ny = ((height / h).ceil() as usize).max(2);
                let mesh = rectangle_mesh(0.0, 0.0, p, *height, nx, ny)?;
                let row = nx + 1;
                let eliminated: Vec<bool> = (0..mesh.num_vertices()).map(|v| v / row == 0 || v / row == ny).collect();
                let seam: Vec<(usize, usize)> = (0..=ny).map(|j| (j * row, j * row + nx)).collect();
                let dofs = DofMap::new(mesh.num_vertices(), &eliminated, &seam);
                let spec = solve_dofs(&mesh, &dofs, BoundaryCondition::Dirichlet, 1, 0)?;
                return Ok(spec.pairs[0].mu);
            }
            CylinderShape::Disc { center, radius } => disc(*center, *radius),
            CylinderShape::Polygon { points } => PieceSpec {
                arcs: (0..points.len())
                    .map(|k| Arc::Segment {
                        from: points[k],
                        to: points[(k + 1) % points.len()],
                    })
                    .collect(),
            },
        };
        let cfg = DomainConfig {
            pieces: vec![piece],
            necks: vec![],
            widths: WidthFamily::default(),
            constants: None,
        };
        let dom = realize_config(&cfg, h)?;
        let mesh = triangulate(&dom, h)?;
        let spec = solve(&mesh, BoundaryCondition::Dirichlet, 1, 0)?;
        Ok(spec.pairs[0].mu)
    }
}

/// Checks `Area ≥ min{π j² / λ, P j / √λ}` and logs the conjectured sharper
/// `Area ≥ min{π j² / λ, P π / √λ}` together with its band branch `P π / √λ` alone.
/// Returns `λ` and the three reports.
pub fn cylinder_fk_check(region: &CylinderRegion, h: f64, context: &str) -> Result<(f64, Vec<BoundReport>)> {
    let lambda = region.first_eigenvalue(h)?;
    let disc = unit_disc_eigenvalue();
    let p = region.circumference;
    let area = region.area();
    let proven = (PI * disc / lambda).min(p * disc.sqrt() / lambda.sqrt());
    let conjectured = (PI * disc / lambda).min(p * PI / lambda.sqrt());
    let ctx = format!("{context} P={p}");
    Ok((
        lambda,
        vec![
            BoundReport::new("cylinder_fk", ctx.clone(), proven, area),
            BoundReport::new("cylinder_fk_conjecture", ctx.clone(), conjectured, area).logged(),
            BoundReport::new("cylinder_band_branch", ctx, p * PI / lambda.sqrt(), area).logged(),
        ],
    ))
}

/// Star-shaped polygon `r(θ) = r0 (1 + Σ a_k cos(k θ + φ_k))` with `n` vertices; `modes`
/// lists `(a_k, φ_k)` for `k = 2, 3, …`.
pub fn star_polygon(center: Point, r0: f64, modes: &[(f64, f64)], n: usize) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / n as f64;
            let bump: f64 = modes
                .iter()
                .enumerate()
                .map(|(k, &(a, ph))| a * ((k + 2) as f64 * th + ph).cos())
                .sum();
            center + Point::new(th.cos(), th.sin()) * (r0 * (1.0 + bump))
        })
        .collect()
}
