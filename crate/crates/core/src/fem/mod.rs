//! P1 finite elements for the Laplacian: assembly, eigenpairs, counting functions and
//! Rayleigh quotients on subregions.

mod assemble;
mod cholesky;
mod lanczos;
mod sparse;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{ChainError, Result};
use crate::mesh::TriMesh;

pub use assemble::{assemble, assemble_dofs, element_mass, element_stiffness, DofMap};
pub use cholesky::Cholesky;
pub use lanczos::{eigs, normalize_sign, residual, EigenOptions, RawEigen};
pub use sparse::SparseSym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

/// An eigenvalue with its `M`-normalized vertex coefficients.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub mu: f64,
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

/// Ascending eigenpairs of a discrete Laplacian on one mesh.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub bc: BoundaryCondition,
    /// False when the solver stopped before every residual met its target.
    pub converged: bool,
    pub vertices: usize,
    pub triangles: usize,
    pub h_max: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.mu).collect()
    }

    pub fn largest(&self) -> f64 {
        self.pairs.last().map_or(f64::NEG_INFINITY, |p| p.mu)
    }

    /// `index, eigenvalue, residual` rows (1-based index).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,residual\n");
        for (k, p) in self.pairs.iter().enumerate() {
            let _ = writeln!(s, "{},{:.15e},{:.3e}", k + 1, p.mu, p.residual);
        }
        s
    }

    /// Coefficient vectors as little-endian `f64`, preceded by the dimension and count as
    /// little-endian `u64`.
    pub fn write_vectors(&self, path: &Path) -> Result<()> {
        let dim = self.pairs.first().map_or(0, |p| p.coeffs.len());
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(&(dim as u64).to_le_bytes())?;
        out.write_all(&(self.pairs.len() as u64).to_le_bytes())?;
        for p in &self.pairs {
            for v in &p.coeffs {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Computes the `count` lowest eigenpairs of the Laplacian on `mesh`.
///
/// Neumann problems are shifted by `-1/area` so the pencil is definite and the constant
/// mode comes out first; Dirichlet problems drop every boundary vertex.
pub fn solve(mesh: &TriMesh, bc: BoundaryCondition, count: usize, seed: u64) -> Result<Spectrum> {
    let dofs = match bc {
        BoundaryCondition::Neumann => DofMap::identity(mesh.num_vertices()),
        BoundaryCondition::Dirichlet => DofMap::dirichlet(mesh),
    };
    solve_dofs(mesh, &dofs, bc, count, seed)
}

/// As [`solve`] on an arbitrary unknown map; `bc` only labels the result and picks the
/// shift (zero for Dirichlet, where the pencil is already definite).
pub fn solve_dofs(mesh: &TriMesh, dofs: &DofMap, bc: BoundaryCondition, count: usize, seed: u64) -> Result<Spectrum> {
    if dofs.count == 0 {
        return Err(ChainError::Solver("no unknowns".into()));
    }
    let (k, m) = assemble_dofs(mesh, dofs)?;
    let area = mesh.area();
    let shift = match bc {
        BoundaryCondition::Neumann => -1.0 / area,
        BoundaryCondition::Dirichlet => 0.0,
    };
    let coords: Vec<_> = dofs.representatives().iter().map(|&v| mesh.vertices[v]).collect();
    let opts = EigenOptions::new(count, shift, 1.0 / area, seed);
    let raw = eigs(&k, &m, &coords, &opts)?;
    let pairs = raw
        .values
        .iter()
        .zip(&raw.vectors)
        .zip(&raw.residuals)
        .map(|((&mu, x), &r)| EigenPair {
            // both pencils are semidefinite; a negative value is rounding of the zero mode
            mu: mu.max(0.0),
            coeffs: dofs.expand(x),
            residual: r,
        })
        .collect();
    Ok(Spectrum {
        pairs,
        bc,
        converged: raw.converged,
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        h_max: mesh.h_max,
    })
}

/// `#{k : mu_k < mu}` with multiplicity.
pub fn counting_function(spec: &Spectrum, mu: f64) -> Result<usize> {
    if mu > spec.largest() {
        return Err(ChainError::Truncation {
            requested: mu,
            largest: spec.largest(),
        });
    }
    Ok(spec.pairs.iter().filter(|p| p.mu < mu).count())
}

/// Dirichlet energy, mass and their ratio of a P1 function restricted to a set of
/// triangles.
pub fn rayleigh_on_region(mesh: &TriMesh, coeffs: &[f64], region: &[usize]) -> Result<(f64, f64, f64)> {
    let (mut energy, mut mass) = (0.0, 0.0);
    for &t in region {
        let p = mesh.triangle_points(t);
        let u = mesh.triangles[t].map(|v| coeffs[v]);
        let (ke, me) = (element_stiffness(p), element_mass(p));
        for i in 0..3 {
            for j in 0..3 {
                energy += u[i] * ke[i][j] * u[j];
                mass += u[i] * me[i][j] * u[j];
            }
        }
    }
    if !(mass > 0.0) {
        return Err(ChainError::DegenerateRegion);
    }
    Ok((energy, mass, energy / mass))
}
