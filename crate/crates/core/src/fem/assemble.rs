//! P1 stiffness and consistent mass matrices.

use rayon::prelude::*;

use super::sparse::SparseSym;
use crate::error::{ChainError, Result};
use crate::geometry::Point;
use crate::mesh::TriMesh;

/// Element stiffness matrix `int grad(phi_i) . grad(phi_j)` of a P1 triangle.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    // edge opposite vertex i, rotated, is 2 * area * grad(phi_i)
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e[i].dot(e[j]) / (4.0 * area);
        }
    }
    k
}

/// Element mass matrix `int phi_i phi_j` of a P1 triangle.
pub fn element_mass(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Maps mesh vertices to unknowns. Eliminated vertices (Dirichlet) carry no unknown;
/// identified vertices (periodic seams) share one.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub of_vertex: Vec<Option<usize>>,
    pub count: usize,
}

impl DofMap {
    pub fn identity(vertices: usize) -> DofMap {
        DofMap {
            of_vertex: (0..vertices).map(Some).collect(),
            count: vertices,
        }
    }

    /// Every boundary vertex eliminated.
    pub fn dirichlet(mesh: &TriMesh) -> DofMap {
        let eliminated = mesh.is_boundary_vertex();
        DofMap::new(mesh.num_vertices(), &eliminated, &[])
    }

    /// General map: `eliminated[v]` removes vertex `v`; each pair `(a, b)` makes `b` share
    /// the unknown of `a`. Elimination wins over identification.
    pub fn new(vertices: usize, eliminated: &[bool], identify: &[(usize, usize)]) -> DofMap {
        let mut root: Vec<usize> = (0..vertices).collect();
        fn find(root: &mut [usize], mut v: usize) -> usize {
            while root[v] != v {
                root[v] = root[root[v]];
                v = root[v];
            }
            v
        }
        for &(a, b) in identify {
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            if ra != rb {
                root[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut dead = vec![false; vertices];
        for v in 0..vertices {
            if eliminated[v] {
                let r = find(&mut root, v);
                dead[r] = true;
            }
        }
        let mut number = vec![usize::MAX; vertices];
        let mut count = 0;
        let mut of_vertex = vec![None; vertices];
        for v in 0..vertices {
            let r = find(&mut root, v);
            if dead[r] {
                continue;
            }
            if number[r] == usize::MAX {
                number[r] = count;
                count += 1;
            }
            of_vertex[v] = Some(number[r]);
        }
        DofMap { of_vertex, count }
    }

    /// Vertex values of a vector of unknowns (zero on eliminated vertices).
    pub fn expand(&self, dofs: &[f64]) -> Vec<f64> {
        self.of_vertex.iter().map(|d| d.map_or(0.0, |k| dofs[k])).collect()
    }

    /// One representative vertex per unknown.
    pub fn representatives(&self) -> Vec<usize> {
        let mut rep = vec![usize::MAX; self.count];
        for (v, d) in self.of_vertex.iter().enumerate() {
            if let Some(k) = *d {
                if rep[k] == usize::MAX {
                    rep[k] = v;
                }
            }
        }
        rep
    }
}

/// Global `(K, M)` over all vertices.
pub fn assemble(mesh: &TriMesh) -> Result<(SparseSym, SparseSym)> {
    assemble_dofs(mesh, &DofMap::identity(mesh.num_vertices()))
}

/// Global `(K, M)` over the unknowns of `dofs`.
pub fn assemble_dofs(mesh: &TriMesh, dofs: &DofMap) -> Result<(SparseSym, SparseSym)> {
    let total = mesh.area();
    let floor = 1e-14 * total;
    let elements: Vec<([[f64; 3]; 3], [[f64; 3]; 3])> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let p = mesh.triangle_points(t);
            (element_stiffness(p), element_mass(p))
        })
        .collect();
    for t in 0..mesh.num_triangles() {
        let a = mesh.triangle_area(t);
        if !(a > floor) {
            return Err(ChainError::Assembly(format!("triangle {t} has area {a:e}")));
        }
    }
    let mut kt = Vec::with_capacity(9 * elements.len());
    let mut mt = Vec::with_capacity(9 * elements.len());
    for (t, (ke, me)) in elements.iter().enumerate() {
        let d = mesh.triangles[t].map(|v| dofs.of_vertex[v]);
        for i in 0..3 {
            let Some(di) = d[i] else { continue };
            for j in 0..3 {
                let Some(dj) = d[j] else { continue };
                kt.push((di, dj, ke[i][j]));
                mt.push((di, dj, me[i][j]));
            }
        }
    }
    Ok((SparseSym::from_triplets(dofs.count, &kt), SparseSym::from_triplets(dofs.count, &mt)))
}
