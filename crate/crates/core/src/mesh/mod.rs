//! Triangle meshes of realized domains.

mod triangulate;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ChainError, Result};
use crate::geometry::{EdgeTag, Point};

pub use triangulate::{rectangle_mesh, triangulate, MIN_ANGLE_DEG, FALLBACK_ANGLE_DEG};

const NONE: usize = usize::MAX;

/// A boundary edge, oriented with the domain on its left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: EdgeTag,
}

/// Conforming P1 triangulation.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Mesh vertices sitting on corners of the domain.
    pub corner_vertices: Vec<usize>,
    pub h_max: f64,
    /// Smallest interior angle, degrees.
    pub min_angle: f64,
    /// Set when the quality target had to be lowered to [`FALLBACK_ANGLE_DEG`].
    pub quality_fallback: bool,
    /// `neighbors[t][k]`: triangle across the edge opposite local vertex `k`.
    neighbors: Vec<[usize; 3]>,
    locator: Locator,
}

/// Result of point location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub triangle: usize,
    pub bary: [f64; 3],
}

#[derive(Clone, Debug)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
}

impl TriMesh {
    /// Assembles a mesh from raw arrays. `tag_of` labels each boundary edge from its end
    /// vertex indices and positions.
    pub fn from_parts(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        corner_vertices: Vec<usize>,
        quality_fallback: bool,
        tag_of: impl Fn([usize; 2], [Point; 2]) -> EdgeTag,
    ) -> Result<TriMesh> {
        if triangles.is_empty() {
            return Err(ChainError::Mesh("no triangles".into()));
        }
        for tri in &mut triangles {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(ChainError::Mesh("triangle references a missing vertex".into()));
            }
            let [a, b, c] = *tri;
            if (vertices[b] - vertices[a]).cross(vertices[c] - vertices[a]) < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(3 * triangles.len());
        let mut neighbors = vec![[NONE; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                match edges.get(&key) {
                    None => {
                        edges.insert(key, (t, k));
                    }
                    Some(&(u, j)) => {
                        if neighbors[u][j] != NONE {
                            return Err(ChainError::Mesh(format!("edge {a}-{b} shared by three triangles")));
                        }
                        if (triangles[u][(j + 1) % 3], triangles[u][(j + 2) % 3]) != (b, a) {
                            return Err(ChainError::Mesh(format!("inconsistent orientation at edge {a}-{b}")));
                        }
                        neighbors[u][j] = t;
                        neighbors[t][k] = u;
                    }
                }
            }
        }
        let mut boundary_edges = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                if neighbors[t][k] == NONE {
                    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    boundary_edges.push(BoundaryEdge {
                        a,
                        b,
                        tag: tag_of([a, b], [vertices[a], vertices[b]]),
                    });
                }
            }
        }
        let mut h_max: f64 = 0.0;
        let mut min_angle = f64::INFINITY;
        for tri in &triangles {
            let p = tri.map(|v| vertices[v]);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                h_max = h_max.max(a.dist(b));
                let (u, v) = (b - a, c - a);
                min_angle = min_angle.min(u.cross(v).atan2(u.dot(v)).to_degrees());
            }
        }
        let locator = Locator::new(&vertices, &triangles);
        Ok(TriMesh {
            vertices,
            triangles,
            boundary_edges,
            corner_vertices,
            h_max,
            min_angle,
            quality_fallback,
            neighbors,
            locator,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn neighbors(&self, t: usize) -> [Option<usize>; 3] {
        self.neighbors[t].map(|n| (n != NONE).then_some(n))
    }

    pub fn num_edges(&self) -> usize {
        (3 * self.triangles.len() + self.boundary_edges.len()) / 2
    }

    /// `V - E + F` counting triangles only; a connected mesh with `k` holes gives `1 - k`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.num_edges() as i64 + self.triangles.len() as i64
    }

    /// Number of closed boundary curves.
    pub fn boundary_loops(&self) -> usize {
        let next: HashMap<usize, usize> = self.boundary_edges.iter().map(|e| (e.a, e.b)).collect();
        let mut seen = vec![false; self.vertices.len()];
        let mut loops = 0;
        for e in &self.boundary_edges {
            if seen[e.a] {
                continue;
            }
            loops += 1;
            let mut v = e.a;
            while !seen[v] {
                seen[v] = true;
                v = next[&v];
            }
        }
        loops
    }

    pub fn is_boundary_vertex(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            out[e.a] = true;
            out[e.b] = true;
        }
        out
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let det = (b - a).cross(c - a);
        let l1 = (p - a).cross(c - a) / det;
        let l2 = (b - a).cross(p - a) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: Point) -> Result<Location> {
        let tol = 1e-12;
        let mut t = self.locator.start(p);
        for _ in 0..self.triangles.len() + 3 {
            let bary = self.barycentric(t, p);
            let (k, worst) = bary
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
            if worst >= -tol {
                return Ok(Location {
                    triangle: t,
                    bary: clamp_bary(bary),
                });
            }
            match self.neighbors[t][k] {
                NONE => break,
                n => t = n,
            }
        }
        // the walk left a non-convex domain; scan everything
        let scale = self.h_max.max(1e-300);
        let mut best = (0, f64::NEG_INFINITY, [0.0; 3]);
        for t in 0..self.triangles.len() {
            let bary = self.barycentric(t, p);
            let [a, b, c] = self.triangle_points(t);
            // convert the most negative coordinate into a distance-like quantity
            let heights = [
                2.0 * self.triangle_area(t) / b.dist(c),
                2.0 * self.triangle_area(t) / c.dist(a),
                2.0 * self.triangle_area(t) / a.dist(b),
            ];
            let slack = (0..3).map(|k| bary[k] * heights[k]).fold(f64::INFINITY, f64::min);
            if slack > best.1 {
                best = (t, slack, bary);
            }
        }
        if best.1 >= -1e-6 * scale {
            Ok(Location {
                triangle: best.0,
                bary: clamp_bary(best.2),
            })
        } else {
            Err(ChainError::OutsideDomain(p))
        }
    }

    /// Value at `p` of the P1 function with vertex values `coeffs`.
    pub fn interpolate(&self, coeffs: &[f64], p: Point) -> Result<f64> {
        let loc = self.locate(p)?;
        let tri = self.triangles[loc.triangle];
        Ok((0..3).map(|k| loc.bary[k] * coeffs[tri[k]]).sum())
    }

    /// Uniform red refinement: every triangle split into four by its edge midpoints.
    pub fn refine(&self) -> TriMesh {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.num_edges());
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(vertices[a].lerp(vertices[b], 0.5));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let tags: HashMap<(usize, usize), EdgeTag> = self
            .boundary_edges
            .iter()
            .flat_map(|e| {
                let m = mid[&(e.a.min(e.b), e.a.max(e.b))];
                [((e.a, m), e.tag), ((m, e.b), e.tag)]
            })
            .collect();
        TriMesh::from_parts(vertices, triangles, self.corner_vertices.clone(), self.quality_fallback, |[a, b], _| {
            tags[&(a, b)]
        })
        .expect("red refinement of a valid mesh is valid")
    }

    /// OFF text: header, counts, vertex lines, face lines.
    pub fn to_off(&self) -> String {
        let mut s = String::with_capacity(40 * (self.vertices.len() + self.triangles.len()));
        s.push_str("OFF\n");
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.triangles.len(), self.num_edges());
        for p in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e} 0", p.x, p.y);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn write_off(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_off())?;
        Ok(())
    }
}

fn clamp_bary(b: [f64; 3]) -> [f64; 3] {
    let c = b.map(|v| v.clamp(0.0, 1.0));
    let s: f64 = c.iter().sum();
    c.map(|v| v / s)
}

impl Locator {
    fn new(vertices: &[Point], triangles: &[[usize; 3]]) -> Locator {
        let (mut lo, mut hi) = (vertices[0], vertices[0]);
        for p in vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let side = ((triangles.len() as f64).sqrt() / 2.0).ceil().max(1.0);
        let cell = ((hi.x - lo.x).max(hi.y - lo.y) / side).max(1e-300);
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut start = vec![NONE; nx * ny];
        let mut best = vec![f64::INFINITY; nx * ny];
        for (t, tri) in triangles.iter().enumerate() {
            let c = (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) * (1.0 / 3.0);
            let i = (((c.x - lo.x) / cell) as usize).min(nx - 1);
            let j = (((c.y - lo.y) / cell) as usize).min(ny - 1);
            let centre = lo + Point::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
            let d = c.dist(centre);
            if d < best[j * nx + i] {
                best[j * nx + i] = d;
                start[j * nx + i] = t;
            }
        }
        // empty cells borrow from the previous filled one in scan order
        let mut last = start.iter().copied().find(|&t| t != NONE).unwrap_or(0);
        for s in &mut start {
            if *s == NONE {
                *s = last;
            } else {
                last = *s;
            }
        }
        Locator {
            origin: lo,
            cell,
            nx,
            ny,
            start,
        }
    }

    fn start(&self, p: Point) -> usize {
        let i = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        self.start[j * self.nx + i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_triangle_square() -> TriMesh {
        rectangle_mesh(0.0, 0.0, 1.0, 1.0, 1, 1).unwrap()
    }

    #[test]
    fn red_refinement_quadruples() {
        let m = two_triangle_square();
        assert_eq!(m.num_triangles(), 2);
        let r = m.refine();
        assert_eq!(r.num_triangles(), 8);
        assert!((r.area() - 1.0).abs() < 1e-15);
        assert!((r.h_max - 0.5 * m.h_max).abs() < 1e-15);
        let rr = r.refine();
        assert_eq!(rr.num_triangles(), 32);
        assert_eq!(rr.boundary_edges.len(), 16);
        assert_eq!(rr.euler_characteristic(), 1);
    }

    #[test]
    fn red_refinement_keeps_angles() {
        let m = TriMesh::from_parts(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.1), Point::new(0.3, 0.7)],
            vec![[0, 1, 2]],
            vec![],
            false,
            |_, _| EdgeTag::Side { piece: 0 },
        )
        .unwrap();
        let r = m.refine();
        assert!((r.min_angle - m.min_angle).abs() < 1e-12);
        assert!(r.boundary_edges.iter().all(|e| e.tag == EdgeTag::Side { piece: 0 }));
    }

    #[test]
    fn centroid_and_vertex_location() {
        let m = rectangle_mesh(0.0, 0.0, 2.0, 1.0, 4, 3).unwrap();
        for t in 0..m.num_triangles() {
            let [a, b, c] = m.triangle_points(t);
            let loc = m.locate((a + b + c) * (1.0 / 3.0)).unwrap();
            assert_eq!(loc.triangle, t);
            for v in loc.bary {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let loc = m.locate(m.vertices[7]).unwrap();
        assert!(m.triangles[loc.triangle].contains(&7));
        assert!(loc.bary.iter().any(|v| (v - 1.0).abs() < 1e-12));
        assert!(matches!(m.locate(Point::new(3.0, 0.5)), Err(ChainError::OutsideDomain(_))));
    }

    #[test]
    fn random_points_land_in_their_triangle() {
        let m = rectangle_mesh(-1.0, -1.0, 1.0, 1.0, 9, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let loc = m.locate(p).unwrap();
            let [a, b, c] = m.triangle_points(loc.triangle);
            for (u, v) in [(a, b), (b, c), (c, a)] {
                assert!((v - u).cross(p - u) >= -1e-14);
            }
            let brute = (0..m.num_triangles())
                .filter(|&t| m.barycentric(t, p).iter().all(|&x| x >= -1e-12))
                .count();
            assert!(brute >= 1);
            assert!((loc.bary.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn off_export_has_counts() {
        let m = two_triangle_square();
        let off = m.to_off();
        let mut lines = off.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("4 2 5"));
        assert_eq!(off.lines().count(), 2 + 4 + 2);
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let m = rectangle_mesh(0.0, 0.0, 1.0, 1.0, 5, 5).unwrap();
        let f = |p: Point| 2.0 * p.x - 3.0 * p.y + 0.5;
        let coeffs: Vec<f64> = m.vertices.iter().map(|&p| f(p)).collect();
        let p = Point::new(0.37, 0.81);
        assert!((m.interpolate(&coeffs, p).unwrap() - f(p)).abs() < 1e-13);
    }
}
