//! Constrained Delaunay meshing with angle and size refinement.

use std::collections::{HashMap, HashSet};

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::TriMesh;
use crate::error::{ChainError, Result};
use crate::geometry::{EdgeTag, Point, RealizedDomain};

/// Quality target for interior angles, degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;
/// Target used when [`MIN_ANGLE_DEG`] cannot be reached.
pub const FALLBACK_ANGLE_DEG: f64 = 15.0;

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

/// Meshes a realized domain with triangles of edge length at most `h`.
///
/// Every boundary node is a mesh vertex. Necks whose rails were sampled finer than `h` get
/// correspondingly graded elements, so thin necks are resolved without shrinking `h`
/// globally.
pub fn triangulate(dom: &RealizedDomain, h: f64) -> Result<TriMesh> {
    if !(h.is_finite() && h > 0.0) {
        return Err(ChainError::Param(format!("mesh size {h} must be positive")));
    }
    if let Some(p) = crate::geometry::first_self_intersection(&dom.loops) {
        return Err(ChainError::Geometry(format!(
            "boundary self-intersects near ({:.6}, {:.6})",
            p.x, p.y
        )));
    }
    match build(dom, h, MIN_ANGLE_DEG) {
        Ok(m) if m.min_angle >= MIN_ANGLE_DEG - 1e-9 => Ok(m),
        _ => {
            let mut m = build(dom, h, FALLBACK_ANGLE_DEG)?;
            m.quality_fallback = true;
            Ok(m)
        }
    }
}

fn build(dom: &RealizedDomain, h: f64, angle: f64) -> Result<TriMesh> {
    let mut points = Vec::new();
    let mut edges = Vec::new();
    for lp in &dom.loops {
        let base = points.len();
        let n = lp.len();
        for (k, p) in lp.iter().enumerate() {
            points.push(Point2::new(p.x, p.y));
            edges.push([base + k, base + (k + 1) % n]);
        }
    }
    let nb = points.len();
    let mut conflict = false;
    let mut cdt = Cdt::try_bulk_load_cdt(points, edges, |_| conflict = true)
        .map_err(|e| ChainError::Mesh(format!("triangulation failed: {e:?}")))?;
    if conflict || cdt.num_vertices() != nb {
        return Err(ChainError::Geometry("boundary polyline overlaps itself".into()));
    }

    // an equilateral triangle of side h has this area; the loop below shrinks it until the
    // longest edge obeys h
    let mut max_area = 0.25 * 3f64.sqrt() * h * h;
    let budget = (40.0 * dom.area / max_area) as usize + 20 * nb + 1000;
    let mut attempt = 0;
    loop {
        let params = RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(angle + 0.5))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget)
            .exclude_outer_faces(true);
        let result = cdt.refine(params);
        if !result.refinement_complete {
            return Err(ChainError::Mesh(format!(
                "refinement ran out of vertices at {angle} degrees"
            )));
        }
        let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();
        let (vertices, triangles) = extract(&cdt, &excluded);
        let longest = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| vertices[a].dist(vertices[b]))
            .fold(0.0, f64::max);
        attempt += 1;
        if longest <= h * (1.0 + 1e-9) || attempt > 8 {
            return assemble(dom, vertices, triangles, nb);
        }
        max_area *= 0.5;
    }
}

fn extract(cdt: &Cdt, excluded: &HashSet<usize>) -> (Vec<Point>, Vec<[usize; 3]>) {
    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let triangles = cdt
        .inner_faces()
        .filter(|f| !excluded.contains(&f.fix().index()))
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    (vertices, triangles)
}

fn assemble(dom: &RealizedDomain, vertices: Vec<Point>, triangles: Vec<[usize; 3]>, nb: usize) -> Result<TriMesh> {
    // drop vertices not used by any inner triangle (steiner points outside the domain)
    let mut used = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::with_capacity(vertices.len());
    let mut order: Vec<usize> = (0..nb).collect();
    let mut touched = vec![false; vertices.len()];
    for t in &triangles {
        for &v in t {
            touched[v] = true;
        }
    }
    order.extend((nb..vertices.len()).filter(|&v| touched[v]));
    for v in order {
        used[v] = kept.len();
        kept.push(vertices[v]);
    }
    let triangles: Vec<[usize; 3]> = triangles.into_iter().map(|t| t.map(|v| used[v])).collect();

    let by_bits: HashMap<(u64, u64), usize> = kept[..nb]
        .iter()
        .enumerate()
        .map(|(k, p)| ((p.x.to_bits(), p.y.to_bits()), k))
        .collect();
    let corner_vertices = dom
        .corners
        .iter()
        .filter_map(|c| by_bits.get(&(c.point.x.to_bits(), c.point.y.to_bits())).copied())
        .collect();

    let mesh = TriMesh::from_parts(kept, triangles, corner_vertices, false, |_, [a, b]| {
        let near = dom.nearest_boundary(a.lerp(b, 0.5));
        dom.segment_tag(near.segment)
    })?;
    let rel = (mesh.area() - dom.area).abs() / dom.area;
    if rel > 1e-9 {
        return Err(ChainError::Mesh(format!(
            "triangle areas sum to {} but the domain has area {}",
            mesh.area(),
            dom.area
        )));
    }
    Ok(mesh)
}

/// Structured mesh of `[x0, x1] x [y0, y1]` with `nx * ny` cells, each cut along its
/// rising diagonal. Boundary edges are tagged as sides of piece 0.
pub fn rectangle_mesh(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<TriMesh> {
    if nx == 0 || ny == 0 || !(x1 > x0 && y1 > y0) {
        return Err(ChainError::Param("rectangle mesh needs a proper box and at least one cell".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let corners = vec![id(0, 0), id(nx, 0), id(nx, ny), id(0, ny)];
    TriMesh::from_parts(vertices, triangles, corners, false, |_, _| EdgeTag::Side { piece: 0 })
}
