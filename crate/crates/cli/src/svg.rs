//! Sign plots of eigenfunctions as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use chainlab::geometry::Point;
use chainlab::mesh::TriMesh;
use chainlab::nodal::{sign_pieces, NodalDecomposition};

pub const POSITIVE_FILL: &str = "#d6604d";
pub const NEGATIVE_FILL: &str = "#4393c3";

const WIDTH_PX: f64 = 800.0;
const MARGIN_PX: f64 = 10.0;

struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(mesh: &TriMesh) -> Frame {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in &mesh.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(1e-300);
        let scale = (WIDTH_PX - 2.0 * MARGIN_PX) / span;
        Frame {
            x0: lo.x,
            y1: hi.y,
            scale,
            height: (hi.y - lo.y) * scale + 2.0 * MARGIN_PX,
        }
    }

    fn put(&self, s: &mut String, cmd: char, p: Point) {
        let x = MARGIN_PX + (p.x - self.x0) * self.scale;
        let y = MARGIN_PX + (self.y1 - p.y) * self.scale;
        let _ = write!(s, "{cmd}{x:.2} {y:.2}");
    }
}

/// Zero-level segment of the linear interpolant on one triangle, if the triangle is cut.
fn zero_segment(p: [Point; 3], v: [f64; 3]) -> Option<(Point, Point)> {
    let mut hits: Vec<Point> = Vec::with_capacity(3);
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        if v[a] == 0.0 {
            hits.push(p[a]);
        } else if v[a] * v[b] < 0.0 {
            hits.push(p[a].lerp(p[b], v[a] / (v[a] - v[b])));
        }
    }
    // a fully zero triangle or a single touching vertex draws nothing
    (hits.len() == 2 && v.iter().any(|&x| x != 0.0)).then(|| (hits[0], hits[1]))
}

/// SVG with the positive and negative sets filled, nodal lines and the outline stroked.
/// Output is a pure function of the inputs.
pub fn render_svg(mesh: &TriMesh, decomp: &NodalDecomposition, m: usize, mu: f64) -> String {
    let frame = Frame::new(mesh);
    let mut fills = [String::new(), String::new()];
    let mut lines = String::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let vals = tri.map(|v| decomp.values[v]);
        for (slot, s) in [1.0, -1.0].into_iter().enumerate() {
            if decomp.domain_of(*tri, s).is_none() {
                continue;
            }
            sign_pieces(pts, vals, s, |piece, _| {
                let path = &mut fills[slot];
                frame.put(path, 'M', piece.points[0]);
                frame.put(path, 'L', piece.points[1]);
                frame.put(path, 'L', piece.points[2]);
                path.push('Z');
            });
        }
        if let Some((a, b)) = zero_segment(pts, vals) {
            frame.put(&mut lines, 'M', a);
            frame.put(&mut lines, 'L', b);
        }
    }
    let mut outline = String::new();
    for e in &mesh.boundary_edges {
        frame.put(&mut outline, 'M', mesh.vertices[e.a]);
        frame.put(&mut outline, 'L', mesh.vertices[e.b]);
    }

    let title = format!("m={m} mu={mu:.6e} nu={}", decomp.nu);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" data-title="{title}">"#,
        w = WIDTH_PX,
        h = frame.height.ceil()
    );
    let _ = writeln!(s, "<title>{title}</title>");
    for (path, colour) in fills.iter().zip([POSITIVE_FILL, NEGATIVE_FILL]) {
        if !path.is_empty() {
            let _ = writeln!(s, r#"<path fill="{colour}" stroke="{colour}" stroke-width="0.3" d="{path}"/>"#);
        }
    }
    if !lines.is_empty() {
        let _ = writeln!(s, r#"<path class="nodal" fill="none" stroke="black" stroke-width="1.2" d="{lines}"/>"#);
    }
    let _ = writeln!(s, r#"<path class="outline" fill="none" stroke="black" stroke-width="1.5" d="{outline}"/>"#);
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(path: &Path, mesh: &TriMesh, decomp: &NodalDecomposition, m: usize, mu: f64) -> std::io::Result<()> {
    std::fs::write(path, render_svg(mesh, decomp, m, mu))
}
