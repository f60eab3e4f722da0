//! Realization of a chain domain: pieces with neck mouths cut out, joined by neck rails.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Serialize;

use super::index::{Nearest, SegmentIndex};
use super::point::{closed_length, segment_distance, signed_area, turn_angle, Point};
use super::spec::{DomainConfig, Homotopy, NeckSpec, PieceSpec, WidthFamily, VERTEX_ANGLE_TOL};
use crate::error::{ChainError, Result};

/// Origin of a boundary edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeTag {
    Side { piece: usize },
    Rail { neck: usize, rail: usize },
}

/// What a corner of the realized boundary is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CornerKind {
    /// A vertex of a piece.
    Piece { piece: usize },
    /// Where rail `rail` (0 for `t1`, 1 for `t2`) of a neck meets the piece at end `end`
    /// (0 for `s = 0`, 1 for `s = L`).
    Junction { neck: usize, end: usize, rail: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Corner {
    pub point: Point,
    /// Interior angle in radians.
    pub angle: f64,
    pub kind: CornerKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NodeKind {
    Plain,
    Vertex(usize),
    Junction(usize, usize, usize),
}

/// A neck of the realized domain.
#[derive(Clone, Debug)]
pub struct RealizedNeck {
    pub index: usize,
    pub i: usize,
    pub j: usize,
    pub interval: (f64, f64),
    pub length: f64,
    /// `min_s |G(s, t2) - G(s, t1)|`.
    pub min_width: f64,
    /// Where the minimum width is attained.
    pub min_width_at: f64,
    pub homotopy: Homotopy,
    /// Polylines of `G(0, I)` and `G(L, I)`.
    pub mouths: [Vec<Point>; 2],
    /// Number of uniform steps in `s` used for each rail.
    pub rail_samples: usize,
}

impl RealizedNeck {
    pub fn point(&self, s: f64, t: f64) -> Point {
        self.homotopy.eval(s, t)
    }

    /// `(s, t)` of a point lying in the closed neck, `None` otherwise.
    pub fn coordinates(&self, p: Point) -> Option<(f64, f64)> {
        let (s, t) = self.homotopy.invert(p)?;
        let eps = 1e-12;
        let inside = s >= -eps * self.length
            && s <= self.length * (1.0 + eps)
            && t >= self.interval.0 - eps
            && t <= self.interval.1 + eps;
        inside.then_some((s, t))
    }

    /// Whether `p` lies in the open neck region.
    pub fn contains(&self, p: Point) -> bool {
        match self.homotopy.invert(p) {
            Some((s, t)) => s > 0.0 && s < self.length && t > self.interval.0 && t < self.interval.1,
            None => false,
        }
    }

    /// Distance from `p` to the nearer neck end and the nearest point on it.
    pub fn mouth_distance(&self, p: Point) -> (f64, Point) {
        let mut best = (f64::INFINITY, p);
        for m in &self.mouths {
            for w in m.windows(2) {
                let (d, u) = segment_distance(p, w[0], w[1]);
                if d < best.0 {
                    best = (d, w[0].lerp(w[1], u));
                }
            }
        }
        best
    }

    /// `|G(s, t2) - G(s, t1)|`.
    pub fn width_at(&self, s: f64) -> f64 {
        self.point(s, self.interval.1).dist(self.point(s, self.interval.0))
    }
}

/// A chain domain realized as closed polylines.
#[derive(Clone, Debug)]
pub struct RealizedDomain {
    /// Boundary loops, interior to the left of each (outer loop counter-clockwise).
    pub loops: Vec<Vec<Point>>,
    /// `tags[l][k]` is the origin of the edge from node `k` to node `k + 1` of loop `l`.
    pub tags: Vec<Vec<EdgeTag>>,
    pub area: f64,
    pub perimeter: f64,
    /// Boundary resolution on the pieces; rails of necks thinner than `4h` use a quarter
    /// of the neck width instead.
    pub h: f64,
    pub corners: Vec<Corner>,
    pub necks: Vec<RealizedNeck>,
    pub pieces: Vec<PieceSpec>,
    index: SegmentIndex,
}

impl RealizedDomain {
    pub fn contains(&self, p: Point) -> bool {
        self.index.contains(p)
    }

    pub fn nearest_boundary(&self, p: Point) -> Nearest {
        self.index.nearest(p)
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.index.nearest(p).distance
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        self.index.segments()
    }

    /// Origin of the `k`-th segment of [`Self::segments`] (loops concatenated in order).
    pub fn segment_tag(&self, mut k: usize) -> EdgeTag {
        for t in &self.tags {
            if k < t.len() {
                return t[k];
            }
            k -= t.len();
        }
        panic!("segment index out of range");
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.loops.iter().flatten() {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        lo.dist(hi)
    }

    /// Index of the piece or neck containing `p`: pieces first, then necks.
    pub fn region_of(&self, p: Point) -> Region {
        for n in &self.necks {
            if n.contains(p) {
                return Region::Neck(n.index);
            }
        }
        Region::Pieces
    }

    pub fn min_neck_width(&self) -> Option<f64> {
        self.necks.iter().map(|n| n.min_width).reduce(f64::min)
    }
}

/// Coarse location of a point of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Pieces,
    Neck(usize),
}

/// Builds the chain domain for a validated configuration at boundary resolution `h`.
pub fn build_chain_domain(
    pieces: &[PieceSpec],
    necks: &[NeckSpec],
    widths: &WidthFamily,
    h: f64,
) -> Result<RealizedDomain> {
    for (k, p) in pieces.iter().enumerate() {
        p.validate(k)?;
    }
    for (k, n) in necks.iter().enumerate() {
        n.validate(k, pieces.len())?;
        n.check_jacobian(k, 32)?;
    }
    let intervals = widths.intervals(necks.len())?;
    realize(pieces, necks, &intervals, h)
}

/// Convenience wrapper over [`build_chain_domain`] for a whole configuration.
pub fn realize_config(cfg: &DomainConfig, h: f64) -> Result<RealizedDomain> {
    build_chain_domain(&cfg.pieces, &cfg.necks, &cfg.widths, h)
}

/// The base domain: every neck at its full interval `[-1, 1]`.
pub fn base_domain(pieces: &[PieceSpec], necks: &[NeckSpec], h: f64) -> Result<RealizedDomain> {
    let intervals = vec![(-1.0, 1.0); necks.len()];
    realize(pieces, necks, &intervals, h)
}

struct PieceNodes {
    c: Vec<f64>,
    p: Vec<Point>,
    vertex: Vec<bool>,
    perimeter: f64,
}

fn piece_nodes(piece: &PieceSpec, h: f64) -> PieceNodes {
    let verts = piece.vertex_arcs();
    let mut out = PieceNodes {
        c: Vec::new(),
        p: Vec::new(),
        vertex: Vec::new(),
        perimeter: 0.0,
    };
    let mut c = 0.0;
    for (k, arc) in piece.arcs.iter().enumerate() {
        let pts = arc.discretize(h);
        for (m, q) in pts[..pts.len() - 1].iter().enumerate() {
            if let Some(last) = out.p.last() {
                c += last.dist(*q);
            }
            out.c.push(c);
            out.p.push(*q);
            out.vertex.push(m == 0 && verts.contains(&k));
        }
    }
    out.perimeter = c + out.p.last().unwrap().dist(out.p[0]);
    out
}

/// Projection of `q` onto the closed polyline: (distance, arclength coordinate).
fn project(nodes: &PieceNodes, q: Point) -> (f64, f64) {
    let n = nodes.p.len();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let a = nodes.p[k];
        let b = nodes.p[(k + 1) % n];
        let (d, u) = segment_distance(q, a, b);
        if d < best.0 {
            best = (d, nodes.c[k] + u * a.dist(b));
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Mouth {
    neck: usize,
    end: usize,
    c_start: f64,
    c_end: f64,
    rail_start: usize,
    rail_end: usize,
    p_start: Point,
    p_end: Point,
}

struct Chain {
    points: Vec<Point>,
    kinds: Vec<NodeKind>,
    piece: usize,
    start_key: Option<(usize, usize, usize)>,
    end_key: Option<(usize, usize, usize)>,
}

fn fwd(a: f64, b: f64, per: f64) -> f64 {
    (b - a).rem_euclid(per)
}

fn realize(pieces: &[PieceSpec], necks: &[NeckSpec], intervals: &[(f64, f64)], h: f64) -> Result<RealizedDomain> {
    if !(h > 0.0) {
        return Err(ChainError::Param(format!("boundary resolution h = {h} must be positive")));
    }
    let shortest_arc = pieces
        .iter()
        .flat_map(|p| p.arcs.iter().map(|a| a.length()))
        .fold(f64::INFINITY, f64::min);
    if h >= shortest_arc {
        return Err(ChainError::Param(format!(
            "boundary resolution {h} is not below the shortest arc length {shortest_arc}"
        )));
    }

    let nodes: Vec<PieceNodes> = pieces.iter().map(|p| piece_nodes(p, h)).collect();

    // neck ends on the pieces
    let mut mouths: Vec<Vec<Mouth>> = vec![Vec::new(); pieces.len()];
    for (k, neck) in necks.iter().enumerate() {
        let (t1, t2) = intervals[k];
        let len = neck.length();
        for end in 0..2 {
            let piece = if end == 0 { neck.i } else { neck.j };
            let s = if end == 0 { 0.0 } else { len };
            let g = &neck.homotopy;
            for q in 0..=8 {
                let t = t1 + (t2 - t1) * q as f64 / 8.0;
                let d = pieces[piece].distance(g.eval(s, t));
                if d > h {
                    return Err(ChainError::Attachment {
                        neck: k,
                        piece,
                        distance: d,
                        tolerance: h,
                    });
                }
            }
            let (pa, pb) = (g.eval(s, t1), g.eval(s, t2));
            let per = nodes[piece].perimeter;
            let (_, ca) = project(&nodes[piece], pa);
            let (_, cb) = project(&nodes[piece], pb);
            let (_, c0) = project(&nodes[piece], g.eval(s, 0.0));
            let m = if fwd(ca, c0, per) < fwd(ca, cb, per) {
                Mouth {
                    neck: k,
                    end,
                    c_start: ca,
                    c_end: cb,
                    rail_start: 0,
                    rail_end: 1,
                    p_start: pa,
                    p_end: pb,
                }
            } else {
                Mouth {
                    neck: k,
                    end,
                    c_start: cb,
                    c_end: ca,
                    rail_start: 1,
                    rail_end: 0,
                    p_start: pb,
                    p_end: pa,
                }
            };
            let span = fwd(m.c_start, m.c_end, per);
            for (v, &is_v) in nodes[piece].vertex.iter().enumerate() {
                if !is_v {
                    continue;
                }
                let pv = nodes[piece].p[v];
                let inside = fwd(m.c_start, nodes[piece].c[v], per) < span;
                let close = pv.dist(pa).min(pv.dist(pb));
                if inside || close < h {
                    return Err(ChainError::Geometry(format!(
                        "end {end} of neck {k} is within {close:.3e} of a vertex of piece {piece} (needs at least {h:.3e})"
                    )));
                }
            }
            mouths[piece].push(m);
        }
    }

    // open chains of piece boundary between consecutive mouths
    let mut chains: Vec<Chain> = Vec::new();
    for (pi, piece_mouths) in mouths.iter_mut().enumerate() {
        let nd = &nodes[pi];
        let per = nd.perimeter;
        let kind_of = |v: usize| if nd.vertex[v] { NodeKind::Vertex(pi) } else { NodeKind::Plain };
        if piece_mouths.is_empty() {
            chains.push(Chain {
                points: nd.p.clone(),
                kinds: (0..nd.p.len()).map(kind_of).collect(),
                piece: pi,
                start_key: None,
                end_key: None,
            });
            continue;
        }
        piece_mouths.sort_by(|a, b| a.c_start.partial_cmp(&b.c_start).unwrap());
        let km = piece_mouths.len();
        for a in 0..km {
            let from = piece_mouths[a];
            let to = piece_mouths[(a + 1) % km];
            let gap = fwd(from.c_end, to.c_start, per);
            if km > 1 && fwd(from.c_start, from.c_end, per) >= fwd(from.c_start, to.c_start, per) {
                return Err(ChainError::Geometry(format!(
                    "neck ends of necks {} and {} overlap on piece {pi}",
                    from.neck, to.neck
                )));
            }
            let mut inner: Vec<(f64, usize)> = (0..nd.p.len())
                .filter_map(|v| {
                    let off = fwd(from.c_end, nd.c[v], per);
                    (off > 0.0 && off < gap).then_some((off, v))
                })
                .collect();
            inner.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let mut points = vec![from.p_end];
            let mut kinds = vec![NodeKind::Junction(from.neck, from.end, from.rail_end)];
            for (_, v) in inner {
                let q = nd.p[v];
                if !nd.vertex[v] && (q.dist(from.p_end) < 0.25 * h || q.dist(to.p_start) < 0.25 * h) {
                    continue;
                }
                points.push(q);
                kinds.push(kind_of(v));
            }
            points.push(to.p_start);
            kinds.push(NodeKind::Junction(to.neck, to.end, to.rail_start));
            chains.push(Chain {
                points,
                kinds,
                piece: pi,
                start_key: Some((from.neck, from.end, from.rail_end)),
                end_key: Some((to.neck, to.end, to.rail_start)),
            });
        }
    }

    // rails, sampled uniformly in s; thin necks get a spacing of a quarter of their width
    let widths: Vec<(f64, f64)> = necks
        .iter()
        .enumerate()
        .map(|(k, n)| min_width(&n.homotopy, n.length(), intervals[k].0, intervals[k].1, h))
        .collect();
    let mut rails: HashMap<(usize, usize), Vec<Point>> = HashMap::new();
    let mut rail_samples = Vec::with_capacity(necks.len());
    for (k, neck) in necks.iter().enumerate() {
        let (t1, t2) = intervals[k];
        let len = neck.length();
        let spacing = h.min(0.25 * widths[k].0);
        let fine = 512;
        let longest = [t1, t2]
            .iter()
            .map(|&t| {
                (0..fine)
                    .map(|q| {
                        let a = neck.homotopy.eval(len * q as f64 / fine as f64, t);
                        let b = neck.homotopy.eval(len * (q + 1) as f64 / fine as f64, t);
                        a.dist(b)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let n = (longest / spacing).ceil().max(1.0) as usize;
        rail_samples.push(n);
        for (r, t) in [(0usize, t1), (1usize, t2)] {
            let pts: Vec<Point> = (0..=n).map(|q| neck.homotopy.eval(len * q as f64 / n as f64, t)).collect();
            rails.insert((k, r), pts);
        }
    }

    // assemble loops: chain, rail, chain, rail, ...
    let by_start: HashMap<(usize, usize, usize), usize> = chains
        .iter()
        .enumerate()
        .filter_map(|(c, ch)| ch.start_key.map(|k| (k, c)))
        .collect();
    let mut used = vec![false; chains.len()];
    let mut loops: Vec<Vec<Point>> = Vec::new();
    let mut tags: Vec<Vec<EdgeTag>> = Vec::new();
    let mut kinds: Vec<Vec<NodeKind>> = Vec::new();
    for c0 in 0..chains.len() {
        if used[c0] {
            continue;
        }
        let mut pts = Vec::new();
        let mut tg = Vec::new();
        let mut kd = Vec::new();
        let mut c = c0;
        loop {
            used[c] = true;
            let ch = &chains[c];
            let Some(key) = ch.end_key else {
                pts.extend_from_slice(&ch.points);
                kd.extend_from_slice(&ch.kinds);
                tg.extend(std::iter::repeat_n(EdgeTag::Side { piece: ch.piece }, ch.points.len()));
                break;
            };
            let m = ch.points.len();
            pts.extend_from_slice(&ch.points[..m - 1]);
            kd.extend_from_slice(&ch.kinds[..m - 1]);
            tg.extend(std::iter::repeat_n(EdgeTag::Side { piece: ch.piece }, m - 1));
            let (neck, end, rail) = key;
            let mut rp = rails[&(neck, rail)].clone();
            if end == 1 {
                rp.reverse();
            }
            let nr = rp.len();
            pts.extend_from_slice(&rp[..nr - 1]);
            kd.push(NodeKind::Junction(neck, end, rail));
            kd.extend(std::iter::repeat_n(NodeKind::Plain, nr - 2));
            tg.extend(std::iter::repeat_n(EdgeTag::Rail { neck, rail }, nr - 1));
            let next_key = (neck, 1 - end, rail);
            let Some(&next) = by_start.get(&next_key) else {
                return Err(ChainError::Geometry(format!(
                    "neck {neck} rail {rail} does not continue into a piece boundary; check the neck orientation"
                )));
            };
            if next == c0 {
                break;
            }
            if used[next] {
                return Err(ChainError::Geometry("boundary loops are inconsistent".into()));
            }
            c = next;
        }
        loops.push(pts);
        tags.push(tg);
        kinds.push(kd);
    }

    let area: f64 = loops.iter().map(|l| signed_area(l)).sum();
    if !(area > 0.0) {
        return Err(ChainError::Geometry(format!("realized domain has non-positive area {area}")));
    }
    if let Some(p) = first_self_intersection(&loops) {
        return Err(ChainError::Geometry(format!(
            "boundary self-intersects near ({:.6}, {:.6})",
            p.x, p.y
        )));
    }
    let perimeter: f64 = loops.iter().map(|l| closed_length(l)).sum();

    // corners with exact tangents
    let mut corners = Vec::new();
    for (l, lp) in loops.iter().enumerate() {
        let n = lp.len();
        for k in 0..n {
            let kind = kinds[l][k];
            if kind == NodeKind::Plain {
                continue;
            }
            let p = lp[k];
            let (tin, tout, ck) = match kind {
                NodeKind::Vertex(pi) => {
                    let arcs = &pieces[pi].arcs;
                    let na = arcs.len();
                    let a = arcs
                        .iter()
                        .position(|a| a.start() == p)
                        .expect("vertex node is an arc start");
                    (arcs[(a + na - 1) % na].tangent(1.0), arcs[a].tangent(0.0), CornerKind::Piece { piece: pi })
                }
                NodeKind::Junction(neck, end, rail) => {
                    let piece = if end == 0 { necks[neck].i } else { necks[neck].j };
                    let side = side_tangent(&pieces[piece], p);
                    let t = if rail == 0 { intervals[neck].0 } else { intervals[neck].1 };
                    let s = if end == 0 { 0.0 } else { necks[neck].length() };
                    let g = necks[neck].homotopy.ds(s, t).normalized();
                    // into the neck from end 0 runs along +ds, from end 1 along -ds
                    let into = if end == 0 { g } else { -g };
                    let prev_is_rail = matches!(tags[l][(k + n - 1) % n], EdgeTag::Rail { .. });
                    let ck = CornerKind::Junction { neck, end, rail };
                    if prev_is_rail {
                        (-into, side, ck)
                    } else {
                        (side, into, ck)
                    }
                }
                NodeKind::Plain => unreachable!(),
            };
            let turn = turn_angle(tin, tout);
            if turn.abs() > VERTEX_ANGLE_TOL {
                corners.push(Corner {
                    point: p,
                    angle: PI - turn,
                    kind: ck,
                });
            }
        }
    }

    let realized_necks = necks
        .iter()
        .enumerate()
        .map(|(k, neck)| {
            let (t1, t2) = intervals[k];
            let len = neck.length();
            let (min_width, min_width_at) = widths[k];
            let spacing = h.min(0.25 * min_width);
            let mouth = |s: f64| {
                let m = (neck.homotopy.eval(s, t1).dist(neck.homotopy.eval(s, t2)) / spacing).ceil().max(1.0) as usize;
                (0..=m)
                    .map(|q| neck.homotopy.eval(s, t1 + (t2 - t1) * q as f64 / m as f64))
                    .collect::<Vec<_>>()
            };
            RealizedNeck {
                index: k,
                i: neck.i,
                j: neck.j,
                interval: (t1, t2),
                length: len,
                min_width,
                min_width_at,
                homotopy: neck.homotopy.clone(),
                mouths: [mouth(0.0), mouth(len)],
                rail_samples: rail_samples[k],
            }
        })
        .collect();

    let segs: Vec<(Point, Point)> = loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |k| (l[k], l[(k + 1) % l.len()])))
        .collect();

    Ok(RealizedDomain {
        loops,
        tags,
        area,
        perimeter,
        h,
        corners,
        necks: realized_necks,
        pieces: pieces.to_vec(),
        index: SegmentIndex::new(segs),
    })
}

fn side_tangent(piece: &PieceSpec, p: Point) -> Point {
    let arc = piece
        .arcs
        .iter()
        .min_by(|a, b| a.distance(p).partial_cmp(&b.distance(p)).unwrap())
        .unwrap();
    arc.tangent_at_point(p)
}

/// Minimum over `s` of the rail separation, by grid search refined with golden sections to
/// a tolerance of `h / 10` in `s`.
pub fn min_width(g: &Homotopy, len: f64, t1: f64, t2: f64, h: f64) -> (f64, f64) {
    let width = |s: f64| g.eval(s, t2).dist(g.eval(s, t1));
    let n = ((len / h).ceil() as usize).max(64);
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..=n {
        let w = width(len * k as f64 / n as f64);
        if w < best {
            best = w;
            best_k = k;
        }
    }
    let mut a = len * best_k.saturating_sub(1) as f64 / n as f64;
    let mut b = len * (best_k + 1).min(n) as f64 / n as f64;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (width(c), width(d));
    while b - a > 0.1 * h {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = width(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = width(d);
        }
    }
    let mut out = (best, len * best_k as f64 / n as f64);
    for s in [a, b, c, d] {
        let w = width(s);
        if w < out.0 {
            out = (w, s);
        }
    }
    out
}

/// First point where two non-adjacent edges of the given closed loops meet.
pub fn first_self_intersection(loops: &[Vec<Point>]) -> Option<Point> {
    let mut owner = Vec::new();
    let mut segs = Vec::new();
    for (l, lp) in loops.iter().enumerate() {
        let n = lp.len();
        for k in 0..n {
            segs.push((lp[k], lp[(k + 1) % n]));
            owner.push((l, k, n));
        }
    }
    let idx = SegmentIndex::new(segs);
    let hit = idx.first_intersection(|a, b| {
        let (la, ka, n) = owner[a];
        let (lb, kb, _) = owner[b];
        la == lb && (kb == (ka + 1) % n || ka == (kb + 1) % n)
    })?;
    Some(idx.segments()[hit.0].0)
}
