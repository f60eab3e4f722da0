//! Uniform-grid index over boundary segments.

use super::point::{segment_distance, segments_intersect, Point};

#[derive(Clone, Debug)]
pub struct SegmentIndex {
    segs: Vec<(Point, Point)>,
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    // horizontal bands for ray casting
    band_y0: f64,
    band_h: f64,
    bands: Vec<Vec<u32>>,
}

/// Nearest boundary point of a query.
#[derive(Clone, Copy, Debug)]
pub struct Nearest {
    pub distance: f64,
    pub foot: Point,
    pub segment: usize,
}

impl SegmentIndex {
    pub fn new(segs: Vec<(Point, Point)>) -> Self {
        assert!(!segs.is_empty(), "segment index needs at least one segment");
        let (mut lo, mut hi) = (segs[0].0, segs[0].0);
        let mut total = 0.0;
        for (a, b) in &segs {
            for p in [a, b] {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            total += a.dist(*b);
        }
        let ext = (hi - lo).norm().max(1e-300);
        let mean = total / segs.len() as f64;
        // about one segment per cell along the boundary, capped in count
        let mut cell = (2.0 * mean).max(ext / 2048.0);
        let span = Point::new((hi.x - lo.x).max(cell), (hi.y - lo.y).max(cell));
        while (span.x / cell).ceil() * (span.y / cell).ceil() > 4.0e6 {
            cell *= 1.5;
        }
        let nx = (span.x / cell).ceil() as usize + 1;
        let ny = (span.y / cell).ceil() as usize + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        for (k, (a, b)) in segs.iter().enumerate() {
            let (i0, j0) = Self::cell_of_raw(lo, cell, nx, ny, Point::new(a.x.min(b.x), a.y.min(b.y)));
            let (i1, j1) = Self::cell_of_raw(lo, cell, nx, ny, Point::new(a.x.max(b.x), a.y.max(b.y)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(k as u32);
                }
            }
        }
        let nb = (segs.len() / 4).clamp(1, 4096);
        let band_h = ((hi.y - lo.y) / nb as f64).max(1e-300);
        let mut bands = vec![Vec::new(); nb];
        for (k, (a, b)) in segs.iter().enumerate() {
            let b0 = (((a.y.min(b.y) - lo.y) / band_h).floor().max(0.0) as usize).min(nb - 1);
            let b1 = (((a.y.max(b.y) - lo.y) / band_h).floor().max(0.0) as usize).min(nb - 1);
            for band in &mut bands[b0..=b1] {
                band.push(k as u32);
            }
        }
        SegmentIndex {
            segs,
            origin: lo,
            cell,
            nx,
            ny,
            cells,
            band_y0: lo.y,
            band_h,
            bands,
        }
    }

    fn cell_of_raw(lo: Point, cell: f64, nx: usize, ny: usize, p: Point) -> (usize, usize) {
        let i = ((p.x - lo.x) / cell).floor().max(0.0) as usize;
        let j = ((p.y - lo.y) / cell).floor().max(0.0) as usize;
        (i.min(nx - 1), j.min(ny - 1))
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segs
    }

    /// Nearest point on any indexed segment.
    pub fn nearest(&self, p: Point) -> Nearest {
        let (ci, cj) = Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, p);
        let mut best = Nearest {
            distance: f64::INFINITY,
            foot: p,
            segment: usize::MAX,
        };
        let max_r = self.nx.max(self.ny);
        for r in 0..=max_r {
            let i0 = ci as isize - r as isize;
            let i1 = ci as isize + r as isize;
            let j0 = cj as isize - r as isize;
            let j1 = cj as isize + r as isize;
            for j in j0..=j1 {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let ring_row = j == j0 || j == j1;
                let mut i = i0;
                while i <= i1 {
                    if i >= 0 && i < self.nx as isize {
                        for &k in &self.cells[j as usize * self.nx + i as usize] {
                            let (a, b) = self.segs[k as usize];
                            let (d, u) = segment_distance(p, a, b);
                            if d < best.distance || (d == best.distance && (k as usize) < best.segment) {
                                best = Nearest {
                                    distance: d,
                                    foot: a.lerp(b, u),
                                    segment: k as usize,
                                };
                            }
                        }
                    }
                    // interior rows only need their two ring cells
                    i = if ring_row || i == i1 { i + 1 } else { i1 };
                }
            }
            // Everything not yet scanned lies outside the square of cells [i0, i1] x [j0, j1].
            let box_lo = self.origin + Point::new(i0 as f64 * self.cell, j0 as f64 * self.cell);
            let box_hi = self.origin + Point::new((i1 + 1) as f64 * self.cell, (j1 + 1) as f64 * self.cell);
            let margin = (p.x - box_lo.x)
                .min(box_hi.x - p.x)
                .min(p.y - box_lo.y)
                .min(box_hi.y - p.y);
            let covered = i0 <= 0 && j0 <= 0 && i1 >= self.nx as isize - 1 && j1 >= self.ny as isize - 1;
            if best.distance <= margin || covered {
                break;
            }
        }
        best
    }

    /// Whether `p` is enclosed by the indexed closed curves (even-odd rule).
    pub fn contains(&self, p: Point) -> bool {
        let nb = self.bands.len();
        let b = (p.y - self.band_y0) / self.band_h;
        if b < 0.0 || b >= nb as f64 + 1e-9 {
            return false;
        }
        let band = &self.bands[(b.floor() as usize).min(nb - 1)];
        let mut inside = false;
        for &k in band {
            let (a, c) = self.segs[k as usize];
            if (a.y > p.y) != (c.y > p.y) {
                let x = a.x + (p.y - a.y) / (c.y - a.y) * (c.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// First pair `(k, m)` with `k < m` of intersecting segments, ignoring pairs for which
    /// `skip` returns true.
    pub fn first_intersection(&self, skip: impl Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
        for (k, (a, b)) in self.segs.iter().enumerate() {
            let (i0, j0) = Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, Point::new(a.x.min(b.x), a.y.min(b.y)));
            let (i1, j1) = Self::cell_of_raw(self.origin, self.cell, self.nx, self.ny, Point::new(a.x.max(b.x), a.y.max(b.y)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &m in &self.cells[j * self.nx + i] {
                        let m = m as usize;
                        if m <= k || skip(k, m) {
                            continue;
                        }
                        let (c, d) = self.segs[m];
                        if segments_intersect(*a, *b, c, d) {
                            return Some((k, m));
                        }
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_segments() -> Vec<(Point, Point)> {
        let p = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        (0..4).map(|k| (p[k], p[(k + 1) % 4])).collect()
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..200)
            .map(|k| {
                let a = k as f64 / 200.0 * std::f64::consts::TAU;
                let r = 1.0 + 0.3 * (5.0 * a).sin();
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let segs: Vec<_> = (0..pts.len()).map(|k| (pts[k], pts[(k + 1) % pts.len()])).collect();
        let idx = SegmentIndex::new(segs.clone());
        for _ in 0..500 {
            let p = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let brute = segs
                .iter()
                .map(|(a, b)| segment_distance(p, *a, *b).0)
                .fold(f64::INFINITY, f64::min);
            assert!((idx.nearest(p).distance - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn square_containment() {
        let idx = SegmentIndex::new(square_segments());
        assert!(idx.contains(Point::new(0.5, 0.5)));
        assert!(idx.contains(Point::new(0.01, 0.99)));
        assert!(!idx.contains(Point::new(1.5, 0.5)));
        assert!(!idx.contains(Point::new(0.5, -0.1)));
    }

    #[test]
    fn detects_crossing() {
        let mut segs = square_segments();
        assert!(segs.len() == 4);
        let idx = SegmentIndex::new(segs.clone());
        let adjacent = |a: usize, b: usize| b == a + 1 || (a == 0 && b == 3);
        assert!(idx.first_intersection(adjacent).is_none());
        segs.push((Point::new(0.5, -0.5), Point::new(0.5, 0.5)));
        let idx = SegmentIndex::new(segs);
        assert!(idx.first_intersection(adjacent).is_some());
    }
}
