//! Sparse Cholesky factorization `P A P^T = L L^T` with a geometric nested-dissection
//! ordering (up-looking, row by row).

use super::sparse::SparseSym;
use crate::error::{ChainError, Result};
use crate::geometry::Point;

const NONE: usize = usize::MAX;

pub struct Cholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. `coords` (one point per unknown) drive
    /// the fill-reducing ordering; without them the natural order is used.
    pub fn factor(a: &SparseSym, coords: Option<&[Point]>) -> Result<Cholesky> {
        let n = a.dim();
        let perm = match coords {
            Some(c) => {
                assert_eq!(c.len(), n);
                nested_dissection(a, c)
            }
            None => (0..n).collect(),
        };
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // upper triangle of the permuted matrix, stored by columns
        let (indptr, indices, data) = a.raw();
        let mut cp = vec![0usize; n + 1];
        for k in 0..n {
            let old = perm[k];
            cp[k + 1] = cp[k] + (indptr[old]..indptr[old + 1]).filter(|&p| inv[indices[p]] <= k).count();
        }
        let mut ci = vec![0usize; cp[n]];
        let mut cx = vec![0.0; cp[n]];
        for k in 0..n {
            let old = perm[k];
            let mut q = cp[k];
            for p in indptr[old]..indptr[old + 1] {
                let j = inv[indices[p]];
                if j <= k {
                    ci[q] = j;
                    cx[q] = data[p];
                    q += 1;
                }
            }
        }

        // elimination tree
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for p in cp[k]..cp[k + 1] {
                let mut i = ci[p];
                while i != NONE && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == NONE {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // column counts from the row patterns
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&cp, &ci, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + counts[k];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut next: Vec<usize> = lp[..n].to_vec();
        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = NONE);
        for k in 0..n {
            let top = ereach(&cp, &ci, k, &parent, &mut stack, &mut mark);
            x[k] = 0.0;
            for p in cp[k]..cp[k + 1] {
                x[ci[p]] = cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..next[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) {
                return Err(ChainError::Solver(format!(
                    "matrix not positive definite (pivot {d:e} at step {k})"
                )));
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(Cholesky { n, perm, lp, li, lx })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros of the factor.
    pub fn fill(&self) -> usize {
        self.lx.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..n {
            let yj = y[j] / self.lx[self.lp[j]];
            y[j] = yj;
            for p in self.lp[j] + 1..self.lp[j + 1] {
                y[self.li[p]] -= self.lx[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * y[self.li[p]];
            }
            y[j] = s / self.lx[self.lp[j]];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Nonzero pattern of row `k` of the factor, returned in `stack[top..]` in topological
/// order.
fn ereach(cp: &[usize], ci: &[usize], k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for p in cp[k]..cp[k + 1] {
        let mut i = ci[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

/// Orders unknowns by recursive coordinate bisection; each separator is the set of
/// vertices on one side adjacent to the other, numbered after both halves.
fn nested_dissection(a: &SparseSym, coords: &[Point]) -> Vec<usize> {
    struct Nd<'a> {
        a: &'a SparseSym,
        coords: &'a [Point],
        mark: Vec<usize>,
        stamp: usize,
        out: Vec<usize>,
    }
    impl Nd<'_> {
        fn run(&mut self, mut verts: Vec<usize>) {
            if verts.len() <= 48 {
                self.out.extend(verts);
                return;
            }
            let (mut lo, mut hi) = (self.coords[verts[0]], self.coords[verts[0]]);
            for &v in &verts {
                let p = self.coords[v];
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            let key = |p: Point| if hi.x - lo.x >= hi.y - lo.y { p.x } else { p.y };
            verts.sort_by(|&u, &v| key(self.coords[u]).total_cmp(&key(self.coords[v])).then(u.cmp(&v)));
            let right = verts.split_off(verts.len() / 2);
            self.stamp += 1;
            for &v in &right {
                self.mark[v] = self.stamp;
            }
            let (sep, left): (Vec<usize>, Vec<usize>) = verts
                .into_iter()
                .partition(|&v| self.a.row(v).any(|(u, _)| self.mark[u] == self.stamp));
            self.run(left);
            self.run(right);
            self.out.extend(sep);
        }
    }
    let n = a.dim();
    let mut nd = Nd {
        a,
        coords,
        mark: vec![0; n],
        stamp: 0,
        out: Vec::with_capacity(n),
    };
    nd.run((0..n).collect());
    nd.out
}
