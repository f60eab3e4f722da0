//! Block Krylov eigensolver for the pencil `(K, M)`: shift-invert, full
//! reorthogonalization in the `M` inner product, thick restarts.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cholesky::Cholesky;
use super::sparse::SparseSym;
use crate::error::{ChainError, Result};
use crate::geometry::Point;

/// Settings of [`eigs`].
#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Number of eigenpairs closest to the shift from above.
    pub count: usize,
    pub shift: f64,
    pub seed: u64,
    /// Start block size; must exceed the largest multiplicity to be resolved.
    pub block: usize,
    /// Relative residual target `|K u - mu M u| / (|K u| + (|mu| + scale) |M u|)`.
    pub tol: f64,
    /// Eigenvalue scale used in the residual denominator.
    pub scale: f64,
    pub max_restarts: usize,
}

impl EigenOptions {
    pub fn new(count: usize, shift: f64, scale: f64, seed: u64) -> EigenOptions {
        EigenOptions {
            count,
            shift,
            seed,
            block: 6,
            tol: 1e-9,
            scale,
            max_restarts: 60,
        }
    }
}

/// Eigenpairs in ascending order with `M`-orthonormal vectors.
#[derive(Clone, Debug)]
pub struct RawEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub restarts: usize,
}

struct Pencil<'a> {
    k: &'a SparseSym,
    m: &'a SparseSym,
    factor: Cholesky,
}

impl Pencil<'_> {
    /// `(K - shift M)^{-1} M v`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.factor.solve(&self.m.mul_vec(v))
    }

    fn m_norm(&self, v: &[f64]) -> f64 {
        self.m.form(v, v).max(0.0).sqrt()
    }

    /// Removes the components of `w` along `basis` (twice) and returns the coefficients.
    fn orthogonalize(&self, basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
        let mut coef = vec![0.0; basis.len()];
        for _ in 0..2 {
            let mw = self.m.mul_vec(w);
            let c: Vec<f64> = basis.par_iter().map(|v| dot(v, &mw)).collect();
            for (v, ci) in basis.iter().zip(&c) {
                axpy(-ci, v, w);
            }
            for (a, b) in coef.iter_mut().zip(&c) {
                *a += b;
            }
        }
        coef
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Smallest `count` eigenvalues above `shift` of `K u = mu M u`, with `K - shift M`
/// positive definite. `coords` give positions of the unknowns for the factor ordering.
pub fn eigs(k: &SparseSym, m: &SparseSym, coords: &[Point], opts: &EigenOptions) -> Result<RawEigen> {
    let n = k.dim();
    let nev = opts.count;
    if nev == 0 || 2 * nev >= n {
        return Err(ChainError::Param(format!(
            "{nev} eigenpairs requested from a problem of dimension {n}"
        )));
    }
    let factor = Cholesky::factor(&k.add_scaled(-opts.shift, m), Some(coords))?;
    let pencil = Pencil { k, m, factor };
    let b = opts.block.max(1).min(n - nev);
    let mmax = (2 * nev + 3 * b).max(nev + 60).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(mmax + 1);
    // start block: random vectors pushed once through the operator
    while basis.len() < b {
        let mut w = pencil.apply(&random_vector(&mut rng, n));
        pencil.orthogonalize(&basis, &mut w);
        let nw = pencil.m_norm(&w);
        if nw > 0.0 {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    // coef[j][i] = <v_i, A v_j>_M as produced by the orthogonalization of column j
    let mut coef: Vec<Vec<f64>> = Vec::with_capacity(mmax);
    let mut ritz_tol = 1e-2 * opts.tol;
    let mut restarts = 0;
    loop {
        while basis.len() < mmax {
            let j = coef.len();
            let mut w = pencil.apply(&basis[j]);
            let scale = pencil.m_norm(&w);
            let mut c = pencil.orthogonalize(&basis, &mut w);
            let mut beta = pencil.m_norm(&w);
            if beta <= 1e-13 * scale {
                // invariant subspace: continue with a fresh direction
                w = random_vector(&mut rng, n);
                pencil.orthogonalize(&basis, &mut w);
                let nw = pencil.m_norm(&w);
                w.iter_mut().for_each(|x| *x /= nw);
                beta = 0.0;
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
            }
            c.push(beta);
            coef.push(c);
            basis.push(w);
        }
        let p = coef.len();
        let len = basis.len();
        let mut h = DMatrix::<f64>::zeros(p, p);
        for j in 0..p {
            for i in 0..=j {
                let v = coef[j].get(i).copied().unwrap_or(0.0);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
        // coupling of the Ritz vectors to the unexpanded tail
        let tail = |y: usize| -> Vec<f64> {
            (p..len)
                .map(|i| (0..p).map(|j| coef[j].get(i).copied().unwrap_or(0.0) * eig.eigenvectors[(j, y)]).sum())
                .collect()
        };
        let resid: Vec<f64> = order[..nev].iter().map(|&y| tail(y).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        let done = order[..nev]
            .iter()
            .zip(&resid)
            .all(|(&y, r)| *r <= ritz_tol * eig.eigenvalues[y].abs());

        let ritz = |cols: &[usize]| -> Vec<Vec<f64>> {
            cols.par_iter()
                .map(|&y| {
                    let mut x = vec![0.0; n];
                    for j in 0..p {
                        axpy(eig.eigenvectors[(j, y)], &basis[j], &mut x);
                    }
                    x
                })
                .collect()
        };

        if done || restarts >= opts.max_restarts {
            let vecs = ritz(&order[..nev]);
            let mut pairs: Vec<(f64, Vec<f64>, f64)> = order[..nev]
                .iter()
                .zip(vecs)
                .map(|(&y, mut x)| {
                    let theta = eig.eigenvalues[y];
                    let mu = opts.shift + 1.0 / theta;
                    let nx = pencil.m_norm(&x);
                    x.iter_mut().for_each(|v| *v /= nx);
                    normalize_sign(&mut x);
                    let r = residual(pencil.k, pencil.m, mu, &x, opts.scale);
                    (mu, x, r)
                })
                .collect();
            pairs.sort_by(|a, c| a.0.total_cmp(&c.0));
            let worst = pairs.iter().map(|q| q.2).fold(0.0, f64::max);
            if worst <= opts.tol || restarts >= opts.max_restarts {
                return Ok(RawEigen {
                    converged: worst <= opts.tol,
                    values: pairs.iter().map(|q| q.0).collect(),
                    residuals: pairs.iter().map(|q| q.2).collect(),
                    vectors: pairs.into_iter().map(|q| q.1).collect(),
                    restarts,
                });
            }
            // Ritz estimates were met but the true residuals were not
            ritz_tol *= 1e-2;
        }

        restarts += 1;
        let keep = (nev + (p - nev) / 2).min(p - 1).max(nev);
        let kept = ritz(&order[..keep]);
        let couplings: Vec<Vec<f64>> = order[..keep].iter().map(|&y| tail(y)).collect();
        let tail_vecs: Vec<Vec<f64>> = basis.drain(p..).collect();
        basis = kept;
        basis.extend(tail_vecs);
        coef = (0..keep)
            .map(|i| {
                let mut c = vec![0.0; keep + (len - p)];
                c[i] = eig.eigenvalues[order[i]];
                for (r, v) in couplings[i].iter().enumerate() {
                    c[keep + r] = *v;
                }
                c
            })
            .collect();
        // the restarted basis drifts from M-orthonormality only at rounding level; clean it
        for i in 0..basis.len() {
            let (done_part, rest) = basis.split_at_mut(i);
            let v = &mut rest[0];
            if i >= keep {
                pencil.orthogonalize(done_part, v);
                let nv = pencil.m_norm(v);
                v.iter_mut().for_each(|x| *x /= nv);
            }
        }
    }
}

/// Relative residual `|K x - mu M x| / (|K x| + (|mu| + scale) |M x|)` in the Euclidean norm.
pub fn residual(k: &SparseSym, m: &SparseSym, mu: f64, x: &[f64], scale: f64) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
    let nk = kx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nm = mx.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / (nk + (mu.abs() + scale) * nm)
}

/// Makes the largest-magnitude entry positive (first one on ties).
pub fn normalize_sign(x: &mut [f64]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::mesh::rectangle_mesh;

    #[test]
    fn path_graph_pencil() {
        // 1-D Neumann Laplacian on [0, 1] with consistent mass: compare with dense solve
        let n = 60;
        let hx = 1.0 / (n - 1) as f64;
        let (kt, mt) = path_pencil(n);
        let k = SparseSym::from_triplets(n, &kt);
        let m = SparseSym::from_triplets(n, &mt);
        let coords: Vec<Point> = (0..n).map(|i| Point::new(i as f64 * hx, 0.0)).collect();
        let r = eigs(&k, &m, &coords, &EigenOptions::new(8, -1.0, 1.0, 1)).unwrap();
        assert!(r.converged);
        assert!(r.values[0].abs() < 1e-9);
        for (j, mu) in r.values.iter().enumerate().skip(1) {
            let exact = (std::f64::consts::PI * j as f64).powi(2);
            assert!((mu - exact).abs() / exact < 0.05, "{j}: {mu} vs {exact}");
        }
        for i in 0..8 {
            for j in 0..8 {
                let g = m.form(&r.vectors[i], &r.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-9);
            }
        }
    }

    fn path_pencil(n: usize) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
        let hx = 1.0 / (n - 1) as f64;
        let (mut kt, mut mt) = (Vec::new(), Vec::new());
        for e in 0..n - 1 {
            for (i, j, kv, mv) in [
                (e, e, 1.0 / hx, hx / 3.0),
                (e + 1, e + 1, 1.0 / hx, hx / 3.0),
                (e, e + 1, -1.0 / hx, hx / 6.0),
                (e + 1, e, -1.0 / hx, hx / 6.0),
            ] {
                kt.push((i, j, kv));
                mt.push((i, j, mv));
            }
        }
        (kt, mt)
    }

    #[test]
    fn resolves_repeated_eigenvalues() {
        // tensor-product pencil on the unit square: mu_i + mu_j is exactly repeated
        let n = 20;
        let (k1, m1) = path_pencil(n);
        let (mut kt, mut mt) = (Vec::new(), Vec::new());
        for &(i, j, kv) in &k1 {
            for &(p, q, mv) in &m1 {
                kt.push((i * n + p, j * n + q, kv * mv));
                kt.push((p * n + i, q * n + j, kv * mv));
            }
        }
        for &(i, j, a) in &m1 {
            for &(p, q, b) in &m1 {
                mt.push((i * n + p, j * n + q, a * b));
            }
        }
        let k = SparseSym::from_triplets(n * n, &kt);
        let m = SparseSym::from_triplets(n * n, &mt);
        let hx = 1.0 / (n - 1) as f64;
        let coords: Vec<Point> = (0..n * n).map(|v| Point::new((v / n) as f64 * hx, (v % n) as f64 * hx)).collect();
        let r = eigs(&k, &m, &coords, &EigenOptions::new(10, -1.0, 1.0, 7)).unwrap();
        assert!(r.converged, "{:?}", r.residuals);
        // 0 | (1,0) (0,1) | (1,1) | (2,0) (0,2) | (2,1) (1,2) | (2,2) | (3,0) (0,3)
        for (a, b) in [(1, 2), (4, 5), (6, 7)] {
            assert!((r.values[a] - r.values[b]).abs() <= 1e-9 * r.values[a], "{:?}", r.values);
        }
        assert!((r.values[2] - r.values[3]).abs() > 1e-3);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((r.values[1] / pi2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn deterministic_for_seed() {
        let mesh = rectangle_mesh(0.0, 0.0, 1.0, 1.0, 10, 10).unwrap();
        let (k, m) = assemble(&mesh).unwrap();
        let o = EigenOptions::new(5, -1.0, 1.0, 3);
        let a = eigs(&k, &m, &mesh.vertices, &o).unwrap();
        let b = eigs(&k, &m, &mesh.vertices, &o).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }
}
