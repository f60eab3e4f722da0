//! Numerical checks of the nodal-count inequalities: Pleijel constant, per-class bounds,
//! Weyl lower bound, cylinder Faber-Krahn, boundary-collar area and width-uniform
//! Courant-sharp certificates.

mod cylinder;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{ChainError, Result};
use crate::geometry::{boundary_neighborhood_area, GeometricConstants, RealizedDomain};
use crate::nodal::CourantRow;

pub use cylinder::{cylinder_fk_check, star_polygon, CylinderRegion, CylinderShape};

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub id: String,
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Fitted or supplied constant, when the right side has one.
    pub constant: Option<f64>,
    pub satisfied: bool,
    /// False for logged comparisons that are not proven inequalities.
    pub asserted: bool,
}

impl BoundReport {
    pub fn new(id: impl Into<String>, context: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        BoundReport {
            id: id.into(),
            context: context.into(),
            lhs,
            rhs,
            constant: None,
            satisfied: lhs <= rhs,
            asserted: true,
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = Some(c);
        self
    }

    pub fn logged(mut self) -> Self {
        self.asserted = false;
        self
    }
}

/// `id,context,lhs,rhs,constant,satisfied,asserted` rows.
pub fn reports_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from("id,context,lhs,rhs,constant,satisfied,asserted\n");
    for r in reports {
        let c = r.constant.map(|c| format!("{c:.9e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{:.9e},{:.9e},{},{},{}",
            r.id, r.context, r.lhs, r.rhs, c, r.satisfied, r.asserted
        );
    }
    s
}

/// `J_0` and `J_1` from their power series (accurate to rounding for `|x| ≤ 12`).
fn bessel_j0_j1(x: f64) -> (f64, f64) {
    let q = -(x * x) / 4.0;
    let (mut t0, mut t1) = (1.0, x / 2.0);
    let (mut j0, mut j1) = (t0, t1);
    for k in 1..60 {
        let k = k as f64;
        t0 *= q / (k * k);
        t1 *= q / (k * (k + 1.0));
        j0 += t0;
        j1 += t1;
        if t0.abs() < 1e-18 && t1.abs() < 1e-18 {
            break;
        }
    }
    (j0, j1)
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j0_j1(x).0
}

/// First positive zero of `J_0`, by Newton's method (`J_0' = -J_1`).
pub fn bessel_j0_first_zero() -> f64 {
    let mut x = 2.4;
    for _ in 0..50 {
        let (j0, j1) = bessel_j0_j1(x);
        let step = j0 / j1;
        x += step;
        if step.abs() < 1e-16 * x {
            break;
        }
    }
    x
}

/// First Dirichlet eigenvalue of the unit disc, `j_{0,1}²`.
pub fn unit_disc_eigenvalue() -> f64 {
    bessel_j0_first_zero().powi(2)
}

/// Pleijel's constant `4 / j_{0,1}²`.
pub fn pleijel_constant() -> f64 {
    4.0 / unit_disc_eigenvalue()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    Bulk,
    Boundary,
    Corner,
    Neck,
}

impl ClassKind {
    pub const ALL: [ClassKind; 4] = [ClassKind::Bulk, ClassKind::Boundary, ClassKind::Corner, ClassKind::Neck];

    pub fn name(self) -> &'static str {
        match self {
            ClassKind::Bulk => "bulk",
            ClassKind::Boundary => "boundary",
            ClassKind::Corner => "corner",
            ClassKind::Neck => "neck",
        }
    }
}

fn check_class_params(x: f64, eps: f64, beta: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(ChainError::Param(format!("normalized eigenvalue {x} must be positive")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(ChainError::Param(format!("epsilon {eps} not in (0, 1/2)")));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(ChainError::Param(format!("beta {beta} not in (0, 1/2)")));
    }
    Ok(())
}

/// Splits a class bound into `(a, b)` with `bound = a + C b`.
fn class_bound_parts(kind: ClassKind, x: f64, eps: f64, beta: f64) -> Result<(f64, f64)> {
    check_class_params(x, eps, beta)?;
    Ok(match kind {
        ClassKind::Bulk => {
            let k = 1.0 / (PI * unit_disc_eigenvalue());
            (
                k * (1.0 + eps) / (1.0 - eps) * x,
                k * (1.0 + 1.0 / eps) / (1.0 - eps) * x.powf(2.0 * beta),
            )
        }
        ClassKind::Boundary => (0.0, x.powf(1.0 - beta) / eps),
        ClassKind::Corner => (0.0, x.powf(3.0 - 6.0 * beta) / eps.powi(4)),
        ClassKind::Neck => (0.0, x.powf(1.0 - beta) / eps + x.powf(3.0 - 6.0 * beta) / eps.powi(4)),
    })
}

/// Upper bound on the number of nodal domains of one class at normalized eigenvalue
/// `x = |Ω| μ`, with constant `c`.
pub fn class_bound(kind: ClassKind, x: f64, eps: f64, beta: f64, c: f64) -> Result<f64> {
    let (a, b) = class_bound_parts(kind, x, eps, beta)?;
    Ok(a + c * b)
}

/// Smallest `C ≥ 0` with `class_bound(kind, x, ..., C) ≥ count` at every data point.
pub fn fit_constants(data: &[(f64, usize)], kind: ClassKind, eps: f64, beta: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(ChainError::Param("no data to fit".into()));
    }
    let mut c: f64 = 0.0;
    for &(x, n) in data {
        let (a, b) = class_bound_parts(kind, x, eps, beta)?;
        c = c.max((n as f64 - a) / b);
    }
    Ok(c)
}

/// Smallest `C ≥ 0` with `M(t) ≤ C L t` on a grid, plus one report per grid point.
pub fn m_linear_check(
    dom: &RealizedDomain,
    consts: &GeometricConstants,
    t_grid: &[f64],
    context: &str,
) -> Result<(f64, Vec<BoundReport>)> {
    let l = dom.perimeter;
    let limit = 0.75
        * l
        * (consts.tau_star * consts.delta_star).min(if consts.kappa_star > 0.0 { 1.0 / consts.kappa_star } else { f64::INFINITY });
    if t_grid.is_empty() {
        return Err(ChainError::Param("empty t grid".into()));
    }
    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !(t > 0.0 && t <= limit) {
            return Err(ChainError::Param(format!("t = {t} outside (0, {limit}]")));
        }
        values.push((t, boundary_neighborhood_area(dom, t)?));
    }
    let c = values.iter().map(|&(t, m)| m / (l * t)).fold(0.0, f64::max);
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
    let mut reports: Vec<BoundReport> = values
        .iter()
        .map(|&(t, m)| BoundReport::new("m_linear", format!("{context} t={t}"), m, c * l * t).with_constant(c))
        .collect();
    let mut mono = BoundReport::new("m_monotone", context, 0.0, 0.0);
    mono.satisfied = monotone && c.is_finite();
    reports.push(mono);
    Ok((c, reports))
}

/// `#{k : values[k] < mu}`; `values` ascending with multiplicity.
fn count_below(values: &[f64], mu: f64) -> Result<usize> {
    let largest = values.last().copied().unwrap_or(f64::NEG_INFINITY);
    if mu > largest {
        return Err(ChainError::Truncation { requested: mu, largest });
    }
    Ok(values.partition_point(|&v| v < mu))
}

/// Weyl deficit `|Ω|μ/(4π) - N(μ)` against `C (|Ω|μ)^{3/4}` on a grid. Returns the
/// smallest admissible `C ≥ 0`, and per grid point the deficit report and the logged
/// ratio `N / (|Ω|μ/(4π))`.
pub fn weyl_check(values: &[f64], area: f64, mu_grid: &[f64], context: &str) -> Result<(f64, Vec<BoundReport>)> {
    let mut rows = Vec::with_capacity(mu_grid.len());
    for &mu in mu_grid {
        let n = count_below(values, mu)? as f64;
        let x = area * mu;
        rows.push((mu, x, x / (4.0 * PI) - n, n));
    }
    let c = rows
        .iter()
        .filter(|r| r.1 > 0.0)
        .map(|r| r.2 / r.1.powf(0.75))
        .fold(0.0, f64::max);
    let mut reports = Vec::new();
    for &(mu, x, deficit, n) in &rows {
        let ctx = format!("{context} mu={mu}");
        reports.push(BoundReport::new("weyl_deficit", ctx.clone(), deficit, c * x.max(0.0).powf(0.75)).with_constant(c));
        if x > 0.0 {
            let ratio = n / (x / (4.0 * PI));
            let mut r = BoundReport::new("weyl_ratio", ctx, ratio, ratio).logged();
            r.satisfied = true;
            reports.push(r);
        }
    }
    Ok((c, reports))
}

/// Neumann eigenvalues `π² (j²/a² + k²/b²)` of an `a x b` rectangle up to `mu_max`,
/// ascending with multiplicity.
pub fn rectangle_neumann_spectrum(a: f64, b: f64, mu_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let jm = (a * mu_max.sqrt() / PI).floor() as usize;
    for j in 0..=jm {
        let ex = (PI * j as f64 / a).powi(2);
        let mut k = 0;
        loop {
            let mu = ex + (PI * k as f64 / b).powi(2);
            if mu > mu_max {
                break;
            }
            out.push(mu);
            k += 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Arithmetic of the final step: `(1+ε)/((1-ε) π j²) < 1/(4π)`.
pub fn hinge_check(eps: f64) -> BoundReport {
    let lhs = (1.0 + eps) / ((1.0 - eps) * PI * unit_disc_eigenvalue());
    let mut r = BoundReport::new("hinge", format!("eps={eps}"), lhs, 1.0 / (4.0 * PI));
    r.satisfied = lhs < r.rhs;
    r
}

/// Courant reports `ν(u_m) ≤ last index of the eigenvalue cluster`.
pub fn courant_reports(rows: &[CourantRow], context: &str) -> Vec<BoundReport> {
    rows.iter()
        .map(|r| {
            let mut b = BoundReport::new("courant", format!("{context} m={}", r.m), r.nu as f64, r.cluster_end as f64);
            b.satisfied = !r.violation;
            b
        })
        .collect()
}

/// `ν ≤ ν₀ + ν₁ + ν₂ + ν₃`.
pub fn class_cover_report(nu: usize, counts: [usize; 4], context: &str) -> BoundReport {
    BoundReport::new("class_cover", context, nu as f64, counts.iter().sum::<usize>() as f64)
}

/// Width-uniform Courant-sharp data of one member of a width family.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateRow {
    pub width: f64,
    pub area: f64,
    /// Largest sharp index beyond the constant mode.
    pub sharp_index: Option<usize>,
    /// `|Ω(w)| μ` at that index.
    pub normalized: Option<f64>,
    /// Whether enough eigenpairs were computed (three times the sharp index).
    pub resolved: bool,
}

/// Per-width maxima, the certificate (maximum over widths) and the flatness ratio
/// `max_w x_w / min_w x_w`.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub rows: Vec<CertificateRow>,
    pub certificate: Option<f64>,
    pub flatness: Option<f64>,
    /// `(width, m, ν/m)` for every computed eigenpair.
    pub pleijel: Vec<(f64, usize, f64)>,
}

impl Certificate {
    /// `width,area,sharp_index,normalized,resolved` rows plus a `max` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("width,area,sharp_index,normalized,resolved\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.9e},{},{},{}",
                r.width,
                r.area,
                r.sharp_index.map(|m| m.to_string()).unwrap_or_default(),
                opt(r.normalized),
                r.resolved
            );
        }
        let _ = writeln!(s, "max,,,{},flatness={}", opt(self.certificate), opt(self.flatness));
        s
    }

    pub fn pleijel_csv(&self) -> String {
        let mut s = String::from("width,m,ratio\n");
        for (w, m, r) in &self.pleijel {
            let _ = writeln!(s, "{w},{m},{r:.6}");
        }
        s
    }
}

/// Certificate over a width family from `(width, area, Courant rows)` entries.
pub fn sharp_certificate(family: &[(f64, f64, Vec<CourantRow>)]) -> Certificate {
    let mut rows = Vec::new();
    let mut pleijel = Vec::new();
    for (w, area, courant) in family {
        let best = courant.iter().filter(|r| r.sharp && r.m >= 2).max_by_key(|r| r.m);
        rows.push(CertificateRow {
            width: *w,
            area: *area,
            sharp_index: best.map(|r| r.m),
            normalized: best.map(|r| area * r.mu),
            resolved: best.is_none_or(|r| courant.len() >= 3 * r.m),
        });
        pleijel.extend(courant.iter().map(|r| (*w, r.m, r.nu as f64 / r.m as f64)));
    }
    let xs: Vec<f64> = rows.iter().filter_map(|r| r.normalized).collect();
    let certificate = xs.iter().copied().reduce(f64::max);
    let flatness = (xs.len() == rows.len() && !xs.is_empty())
        .then(|| certificate.unwrap() / xs.iter().copied().fold(f64::INFINITY, f64::min));
    Certificate {
        rows,
        certificate,
        flatness,
        pleijel,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_zero_and_pleijel() {
        // bisection on the series, independent of the Newton iteration
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if bessel_j0(a) * bessel_j0(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let j = bessel_j0_first_zero();
        assert!((j - 0.5 * (a + b)).abs() < 1e-13);
        assert!((j - 2.404825557695773).abs() < 1e-12);
        let p = pleijel_constant();
        assert!((0.6916..=0.6918).contains(&p));
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-16);
    }

    #[test]
    fn class_bound_values() {
        let bulk = class_bound(ClassKind::Bulk, 1000.0, 0.25, 0.375, 1.0).unwrap();
        assert!((bulk - 157.0).abs() < 0.1, "{bulk}");
        let bd = class_bound(ClassKind::Boundary, 1e4, 0.1, 0.375, 1.0).unwrap();
        assert!((bd - 10.0 * 10f64.powf(2.5)).abs() < 1e-9);
        assert!(class_bound(ClassKind::Corner, 10.0, 0.1, 0.5, 1.0).is_err());
        assert!(class_bound(ClassKind::Neck, -1.0, 0.1, 0.3, 1.0).is_err());
    }

    #[test]
    fn fitting_is_tight_and_monotone() {
        assert_eq!(fit_constants(&[(100.0, 0)], ClassKind::Boundary, 0.1, 0.375).unwrap(), 0.0);
        assert!(fit_constants(&[], ClassKind::Boundary, 0.1, 0.375).is_err());
        let data = vec![(100.0, 5), (1000.0, 12), (5000.0, 30)];
        let c = fit_constants(&data, ClassKind::Boundary, 0.1, 0.375).unwrap();
        let tight = data
            .iter()
            .any(|&(x, n)| (class_bound(ClassKind::Boundary, x, 0.1, 0.375, c).unwrap() - n as f64).abs() < 1e-9);
        assert!(tight);
        let mut more = data.clone();
        more.push((5000.0, 1));
        assert_eq!(fit_constants(&more, ClassKind::Boundary, 0.1, 0.375).unwrap(), c);
    }

    #[test]
    fn weyl_on_square() {
        let values = rectangle_neumann_spectrum(2.0, 2.0, 2000.0);
        assert_eq!(values[0], 0.0);
        let (_, reps) = weyl_check(&values, 4.0, &[50.0], "square").unwrap();
        // N(50) counts j² + k² < 200/π² ≈ 20.26
        assert_eq!(count_below(&values, 50.0).unwrap(), 22);
        assert!(reps[0].lhs < 0.0);
        assert!(weyl_check(&values, 4.0, &[3000.0], "square").is_err());
    }

    #[test]
    fn hinge_and_sublinearity() {
        let h = hinge_check(0.1);
        assert!(h.satisfied);
        assert!((h.lhs - 0.06727).abs() < 5e-5);
        assert!((h.rhs - 0.07958).abs() < 5e-6);
        for kind in [ClassKind::Boundary, ClassKind::Corner, ClassKind::Neck] {
            let r: Vec<f64> = [1e3, 1e4, 1e5]
                .iter()
                .map(|&x| class_bound(kind, x, 0.1, 0.375, 1.0).unwrap() / x)
                .collect();
            assert!(r[0] > r[1] && r[1] > r[2], "{kind:?}");
        }
    }

    #[test]
    fn certificate_on_square_rows() {
        let row = |m: usize, mu: f64, nu: usize, sharp: bool| CourantRow {
            m,
            mu,
            nu,
            cluster: m,
            cluster_end: m,
            sharp,
            violation: false,
        };
        let q = PI * PI / 4.0;
        let rows = vec![row(1, 0.0, 1, true), row(2, q, 2, true), row(3, q, 2, false), row(4, 2.0 * q, 2, false)];
        let cert = sharp_certificate(&[(1.0, 4.0, rows.clone()), (0.5, 4.0, rows)]);
        assert_eq!(cert.rows[0].sharp_index, Some(2));
        assert!((cert.certificate.unwrap() - PI * PI).abs() < 1e-12);
        assert_eq!(cert.flatness, Some(1.0));
        assert_eq!(cert.to_csv().lines().count(), 4);
        assert_eq!(cert.pleijel.len(), 8);
    }
}
