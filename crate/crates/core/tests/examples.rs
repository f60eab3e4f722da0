//! Worked examples across modules, checked against closed forms.

use std::f64::consts::PI;

use chainlab::bounds::{m_linear_check, sharp_certificate, ClassKind, class_bound};
use chainlab::fem::{solve, BoundaryCondition};
use chainlab::geometry::{
    boundary_neighborhood_area, constants_for, realize_config, rectangle, two_squares, DomainConfig, WidthFamily,
};
use chainlab::mesh::triangulate;
use chainlab::nodal::{courant_report, extract_nodal_domains, CourantRow, DEFAULT_CLUSTER_RTOL, DEFAULT_ZERO_TOL};

fn square(side: f64) -> DomainConfig {
    DomainConfig {
        pieces: vec![rectangle(0.0, 0.0, side, side)],
        necks: vec![],
        widths: WidthFamily::default(),
        constants: None,
    }
}

#[test]
fn unit_square_collar_area() {
    let dom = realize_config(&square(1.0), 0.05).unwrap();
    let m = boundary_neighborhood_area(&dom, 0.1).unwrap();
    // 1 - (1 - 2t)^2
    assert!((m - 0.36).abs() < 1e-12);
    assert!((m / (dom.perimeter * 0.1) - 0.9).abs() < 1e-12);
}

#[test]
fn figure_one_collar_constant() {
    let cfg = two_squares(0.5);
    let consts = constants_for(&cfg, 64).unwrap();
    let dom = realize_config(&cfg, 0.05).unwrap();
    let (c, reports) = m_linear_check(&dom, &consts, &[0.005, 0.01, 0.02], "figure").unwrap();
    assert!((0.9..=1.3).contains(&c), "{c}");
    assert!(reports.iter().all(|r| r.satisfied));
    assert!(m_linear_check(&dom, &consts, &[100.0], "figure").is_err());
}

#[test]
fn square_second_mode_is_sharp() {
    let cfg = square(2.0);
    let dom = realize_config(&cfg, 0.05).unwrap();
    let mesh = triangulate(&dom, 0.05).unwrap();
    let spec = solve(&mesh, BoundaryCondition::Neumann, 12, 0).unwrap();
    let nus: Vec<usize> = spec
        .pairs
        .iter()
        .map(|p| extract_nodal_domains(&mesh, &p.coeffs, DEFAULT_ZERO_TOL).unwrap().nu)
        .collect();
    let rows = courant_report(&spec, &nus, DEFAULT_CLUSTER_RTOL);
    assert!(rows[0].sharp && rows[1].sharp);
    let x = mesh.area() * rows[1].mu;
    assert!((x / (PI * PI) - 1.0).abs() < 0.01, "{x}");
    let cert = sharp_certificate(&[(1.0, mesh.area(), rows)]);
    assert!(cert.rows[0].sharp_index.unwrap() >= 2);
}

#[test]
fn square_pleijel_ratios_from_product_modes() {
    // analytic enumeration: eigenvalue j^2 + k^2 (units of pi^2/4) with (j+1)(k+1) domains
    let mut modes: Vec<(usize, usize, usize)> = (0..40).flat_map(|j| (0..40).map(move |k| (j * j + k * k, j, k))).collect();
    modes.sort();
    let rows: Vec<CourantRow> = modes
        .iter()
        .take(120)
        .enumerate()
        .map(|(i, &(e, j, k))| CourantRow {
            m: i + 1,
            mu: e as f64 * PI * PI / 4.0,
            nu: (j + 1) * (k + 1),
            cluster: i + 1,
            cluster_end: i + 1,
            sharp: false,
            violation: false,
        })
        .collect();
    let cert = sharp_certificate(&[(1.0, 4.0, rows)]);
    let max = cert
        .pleijel
        .iter()
        .filter(|(_, m, _)| (60..=120).contains(m))
        .map(|p| p.2)
        .fold(0.0, f64::max);
    // the (6, 6) mode has 49 domains at index 65 whatever the order inside clusters
    assert!((max - 49.0 / 65.0).abs() < 1e-12, "{max}");
    assert!((0.55..=0.76).contains(&max));
}

#[test]
fn bulk_bound_tends_to_the_hinge_slope() {
    let k = 1.0 / (PI * chainlab::bounds::unit_disc_eigenvalue()) * 1.1 / 0.9;
    let q = class_bound(ClassKind::Bulk, 1e12, 0.1, 0.375, 1.0).unwrap() / 1e12;
    assert!((q / k - 1.0).abs() < 1e-2);
    // the corner term grows like x^(3/4), so its slope falls by 10 per factor 1e4
    let s = |x: f64| class_bound(ClassKind::Corner, x, 0.1, 0.375, 1.0).unwrap() / x;
    assert!((s(1e12) / s(1e16) - 10.0).abs() < 1e-9);
}
