//! Property tests of structural invariants.

use proptest::prelude::*;

use chainlab::bounds::{class_bound, rectangle_neumann_spectrum, star_polygon, BoundReport, ClassKind};
use chainlab::geometry::{constants_for, polygon_neighborhood_area, realize_config, two_squares, Point};
use chainlab::mesh::rectangle_mesh;
use chainlab::nodal::{clusters, extract_nodal_domains};
use chainlab::partition::{max_delta, CutoffField, PartitionParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clusters_are_contiguous(mut v in proptest::collection::vec(0.0f64..100.0, 1..40), rtol in 1e-6f64..0.1) {
        v.sort_by(f64::total_cmp);
        let c = clusters(&v, rtol);
        for (k, &(first, last)) in c.iter().enumerate() {
            prop_assert!(first <= k + 1 && k < last && last <= v.len());
            for j in first..=last {
                prop_assert_eq!(c[j - 1], (first, last));
            }
        }
    }

    #[test]
    fn nodal_count_ignores_sign_and_scale(seed in proptest::collection::vec(-1.0f64..1.0, 9), scale in 0.01f64..100.0) {
        // a smooth random function on a small grid
        let mesh = rectangle_mesh(0.0, 0.0, 1.0, 1.0, 12, 12).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|p| {
            let mut s = 0.0;
            for (k, a) in seed.iter().enumerate() {
                let (i, j) = ((k / 3) as f64, (k % 3) as f64);
                s += a * (3.0 * i * p.x + 1.7 * j * p.y + k as f64).cos();
            }
            s
        }).collect();
        prop_assume!(u.iter().any(|v| v.abs() > 1e-3));
        let base = extract_nodal_domains(&mesh, &u, 1e-8).unwrap();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let big: Vec<f64> = u.iter().map(|v| scale * v).collect();
        let flipped = extract_nodal_domains(&mesh, &neg, 1e-8).unwrap();
        prop_assert_eq!(flipped.nu, base.nu);
        prop_assert_eq!(extract_nodal_domains(&mesh, &big, 1e-8).unwrap().nu, base.nu);
        let total: f64 = base.domains.iter().map(|d| d.area).sum();
        prop_assert!(total <= 1.0 + 1e-12);
        for (a, b) in base.domains.iter().zip(&flipped.domains) {
            prop_assert_eq!(a.sign, -b.sign);
        }
    }

    #[test]
    fn class_bounds_grow_with_x_and_constant(x in 1.0f64..1e6, c in 0.0f64..10.0, eps in 0.01f64..0.49, beta in 0.05f64..0.45) {
        for kind in ClassKind::ALL {
            let b = class_bound(kind, x, eps, beta, c).unwrap();
            prop_assert!(b >= 0.0);
            prop_assert!(class_bound(kind, 2.0 * x, eps, beta, c).unwrap() >= b);
            prop_assert!(class_bound(kind, x, eps, beta, c + 1.0).unwrap() >= b);
        }
    }

    #[test]
    fn report_satisfied_iff_ordered(lhs in -1e6f64..1e6, rhs in -1e6f64..1e6) {
        prop_assert_eq!(BoundReport::new("x", "y", lhs, rhs).satisfied, lhs <= rhs);
    }

    #[test]
    fn neighbourhood_area_is_monotone_and_linear_at_most(a2 in 0.0f64..0.15, a3 in 0.0f64..0.15, t in 0.001f64..0.05) {
        let poly = star_polygon(Point::new(0.0, 0.0), 1.0, &[(a2, 0.3), (a3, 1.1)], 96);
        let per: f64 = (0..poly.len()).map(|k| poly[k].dist(poly[(k + 1) % poly.len()])).sum();
        let m1 = polygon_neighborhood_area(std::slice::from_ref(&poly), t).unwrap();
        let m2 = polygon_neighborhood_area(&[poly], 2.0 * t).unwrap();
        prop_assert!(m1 > 0.0 && m2 >= m1);
        // reflex vertices add at most a wedge per vertex
        prop_assert!(m1 <= per * t * 1.05);
    }

    #[test]
    fn rectangle_spectrum_counts(a in 0.5f64..3.0, b in 0.5f64..3.0, mu in 1.0f64..400.0) {
        let v = rectangle_neumann_spectrum(a, b, mu);
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(v.iter().all(|&x| x <= mu) && v[0] == 0.0);
        let brute = (0..200).flat_map(|j| (0..200).map(move |k| (j, k)))
            .filter(|&(j, k)| {
                let x = std::f64::consts::PI.powi(2) * ((j * j) as f64 / (a * a) + (k * k) as f64 / (b * b));
                x <= mu
            })
            .count();
        prop_assert_eq!(v.len(), brute);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cutoffs_form_a_partition_of_unity(w in 0.02f64..0.6, xs in proptest::collection::vec((-3.0f64..3.0, -1.0f64..1.0), 64)) {
        let cfg = two_squares(w);
        let consts = constants_for(&cfg, 32).unwrap();
        let dom = realize_config(&cfg, 0.05).unwrap();
        let params = PartitionParams::new(&dom, &consts, max_delta(&dom, &consts)).unwrap();
        let field = CutoffField::new(&dom, &params);
        for (x, y) in xs {
            let p = Point::new(x, y);
            if !dom.contains(p) {
                continue;
            }
            let c = field.eval(p).chi;
            prop_assert!(c.iter().all(|v| (0.0..=1.0 + 1e-15).contains(v)));
            prop_assert!((c.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
