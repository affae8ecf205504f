use std::f64::consts::PI;

use proptest::prelude::*;
use torus_eig::bounds::{bound_breakdown, upper_bound_u};
use torus_eig::energy::{dirichlet_energy, mobius_energy, sample_map, TorusGrid, TrigMap};
use torus_eig::flat_spectrum::{enumerate_spectrum, normalized_eigenvalue};
use torus_eig::moduli::{reduce_to_fundamental, LatticeBasis};
use torus_eig::scan::{parse_csv, write_csv, Range, ScanRow};
use torus_eig::sphere::{cap_reflection, fold, mobius_apply, mobius_inverse, BallPoint, Cap, SpherePoint};
use torus_eig::weight_expr::parse;
use torus_eig::TorusParams;

/// First `count` nonzero values of `4π²|k|² · area` over the dual lattice of
/// the lattice spanned by `v1`, `v2`, by brute force.
fn brute_force_spectrum(v1: [f64; 2], v2: [f64; 2], count: usize) -> Vec<f64> {
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    // dual basis: w_i · v_j = δ_ij
    let w1 = [v2[1] / det, -v2[0] / det];
    let w2 = [-v1[1] / det, v1[0] / det];
    let mut vals = Vec::new();
    let n = 40;
    for i in -n..=n {
        for j in -n..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let k = [i as f64 * w1[0] + j as f64 * w2[0], i as f64 * w1[1] + j as f64 * w2[1]];
            vals.push(4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1]) * det.abs());
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    vals
}

fn moduli() -> impl Strategy<Value = TorusParams> {
    (0.0..=0.5f64, 0.0..3.0f64).prop_map(|(a, extra)| TorusParams::new(a, (1.0 - a * a).sqrt() + extra).unwrap())
}

fn sphere_point(dim: usize) -> impl Strategy<Value = SpherePoint> {
    prop::collection::vec(-1.0..1.0f64, dim)
        .prop_filter("away from the origin", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| SpherePoint::new(v).unwrap())
}

fn ball_point(dim: usize, max: f64) -> impl Strategy<Value = BallPoint> {
    (sphere_point(dim), 0.0..max)
        .prop_map(|(p, r)| BallPoint::new(p.as_slice().iter().map(|x| r * x).collect()).unwrap())
}

fn basis() -> impl Strategy<Value = LatticeBasis> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_filter_map("non-degenerate", |(a, b, c, d)| {
        let det = a * d - b * c;
        (det.abs() > 0.05 * (a.hypot(b) * c.hypot(d)).max(1e-3)).then(|| LatticeBasis::new([a, b], [c, d]).ok())?
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_is_idempotent(b in basis()) {
        let (p, _) = reduce_to_fundamental(&b).unwrap();
        prop_assert!(p.is_in_fundamental_region());
        let (q, s) = reduce_to_fundamental(&LatticeBasis::new([1.0, 0.0], [p.a(), p.b()]).unwrap()).unwrap();
        prop_assert!((q.a() - p.a()).abs() < 1e-12 && (q.b() - p.b()).abs() < 1e-12);
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_is_scale_equivariant(b in basis(), c in 0.1..10.0f64) {
        let (p, s) = reduce_to_fundamental(&b).unwrap();
        let (q, t) = reduce_to_fundamental(&b.scaled(c).unwrap()).unwrap();
        prop_assert!((q.a() - p.a()).abs() < 1e-9 && (q.b() - p.b()).abs() < 1e-9);
        prop_assert!((t - c * s).abs() < 1e-9 * t);
    }

    #[test]
    fn reduction_preserves_normalized_spectrum(b in basis()) {
        let (p, _) = reduce_to_fundamental(&b).unwrap();
        let direct = brute_force_spectrum(b.v1, b.v2, 10);
        let spec = enumerate_spectrum(&p, 10).unwrap();
        for (k, want) in direct.iter().enumerate() {
            let got = spec.eigenvalue(k + 1).unwrap() * p.flat_area();
            prop_assert!((got - want).abs() < 1e-9 * want, "k={} {} {}", k + 1, got, want);
        }
    }

    #[test]
    fn u_is_monotone(p in moduli(), da in 0.0..0.1f64, db in 0.0..0.5f64) {
        let u = upper_bound_u(&p);
        let a2 = (p.a() + da).min(0.5);
        prop_assert!(upper_bound_u(&TorusParams::new(a2, p.b()).unwrap()) >= u * (1.0 - 1e-14));
        prop_assert!(upper_bound_u(&TorusParams::new(p.a(), p.b() + db).unwrap()) <= u * (1.0 + 1e-14));
        prop_assert!(u <= 16.0 * PI * PI / 3f64.sqrt() * (1.0 + 1e-14));
    }

    #[test]
    fn two_branch_minimum(p in moduli()) {
        let br = bound_breakdown(&p);
        prop_assert!(br.f_at_r0 <= br.low_branch * (1.0 + 1e-12));
        prop_assert!((br.u - br.f_at_r0.min(br.low_branch)).abs() <= 1e-12 * br.u);
    }

    #[test]
    fn flat_lambda2_below_bound(p in moduli()) {
        prop_assert!(normalized_eigenvalue(&p, 2).unwrap() < upper_bound_u(&p));
    }

    #[test]
    fn mobius_preserves_sphere_and_inverts(xi in ball_point(4, 0.95), p in sphere_point(4)) {
        let q = mobius_apply(&xi, &p).unwrap();
        let n: f64 = q.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() < 1e-12);
        prop_assert!(mobius_inverse(&xi, &q).unwrap().distance(&p) < 1e-10);
        prop_assert!(mobius_apply(&xi.neg(), &q).unwrap().distance(&p) < 1e-10);
    }

    #[test]
    fn cap_reflection_is_an_involution(c in sphere_point(4), t in -0.9..0.9f64, x in sphere_point(4)) {
        let cap = Cap::new(c, t).unwrap();
        let y = cap_reflection(&cap, &x).unwrap();
        prop_assert!(cap_reflection(&cap, &y).unwrap().distance(&x) < 1e-10);
        let f = fold(&cap, &x).unwrap();
        prop_assert!(fold(&cap, &f).unwrap().distance(&f) < 1e-10);
        let h: f64 = f.as_slice().iter().zip(cap.center().as_slice()).map(|(a, b)| a * b).sum();
        prop_assert!(h >= -t - 1e-9);
    }

    #[test]
    fn expression_parser_never_panics(s in "[-+*() .0-9a-z]{0,24}") {
        let _ = parse(&s);
    }

    #[test]
    fn csv_round_trip_is_exact(p in moduli()) {
        let rows = vec![ScanRow::at(&p).unwrap()];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn range_hits_both_ends(min in -5.0..5.0f64, width in 0.0..5.0f64, steps in 2usize..50) {
        let r = Range::new(min, min + width, steps).unwrap();
        let v = r.values();
        prop_assert_eq!(v.len(), steps);
        prop_assert_eq!(v[0], min);
        prop_assert!((v[steps - 1] - (min + width)).abs() <= 1e-12 * (1.0 + min.abs() + width));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_ratio_is_mobius_invariant(p1 in moduli(), p2 in moduli(), r in 0.5..0.95f64, xi in ball_point(4, 0.8)) {
        let energies = |p: TorusParams| {
            let grid = TorusGrid::square(p, 32).unwrap();
            let s = sample_map(&grid, &TrigMap::psi3(p, r).unwrap(), true);
            (dirichlet_energy(&s, &grid), mobius_energy(&s, &grid, xi.as_slice()))
        };
        let (e1, x1) = energies(p1);
        let (e2, x2) = energies(p2);
        prop_assert!(((x1 / x2) - (e1 / e2)).abs() < 1e-10 * (e1 / e2));
    }
}
