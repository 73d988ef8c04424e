use proptest::prelude::*;

use degenlab::geometry::{ball_length_1d, distance_d, ppow, scale_point, DegeneracyParams, Pair, Point, Region};
use degenlab::heat::evolve_kernel;
use degenlab::sde::{hitting_oracle, scale_function};
use degenlab::spectral::{assemble_region_form, chi_n_value, Conductance, Resolution};

fn params() -> impl Strategy<Value = DegeneracyParams> {
    (1usize..=2, 0usize..=2, 0.0..0.95f64, 0.0..0.95f64, 0.0..2.0f64, 0.0..2.0f64)
        .prop_map(|(n, m, a, b, c, d)| DegeneracyParams::new(n, m, a, b, c, d).unwrap())
}

fn isotropic() -> impl Strategy<Value = DegeneracyParams> {
    (1usize..=2, 0usize..=2, 0.0..0.9f64, 0.0..1.5f64).prop_map(|(n, m, a, c)| DegeneracyParams::new(n, m, a, a, c, c).unwrap())
}

fn point_for(p: &DegeneracyParams) -> impl Strategy<Value = Point> {
    (prop::collection::vec(-10.0..10.0f64, p.n), prop::collection::vec(-10.0..10.0f64, p.m)).prop_map(|(a, b)| Point::new(a, b))
}

fn two_points() -> impl Strategy<Value = (DegeneracyParams, Point, Point)> {
    params().prop_flat_map(|p| {
        let (x, y) = (point_for(&p), point_for(&p));
        (Just(p), x, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_symmetric((p, x, y) in two_points()) {
        let a = distance_d(&p, &x, &y).unwrap();
        let b = distance_d(&p, &y, &x).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        prop_assert_eq!(distance_d(&p, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn distance_scales_linearly_when_isotropic(
        (p, x, y) in isotropic().prop_flat_map(|p| { let (x, y) = (point_for(&p), point_for(&p)); (Just(p), x, y) }),
        t in 0.05..20.0f64,
    ) {
        let d = distance_d(&p, &x, &y).unwrap();
        let ds = distance_d(&p, &scale_point(&p, t, &x).unwrap(), &scale_point(&p, t, &y).unwrap()).unwrap();
        prop_assert!((ds - t * d).abs() <= 1e-9 * (t * d).max(1e-300), "{} vs {}", ds, t * d);
    }

    #[test]
    fn scaling_is_a_semigroup_when_isotropic(
        (p, x) in isotropic().prop_flat_map(|p| { let x = point_for(&p); (Just(p), x) }),
        s in 0.1..10.0f64,
        t in 0.1..10.0f64,
    ) {
        let a = scale_point(&p, s, &scale_point(&p, t, &x).unwrap()).unwrap();
        let b = scale_point(&p, s * t, &x).unwrap();
        for (u, v) in a.x1.iter().chain(&a.x2).zip(b.x1.iter().chain(&b.x2)) {
            prop_assert!((u - v).abs() <= 1e-10 * v.abs().max(1.0));
        }
    }

    #[test]
    fn piecewise_power_is_monotone(a in 0.0..50.0f64, da in 0.0..50.0f64, e in 0.0..3.0f64, ep in 0.0..3.0f64) {
        let p = Pair::new(e, ep);
        prop_assert!(ppow(a + da, p) >= ppow(a, p));
    }

    #[test]
    fn line_balls_grow_with_radius(d1 in 0.0..0.95f64, d1p in 0.0..0.95f64, c in -5.0..5.0f64, r in 0.01..5.0f64, dr in 0.0..5.0f64) {
        let p = DegeneracyParams::line(d1, d1p).unwrap();
        let ball = |r| Region::Ball { center: Point::new(vec![c], vec![]), r };
        let (a0, b0) = ball_length_1d(&p, &ball(r)).unwrap();
        let (a1, b1) = ball_length_1d(&p, &ball(r + dr)).unwrap();
        prop_assert!(a1 <= a0 && b1 >= b0);
    }

    #[test]
    fn stiffness_rows_sum_to_zero(d1 in 0.0..0.95f64, d1p in 0.0..0.95f64, d2 in 0.0..1.5f64, m in 0usize..=1, r in 0.2..4.0f64) {
        let p = DegeneracyParams::new(1, m, d1, d1p, d2, d2).unwrap();
        let res = if m == 0 { Resolution::line(65) } else { Resolution::Uniform { n1: 17, n2: 17 } };
        let f = assemble_region_form(&p, &Region::Cube { t: r }, res, Conductance::Harmonic).unwrap();
        let scale = f.stiffness_inf_norm().max(1e-300);
        for s in f.row_sums() {
            prop_assert!(s.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn heat_conserves_mass(d1 in 0.0..0.95f64, d1p in 0.0..0.95f64, x0 in -1.0..1.0f64) {
        let p = DegeneracyParams::line(d1, d1p).unwrap();
        let f = evolve_kernel(&p, &Region::Interval { a: -2.0, b: 2.0 }, &Point::new(vec![x0], vec![]), 0.05, 5e-3, Resolution::line(101)).unwrap();
        prop_assert!((f.mass - 1.0).abs() <= 1e-9);
        let max = f.values.iter().cloned().fold(0.0, f64::max);
        prop_assert!(f.values.iter().all(|v| *v >= -1e-10 * max));
    }

    #[test]
    fn scale_function_is_odd_and_increasing(dp in 0.0..0.99f64, x in -1e3..1e3f64, dx in 1e-6..10.0f64) {
        prop_assert_eq!(scale_function(dp, -x), -scale_function(dp, x));
        prop_assert!(scale_function(dp, x + dx) > scale_function(dp, x));
    }

    #[test]
    fn hitting_oracle_is_monotone(dp in 0.0..0.99f64, a in -10.0..0.0f64, w in 0.1..50.0f64, u in 0.0..1.0f64, du in 0.0..1.0f64, db in 0.0..100.0f64) {
        let b = a + w;
        let x0 = a + u * w;
        let x1 = x0 + du * (b - x0);
        let p0 = hitting_oracle(dp, a, x0, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&p0));
        prop_assert!(hitting_oracle(dp, a, x1, b).unwrap() <= p0 + 1e-15);
        prop_assert!(hitting_oracle(dp, a, x0, b + db).unwrap() >= p0 - 1e-15);
    }

    #[test]
    fn cutoff_is_odd_and_bounded(d1 in 0.0..0.99f64, n in 2.0..1e6f64, x in -3.0..3.0f64) {
        let v = chi_n_value(d1, n, x);
        prop_assert_eq!(chi_n_value(d1, n, -x), -v);
        prop_assert!(v.abs() <= 1.0);
    }
}
