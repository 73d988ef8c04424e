//! Frozen reference values with independent closed forms.

use std::f64::consts::{E, FRAC_PI_2, PI};

use degenlab::geometry::{distance_d, r_xi, region_volume, DegeneracyParams, Point, Region, VolumeMethod};
use degenlab::heat::{evolve_kernel, kernel_symmetry_check};
use degenlab::sde::{hitting_oracle, scale_function};
use degenlab::spectral::{chi_log, chi_n_rayleigh, chi_n_variance_half, poincare_constant, Conductance, Resolution};

#[test]
fn distance_on_the_flat_plane() {
    let p = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
    let d = distance_d(&p, &Point::new(vec![1.0], vec![0.0]), &Point::new(vec![0.0], vec![0.0])).unwrap();
    assert_eq!(d, 1.0);
    // |x1 - y1| + |x2 - y2| / 2 with both weights equal to 1
    let d = distance_d(&p, &Point::new(vec![0.0], vec![1.0]), &Point::new(vec![0.0], vec![-1.0])).unwrap();
    assert!((d - 1.0).abs() < 1e-15);
}

#[test]
fn r_xi_uses_the_branch_of_xi() {
    let p = DegeneracyParams::new(1, 1, 0.5, 0.75, 0.0, 0.0).unwrap();
    assert!((r_xi(&p, &[0.25]) - 0.5).abs() < 1e-15);
    assert!((r_xi(&p, &[16.0]) - 2.0).abs() < 1e-15);
}

#[test]
fn flat_cube_volume() {
    let p = DegeneracyParams::new(2, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
    let v = region_volume(&p, &Region::Cube { t: 2.0 }, VolumeMethod::Grid { resolution: 8 }).unwrap();
    assert!((v.estimate - 64.0).abs() < 1e-12);
}

#[test]
fn neumann_cosine_gap() {
    let p = DegeneracyParams::line(0.0, 0.0).unwrap();
    let g = poincare_constant(&p, &Region::Interval { a: -1.0, b: 1.0 }, Resolution::line(513), Conductance::Harmonic).unwrap();
    assert!((g.gap - FRAC_PI_2 * FRAC_PI_2).abs() < 1e-4 * g.gap);
    assert!((g.normalized - g.gap).abs() < 1e-15);
}

#[test]
fn half_interval_gap_is_refinement_stable() {
    let p = DegeneracyParams::line(0.75, 0.75).unwrap();
    let g = |n| poincare_constant(&p, &Region::HalfInterval { b: 1.0 }, Resolution::line(n), Conductance::Harmonic).unwrap().gap;
    let (a, b) = (g(513), g(1025));
    assert!(a > 0.1 && (a - b).abs() < 1e-3 * b);
}

#[test]
fn cutoff_energy_and_variance_at_one_half() {
    let n = 10f64.powi(4);
    let r = chi_n_rayleigh(0.5, n).unwrap();
    assert!((r.energy - 2.0 / n.ln()).abs() < 1e-15);
    assert!((r.variance - chi_n_variance_half(n)).abs() < 1e-10);
    assert!(r.ratio <= 3.0 / n.ln());
}

#[test]
fn log_profile_energy() {
    let r = chi_log(0.0, 0.5, E).unwrap();
    // half-width e^2, energy 2 (1 + 2)
    assert!((r.half_width - E * E).abs() < 1e-12);
    assert!((r.energy - 6.0).abs() < 1e-12);
}

#[test]
fn gaussian_kernel_at_probe_points() {
    let p = DegeneracyParams::line(0.0, 0.0).unwrap();
    let f = evolve_kernel(&p, &Region::Interval { a: -8.0, b: 8.0 }, &Point::new(vec![0.0], vec![]), 0.25, 1e-3, Resolution::line(2049)).unwrap();
    for y in [0.0, 0.3, 0.8, 1.2, 1.7] {
        let i = f.nearest(&Point::new(vec![y], vec![]));
        let x = f.form.nodes[i].x1[0];
        let want = (-x * x).exp() / PI.sqrt();
        assert!((f.values[i] - want).abs() < 0.01 * want, "at {x}: {} vs {want}", f.values[i]);
    }
}

#[test]
fn kernel_symmetry() {
    let p = DegeneracyParams::line(0.25, 0.25).unwrap();
    let r = Region::Interval { a: -6.0, b: 6.0 };
    let d = kernel_symmetry_check(&p, &r, &Point::new(vec![0.4], vec![]), &Point::new(vec![-1.1], vec![]), 0.2, 1e-3, Resolution::line(2049)).unwrap();
    assert!(d <= 1e-4);
    let x = Point::new(vec![0.4], vec![]);
    assert_eq!(kernel_symmetry_check(&p, &r, &x, &x, 0.2, 1e-3, Resolution::line(257)).unwrap(), 0.0);
}

#[test]
fn scale_function_and_hitting_values() {
    assert!((scale_function(0.5, E) - 2.0).abs() < 1e-15);
    assert!((scale_function(0.75, 1e16) - 3.0).abs() < 1e-7);
    assert!((hitting_oracle(0.0, 0.0, 5.0, 10.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((hitting_oracle(0.75, 0.0, 5.0, 100.0).unwrap() - 0.248_009_711_071_398).abs() < 1e-12);
    // grows with b towards (3 - s(5)) / 3
    let lim = (3.0 - scale_function(0.75, 5.0)) / 3.0;
    let far = hitting_oracle(0.75, 0.0, 5.0, 1e12).unwrap();
    assert!(far > hitting_oracle(0.75, 0.0, 5.0, 1000.0).unwrap() && (far - lim).abs() < 1e-5);
}
