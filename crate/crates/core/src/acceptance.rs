//! Pinned acceptance suite shared by `degenlab accept` and the `acceptance` test target.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{
    check_embeddings, check_intertwining, check_scaling_bounds, doubling_ratio, find_kappa, region_volume,
    DegeneracyParams, Point, Region, VolumeMethod,
};
use crate::heat::{crossing_mass, evolve_kernel, fit_gaussian_bounds, ondiag_lower, semigroup_check};
use crate::quad::integrate;
use crate::sde::{bundled_test_functions, ends_transform_check, simulate_hitting, HittingExperiment};
use crate::spectral::{chi_n_rayleigh, poincare_constant, poincare_sweep, Conductance, Family, Resolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Geometry,
    Spectral,
    Heat,
    Sde,
    All,
}

impl std::str::FromStr for Suite {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometry" => Ok(Suite::Geometry),
            "spectral" => Ok(Suite::Spectral),
            "heat" => Ok(Suite::Heat),
            "sde" => Ok(Suite::Sde),
            "all" => Ok(Suite::All),
            _ => invalid(format!("unknown suite '{s}' (geometry, spectral, heat, sde, all)")),
        }
    }
}

impl Suite {
    pub fn criteria(self) -> &'static [u32] {
        match self {
            Suite::Geometry => &[1, 2, 3, 10],
            Suite::Spectral => &[4, 5, 6, 7, 8, 9],
            Suite::Heat => &[11, 12, 13, 14],
            Suite::Sde => &[15, 16],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub claim: String,
    pub measured: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} | measured: {} | tolerance: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.claim,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub suite: Suite,
    pub criteria: Vec<Criterion>,
    pub passed: usize,
    pub failed: usize,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// One line per criterion followed by a summary line.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            let _ = writeln!(s, "{}", c.line());
        }
        let _ = writeln!(s, "{} passed, {} failed", self.passed, self.failed);
        s
    }
}

fn crit(id: u32, claim: &str, tolerance: &str, body: impl FnOnce() -> Result<(bool, String)>) -> Criterion {
    let (pass, measured) = match body() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Criterion { id, claim: claim.into(), measured, tolerance: tolerance.into(), pass }
}

fn line(d1: f64, d1p: f64) -> Result<DegeneracyParams> {
    DegeneracyParams::line(d1, d1p)
}

fn interval_gap(d1: f64, n: usize) -> Result<f64> {
    Ok(poincare_constant(&line(d1, d1)?, &Region::Interval { a: -1.0, b: 1.0 }, Resolution::line(n), Conductance::Harmonic)?.gap)
}

fn c1() -> Criterion {
    crit(1, "scaling bounds, 1e5 samples", "0 violations", || {
        let r = check_scaling_bounds(100_000, 1)?;
        Ok((r.violations == 0, format!("{} violations ({} branch), worst log-margin {:.3e}", r.violations, r.branch_violations, r.worst_margin)))
    })
}

fn c2() -> Criterion {
    crit(2, "embeddings: cube in ball and box in ball (1e5 each), ball in cube at located kappa", "0 violations; flat kappa 0.5 +- 0.01", || {
        let r = check_embeddings(None, None, 100_000, 2)?;
        let flat = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0)?;
        let bent = DegeneracyParams::new(1, 1, 0.25, 0.5, 0.5, 1.0)?;
        let kf = find_kappa(&flat, 16, 2000, 3)?;
        let kb = find_kappa(&bent, 16, 2000, 3)?;
        let ef = check_embeddings(Some(&flat), Some(kf.kappa), 10_000, 4)?;
        let eb = check_embeddings(Some(&bent), Some(kb.kappa), 10_000, 4)?;
        let inside = ef.ball_in_cube_violations.unwrap_or(1) + eb.ball_in_cube_violations.unwrap_or(1);
        let pass = r.cube_in_ball_violations == 0 && r.box_in_ball_violations == 0 && inside == 0 && (kf.kappa - 0.5).abs() <= 0.01;
        Ok((
            pass,
            format!(
                "cube/box violations {}/{}, kappa flat {:.4} bent {:.4}, ball-in-cube violations {}",
                r.cube_in_ball_violations, r.box_in_ball_violations, kf.kappa, kb.kappa, inside
            ),
        ))
    })
}

fn c3() -> Criterion {
    crit(3, "intertwining sandwich, 1e4 samples; exact branch t^2 scaling", "0 violations; exact rel err <= 1e-10", || {
        let r = check_intertwining(None, 10_000, 5)?;
        let iso = DegeneracyParams::new(2, 1, 0.3, 0.3, 0.7, 0.7)?;
        let x = check_intertwining(Some(&iso), 10_000, 6)?;
        let pass = r.violations == 0 && x.violations == 0 && x.exact_trials > 0 && x.exact_max_rel_err <= 1e-10;
        Ok((
            pass,
            format!(
                "{} violations ({} upper, {} lower, {} unrepresentable), worst log-margin {:.3}; exact branch {} trials, rel err {:.2e}",
                r.violations, r.upper_violations, r.lower_violations, r.unrepresentable, r.worst_margin, x.exact_trials, x.exact_max_rel_err
            ),
        ))
    })
}

fn c4() -> Criterion {
    crit(4, "Neumann gap, d1 = 0 on [-1,1], N = 1025", "(pi/2)^2 within 0.5%", || {
        let g = interval_gap(0.0, 1025)?;
        let want = FRAC_PI_2 * FRAC_PI_2;
        let rel = (g - want).abs() / want;
        Ok((rel <= 5e-3, format!("gap {g:.6}, rel err {rel:.2e}")))
    })
}

fn c5() -> Criterion {
    crit(5, "gap lower bound (1 - 2 d1)/2 on [-1,1], N = 1025", "gap >= bound for d1 in {0.1, 0.25, 0.4}", || {
        let mut pass = true;
        let mut parts = Vec::new();
        for d in [0.1, 0.25, 0.4] {
            let g = interval_gap(d, 1025)?;
            let b = (1.0 - 2.0 * d) / 2.0;
            pass &= g >= b;
            parts.push(format!("d1={d}: {g:.5} >= {b:.3}"));
        }
        Ok((pass, parts.join(", ")))
    })
}

fn c6() -> Criterion {
    crit(6, "Poincare failure at d1 = 1/2", "chi_n ratio <= 3/ln n; gap non-increasing (abs 1e-9) and < 0.1 at N = 8193", || {
        let mut pass = true;
        let mut parts = Vec::new();
        for n in [1e3, 1e6] {
            let r = chi_n_rayleigh(0.5, n)?;
            let b = 3.0 / f64::ln(n);
            pass &= r.ratio <= b;
            parts.push(format!("ratio(n={n:e}) {:.4} <= {b:.4}", r.ratio));
        }
        let gaps: Vec<f64> = [1025, 2049, 4097, 8193].iter().map(|&n| interval_gap(0.5, n)).collect::<Result<_>>()?;
        pass &= gaps.windows(2).all(|w| w[1] <= w[0] + 1e-9) && gaps[3] < 0.1;
        parts.push(format!("gaps {:?}", gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()));
        Ok((pass, parts.join(", ")))
    })
}

fn c7() -> Criterion {
    crit(7, "half-line gap, d1 = 0.75 on [0,1], N = 2049 vs 4097", "agree within 2%, both > 0.1", || {
        let p = line(0.75, 0.75)?;
        let g = |n| -> Result<f64> {
            Ok(poincare_constant(&p, &Region::HalfInterval { b: 1.0 }, Resolution::line(n), Conductance::Harmonic)?.gap)
        };
        let (a, b) = (g(2049)?, g(4097)?);
        let rel = (a - b).abs() / b;
        Ok((rel <= 0.02 && a > 0.1 && b > 0.1, format!("{a:.5} vs {b:.5}, rel diff {rel:.2e}")))
    })
}

fn c8() -> Criterion {
    crit(8, "exceptional case d1 = 0, d1' = 0.75, cube sweep t = 4..64", "slope in [-3.5, -1.5]; normalized(64) < normalized(4)/10", || {
        let p = line(0.0, 0.75)?;
        let s = poincare_sweep(&p, &Family::Cube, &[4.0, 8.0, 16.0, 32.0, 64.0], Resolution::Graded { core: 129, growth: 1.02 }, Conductance::Harmonic)?;
        let (first, last) = (s.rows[0].normalized, s.rows[4].normalized);
        let pass = (-3.5..=-1.5).contains(&s.slope) && last < first / 10.0;
        Ok((pass, format!("slope {:.4}, normalized {first:.4e} -> {last:.4e}", s.slope)))
    })
}

fn c9() -> Criterion {
    crit(9, "uniform case ball sweep r = 1/8..8, n = m = 1", "max/min <= 4; slope in [-0.3, 0.3]", || {
        let p = DegeneracyParams::new(1, 1, 0.25, 0.25, 0.5, 0.5)?;
        let s = poincare_sweep(&p, &Family::Ball { center: Point::origin(&p) }, &[0.125, 0.5, 2.0, 8.0], Resolution::Uniform { n1: 65, n2: 65 }, Conductance::Harmonic)?;
        Ok((s.spread <= 4.0 && s.slope.abs() <= 0.3, format!("spread {:.4}, slope {:.2e}", s.spread, s.slope)))
    })
}

fn c10() -> Criterion {
    crit(10, "volume doubling r = 1/8..8; flat rhombus area", "ratios <= 32, max/min <= 8; area 4 +- 2%", || {
        let p = DegeneracyParams::new(1, 1, 0.25, 0.25, 0.5, 0.5)?;
        let grid = VolumeMethod::Grid { resolution: 400 };
        let ratios: Vec<f64> = (-3..=3)
            .map(|k| doubling_ratio(&p, &Point::origin(&p), 2f64.powi(k), grid).map(|d| d.ratio))
            .collect::<Result<_>>()?;
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let flat = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0)?;
        let area = region_volume(&flat, &Region::Ball { center: Point::origin(&flat), r: 1.0 }, grid)?.estimate;
        let pass = max <= 32.0 && max / min <= 8.0 && (area - 4.0).abs() <= 0.08;
        Ok((pass, format!("ratios in [{min:.4}, {max:.4}], area {area:.4}")))
    })
}

fn c11() -> Criterion {
    crit(11, "heat oracle d = 0, t = 0.25, [-8,8], N = 2049, dt = 1e-3", "center pi^(-1/2) +- 1%; drift <= 1e-9; positivity >= -1e-10; semigroup <= 1e-6", || {
        let p = line(0.0, 0.0)?;
        let reg = Region::Interval { a: -8.0, b: 8.0 };
        let x0 = Point::new(vec![0.0], vec![]);
        let f = evolve_kernel(&p, &reg, &x0, 0.25, 1e-3, Resolution::line(2049))?;
        let want = 1.0 / PI.sqrt();
        let rel = (f.at_source() - want).abs() / want;
        let (_, sg) = semigroup_check(&p, &reg, &x0, 0.25, 1e-3, Resolution::line(2049))?;
        let pass = rel <= 0.01 && f.mass_drift <= 1e-9 && f.min_ratio >= -1e-10 && sg <= 1e-6;
        Ok((pass, format!("center {:.6} (rel {rel:.2e}), drift {:.1e}, min ratio {:.1e}, semigroup {sg:.1e}", f.at_source(), f.mass_drift, f.min_ratio)))
    })
}

fn c12() -> Criterion {
    crit(12, "crossing mass x0 = 0.5, t = 0.5, N = 4097", "d1 = d1' = 0.75: <= 1e-6; d = 0: Gaussian tail within 2%", || {
        let res = Resolution::line(4097);
        let degen = crossing_mass(&line(0.75, 0.75)?, 0.5, 0.5, 1e-3, res)?.fraction;
        let flat = crossing_mass(&line(0.0, 0.0)?, 0.5, 0.5, 1e-3, res)?.fraction;
        // variance 2t = 1
        let tail = integrate(|x| (-(x - 0.5) * (x - 0.5) / 2.0).exp() / (2.0 * PI).sqrt(), -40.0, 0.0, 1e-14, 1e-13)?.0;
        let rel = (flat - tail).abs() / tail;
        Ok((degen <= 1e-6 && rel <= 0.02, format!("degenerate {degen:.2e}, flat {flat:.5} vs {tail:.5} (rel {rel:.2e})")))
    })
}

fn c13() -> Criterion {
    crit(13, "on-diagonal lower bound d1 = 0.25, t = 2^-4..2^2, x = 0", "min product > 0.2; flat anchor pi^(-1/2) +- 2%", || {
        let times: Vec<f64> = (-4..=2).map(|k| 2f64.powi(k)).collect();
        let x = [Point::new(vec![0.0], vec![])];
        let r = ondiag_lower(&line(0.25, 0.25)?, &x, &times, Resolution::line(2049), 1000)?;
        let a = ondiag_lower(&line(0.0, 0.0)?, &x, &[1.0], Resolution::line(2049), 1000)?.min_product;
        let want = 1.0 / PI.sqrt();
        let rel = (a - want).abs() / want;
        Ok((r.min_product > 0.2 && rel <= 0.02, format!("min {:.5}, anchor {a:.5} (rel {rel:.2e})", r.min_product)))
    })
}

fn c14() -> Criterion {
    crit(14, "Gaussian fit shape, D^2/t in [1,16], t = 0.25..2", "d = 0: omega' 0.25 +- 15%; d1 = 0.25: slope < 0, residual < 0.1", || {
        let x0 = Point::new(vec![0.0], vec![]);
        let times = [0.25, 0.5, 1.0, 2.0];
        let flat = fit_gaussian_bounds(&line(0.0, 0.0)?, &x0, &times, Resolution::line(2049), 1000)?;
        let bent = fit_gaussian_bounds(&line(0.25, 0.25)?, &x0, &times, Resolution::line(2049), 1000)?;
        let rel = (flat.omega_prime - 0.25).abs() / 0.25;
        let pass = rel <= 0.15 && bent.omega_prime > 0.0 && bent.residual < 0.1;
        Ok((pass, format!("flat omega' {:.5}; d1=0.25 omega' {:.5}, residual {:.2e}", flat.omega_prime, bent.omega_prime, bent.residual)))
    })
}

fn c15() -> Criterion {
    crit(15, "hitting probability vs scale-function oracle, 1e5 paths, dt = 1e-3", "|z| <= 3; censored <= 1%", || {
        let mut pass = true;
        let mut parts = Vec::new();
        for (dp, b) in [(0.0, 10.0), (0.75, 100.0)] {
            let e = simulate_hitting(&HittingExperiment::new(dp, 5.0, 0.0, b, 1e-3, 100_000, 20240917))?;
            let z = e.z_score();
            pass &= z.abs() <= 3.0;
            parts.push(format!("d'={dp}: {:.5} vs {:.5} (z {z:.2}, censored {})", e.empirical, e.oracle, e.censored));
        }
        Ok((pass, parts.join(", ")))
    })
}

fn c16() -> Criterion {
    crit(16, "ends transform at d = 1/2, 5 test functions", "rel err <= 1e-6; radial weight at |y| = 2 is 2", || {
        let r = ends_transform_check(0.5, &bundled_test_functions(), 1e-10)?;
        let w = r.radial.iter().find(|x| x.rho == 2.0).map(|x| x.radial).unwrap_or(f64::NAN);
        Ok((r.max_rel_err <= 1e-6 && (w - 2.0).abs() <= 1e-12, format!("max rel err {:.2e}, radial weight {w}", r.max_rel_err)))
    })
}

fn run_one(id: u32) -> Criterion {
    match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        11 => c11(),
        12 => c12(),
        13 => c13(),
        14 => c14(),
        15 => c15(),
        16 => c16(),
        _ => unreachable!("criterion {id}"),
    }
}

/// Runs the criteria of `suite`, calling `progress` after each one. For `all`, criterion 17
/// reruns criteria 1 to 16 and compares the serialized reports byte for byte.
pub fn run_acceptance_with(suite: Suite, mut progress: impl FnMut(&Criterion)) -> AcceptanceReport {
    let mut criteria = Vec::new();
    for &id in suite.criteria().iter().filter(|&&id| id != 17) {
        let c = run_one(id);
        progress(&c);
        criteria.push(c);
    }
    if suite == Suite::All {
        let first = serde_json::to_string(&criteria).unwrap_or_default();
        let again: Vec<Criterion> = (1..=16).map(run_one).collect();
        let second = serde_json::to_string(&again).unwrap_or_default();
        let same = !first.is_empty() && first == second;
        let c = Criterion {
            id: 17,
            claim: "determinism: criteria 1-16 rerun with the same seeds".into(),
            measured: format!("{} bytes, {}", first.len(), if same { "identical" } else { "different" }),
            tolerance: "byte-identical".into(),
            pass: same,
        };
        progress(&c);
        criteria.push(c);
    }
    let passed = criteria.iter().filter(|c| c.pass).count();
    AcceptanceReport { suite, failed: criteria.len() - passed, passed, criteria }
}

pub fn run_acceptance(suite: Suite) -> AcceptanceReport {
    run_acceptance_with(suite, |_| {})
}
