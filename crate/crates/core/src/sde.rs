//! Diffusion with coefficient `c(x) = (1 v |x|)^(2 d')`: scale-function oracle,
//! Euler-Maruyama hitting experiments and the ends transform.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad::integrate_pieces;
use crate::rng::stream;

pub const MAX_PATH_STEPS: u64 = 10_000_000;
/// Largest censored fraction accepted by a run.
pub const MAX_CENSORED: f64 = 0.01;

fn check_deltap(dp: f64) -> Result<()> {
    if !(0.0..1.0).contains(&dp) {
        return invalid(format!("deltap = {dp} must lie in [0, 1)"));
    }
    Ok(())
}

pub fn coefficient(dp: f64, x: f64) -> f64 {
    x.abs().max(1.0).powf(2.0 * dp)
}

/// `c'(x)`; zero on `|x| < 1`, the kink at `|x| = 1` is left to the scheme.
pub fn coefficient_slope(dp: f64, x: f64) -> f64 {
    let a = x.abs();
    if a > 1.0 {
        (2.0 * dp * a.powf(2.0 * dp - 1.0)).copysign(x)
    } else {
        0.0
    }
}

/// `s(x) = int_0^x dy / c(y)`.
pub fn scale_function(dp: f64, x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= 1.0 {
        a
    } else {
        let q = 1.0 - 2.0 * dp;
        if q == 0.0 {
            1.0 + a.ln()
        } else {
            1.0 + (q * a.ln()).exp_m1() / q
        }
    };
    v.copysign(x)
}

/// Probability of reaching `a` before `b` from `x0`.
pub fn hitting_oracle(dp: f64, a: f64, x0: f64, b: f64) -> Result<f64> {
    check_deltap(dp)?;
    if !(a < b) {
        return invalid(format!("barriers a = {a}, b = {b} must satisfy a < b"));
    }
    if !(a <= x0 && x0 <= b) {
        return invalid(format!("x0 = {x0} must lie in [a, b]"));
    }
    let (sa, sx, sb) = (scale_function(dp, a), scale_function(dp, x0), scale_function(dp, b));
    Ok((sb - sx) / (sb - sa))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HittingExperiment {
    pub deltap: f64,
    pub x0: f64,
    pub a: f64,
    pub b: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// Fraction of uncensored paths that reach `a` first.
    pub empirical: f64,
    pub stderr: f64,
    pub oracle: f64,
    pub censored: u64,
}

impl HittingExperiment {
    pub fn new(deltap: f64, x0: f64, a: f64, b: f64, dt: f64, n_paths: u64, seed: u64) -> Self {
        HittingExperiment { deltap, x0, a, b, dt, n_paths, seed, empirical: 0.0, stderr: 0.0, oracle: 0.0, censored: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_deltap(self.deltap)?;
        if !(self.a < self.x0 && self.x0 < self.b) {
            return invalid(format!("need a < x0 < b, got {} {} {}", self.a, self.x0, self.b));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid(format!("dt = {} must be positive", self.dt));
        }
        if self.n_paths < 100 {
            return invalid("at least 100 paths are needed");
        }
        Ok(())
    }

    pub fn z_score(&self) -> f64 {
        (self.empirical - self.oracle) / self.stderr
    }

    fn fill(&mut self, hits_a: u64, censored: u64) -> Result<()> {
        let done = self.n_paths - censored;
        self.censored = censored;
        self.oracle = hitting_oracle(self.deltap, self.a, self.x0, self.b)?;
        let frac = censored as f64 / self.n_paths as f64;
        if frac > MAX_CENSORED {
            return Err(Error::Censored(format!("{censored} of {} paths hit the step cap", self.n_paths)));
        }
        let p = hits_a as f64 / done as f64;
        self.empirical = p;
        self.stderr = (p * (1.0 - p) / done as f64).sqrt();
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Exit {
    Lower,
    Upper,
    Censored,
}

#[inline]
fn em_step(dp: f64, x: f64, dt: f64, z: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 || dp == 0.0 {
        return x + (2.0 * dt).sqrt() * z;
    }
    let c = a.powf(2.0 * dp);
    x + (2.0 * dp * c / x) * dt + (2.0 * c * dt).sqrt() * z
}

#[inline]
fn exit_of(e: &HittingExperiment, x: f64) -> Option<Exit> {
    if x <= e.a {
        Some(Exit::Lower)
    } else if x >= e.b {
        Some(Exit::Upper)
    } else {
        None
    }
}

fn run_path(e: &HittingExperiment, rng: &mut ChaCha8Rng) -> Exit {
    let mut x = e.x0;
    for _ in 0..MAX_PATH_STEPS {
        x = em_step(e.deltap, x, e.dt, rng.sample(StandardNormal));
        if let Some(out) = exit_of(e, x) {
            return out;
        }
    }
    Exit::Censored
}

fn tally(exits: impl Iterator<Item = Exit>) -> (u64, u64) {
    exits.fold((0, 0), |(a, c), x| match x {
        Exit::Lower => (a + 1, c),
        Exit::Upper => (a, c),
        Exit::Censored => (a, c + 1),
    })
}

/// Euler-Maruyama paths absorbed at `a` and `b`; path `i` draws from stream `i` of the seed.
pub fn simulate_hitting(exp: &HittingExperiment) -> Result<HittingExperiment> {
    exp.validate()?;
    let exits: Vec<Exit> = (0..exp.n_paths).into_par_iter().map(|i| run_path(exp, &mut stream(exp.seed, i))).collect();
    let (hits, censored) = tally(exits.into_iter());
    let mut out = exp.clone();
    out.fill(hits, censored)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse: HittingExperiment,
    pub fine: HittingExperiment,
    /// `(fine - coarse) / coarse.stderr`.
    pub shift: f64,
}

/// Runs `dt` and `dt/2` on the same Brownian increments: each coarse increment is
/// `(z1 + z2) / sqrt 2` of the two fine ones.
pub fn dt_refinement(exp: &HittingExperiment) -> Result<RefinementReport> {
    exp.validate()?;
    let mut fine = exp.clone();
    fine.dt = exp.dt / 2.0;
    let pairs: Vec<(Exit, Exit)> = (0..exp.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(exp.seed, i);
            let (mut xc, mut xf) = (exp.x0, exp.x0);
            let (mut ec, mut ef) = (None, None);
            for _ in 0..MAX_PATH_STEPS {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                if ef.is_none() {
                    xf = em_step(exp.deltap, xf, fine.dt, z1);
                    ef = exit_of(exp, xf);
                    if ef.is_none() {
                        xf = em_step(exp.deltap, xf, fine.dt, z2);
                        ef = exit_of(exp, xf);
                    }
                }
                if ec.is_none() {
                    xc = em_step(exp.deltap, xc, exp.dt, (z1 + z2) * std::f64::consts::FRAC_1_SQRT_2);
                    ec = exit_of(exp, xc);
                }
                if let (Some(c), Some(f)) = (ec, ef) {
                    return (c, f);
                }
            }
            (ec.unwrap_or(Exit::Censored), ef.unwrap_or(Exit::Censored))
        })
        .collect();
    let mut coarse = exp.clone();
    let (h, c) = tally(pairs.iter().map(|p| p.0));
    coarse.fill(h, c)?;
    let (h, c) = tally(pairs.iter().map(|p| p.1));
    fine.fill(h, c)?;
    let shift = (fine.empirical - coarse.empirical) / coarse.stderr;
    Ok(RefinementReport { coarse, fine, shift })
}

/// `f(x) = x` on `[-1, 1]`, `sign(x) |x|^alpha` outside.
pub fn ends_map(alpha: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x
    } else {
        x.abs().powf(alpha).copysign(x)
    }
}

pub fn ends_map_inverse(alpha: f64, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x
    } else {
        x.abs().powf(1.0 / alpha).copysign(x)
    }
}

pub fn ends_density(alpha: f64, y: f64) -> f64 {
    if y.abs() <= 1.0 {
        1.0
    } else {
        alpha * y.abs().powf(alpha - 1.0)
    }
}

/// Smooth test function with its derivative and a bounded support.
#[derive(Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub value: fn(f64) -> f64,
    pub derivative: fn(f64) -> f64,
    pub support: (f64, f64),
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).field("support", &self.support).finish()
    }
}

// exp(-1 / (1 - u^2)) on |u| < 1, u = (x - c) / w
fn bump(c: f64, w: f64, x: f64) -> f64 {
    let u = (x - c) / w;
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn bump_d(c: f64, w: f64, x: f64) -> f64 {
    let u = (x - c) / w;
    if u.abs() >= 1.0 {
        0.0
    } else {
        let s = 1.0 - u * u;
        -2.0 * u / (s * s) * (-1.0 / s).exp() / w
    }
}

pub fn zero_function() -> TestFunction {
    TestFunction { name: "zero", value: |_| 0.0, derivative: |_| 0.0, support: (-1.0, 1.0) }
}

/// Five compactly supported functions, chosen to straddle the seams at `|x| = 1`.
pub fn bundled_test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction { name: "bump(0,0.5)", value: |x| bump(0.0, 0.5, x), derivative: |x| bump_d(0.0, 0.5, x), support: (-0.5, 0.5) },
        TestFunction { name: "bump(0,3)", value: |x| bump(0.0, 3.0, x), derivative: |x| bump_d(0.0, 3.0, x), support: (-3.0, 3.0) },
        TestFunction { name: "bump(2,1.5)", value: |x| bump(2.0, 1.5, x), derivative: |x| bump_d(2.0, 1.5, x), support: (0.5, 3.5) },
        TestFunction {
            name: "x*bump(-1,4)",
            value: |x| x * bump(-1.0, 4.0, x),
            derivative: |x| bump(-1.0, 4.0, x) + x * bump_d(-1.0, 4.0, x),
            support: (-5.0, 3.0),
        },
        TestFunction {
            name: "sin(2x)*bump(0,6)",
            value: |x| (2.0 * x).sin() * bump(0.0, 6.0, x),
            derivative: |x| 2.0 * (2.0 * x).cos() * bump(0.0, 6.0, x) + (2.0 * x).sin() * bump_d(0.0, 6.0, x),
            support: (-6.0, 6.0),
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndsRow {
    pub name: String,
    /// `||phi||_2^2`.
    pub norm: f64,
    /// `||Phi||_{2,mu}^2`.
    pub norm_mu: f64,
    pub h: f64,
    pub h_mu: f64,
    pub norm_rel_err: f64,
    pub form_rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub rho: f64,
    /// `|y|^(k-1)` at the shell.
    pub weight: f64,
    /// `(d/d rho) |B(0; rho)| / |S^(k-1)|`.
    pub radial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndsReport {
    pub delta: f64,
    pub alpha: f64,
    pub rows: Vec<EndsRow>,
    pub max_rel_err: f64,
    pub radial: Vec<RadialRow>,
}

fn rel(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

fn breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut v = vec![lo];
    v.extend([-1.0, 1.0].into_iter().filter(|s| *s > lo && *s < hi));
    v.push(hi);
    v
}

/// `Gamma(x)` for `x` a positive multiple of `1/2`.
fn half_gamma(x: f64) -> f64 {
    let mut g = if x.fract() == 0.0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut y = if x.fract() == 0.0 { 1.0 } else { 0.5 };
    while y < x {
        g *= y;
        y += 1.0;
    }
    g
}

/// Change of variables `Phi = phi o f` with `f` the ends map; compares the norm and
/// the Dirichlet form on both sides by adaptive quadrature to `tol`.
pub fn ends_transform_check(delta: f64, functions: &[TestFunction], tol: f64) -> Result<EndsReport> {
    if !(0.5..1.0).contains(&delta) {
        return invalid(format!("delta = {delta} must lie in [1/2, 1)"));
    }
    if !(tol > 0.0) {
        return invalid("quadrature tolerance must be positive");
    }
    let alpha = 1.0 / (1.0 - delta);
    let mut rows = Vec::with_capacity(functions.len());
    for tf in functions {
        let (lo, hi) = tf.support;
        let (phi, dphi) = (tf.value, tf.derivative);
        let norm = integrate_pieces(|x| phi(x).powi(2), &breaks(lo, hi), tol, tol)?;
        let h = integrate_pieces(|x| coefficient(delta, x) * dphi(x).powi(2), &breaks(lo, hi), tol, tol)?;
        let (ylo, yhi) = (ends_map_inverse(alpha, lo), ends_map_inverse(alpha, hi));
        let yb = breaks(ylo, yhi);
        let norm_mu = integrate_pieces(|y| ends_density(alpha, y) * phi(ends_map(alpha, y)).powi(2), &yb, tol, tol)?;
        let h_mu = integrate_pieces(
            |y| {
                let fp = ends_density(alpha, y);
                let d = dphi(ends_map(alpha, y)) * fp;
                let w = if y.abs() <= 1.0 { 1.0 } else { y.abs().powf(alpha - 1.0) / alpha };
                w * d * d
            },
            &yb,
            tol,
            tol,
        )?;
        rows.push(EndsRow {
            name: tf.name.to_string(),
            norm,
            norm_mu,
            h,
            h_mu,
            norm_rel_err: rel(norm, norm_mu),
            form_rel_err: rel(h, h_mu),
        });
    }
    let max_rel_err = rows.iter().map(|r| r.norm_rel_err.max(r.form_rel_err)).fold(0.0, f64::max);
    let mut radial = Vec::new();
    if (alpha - alpha.round()).abs() < 1e-12 {
        let k = alpha.round();
        // |B(0; rho)| = pi^(k/2) rho^k / Gamma(k/2 + 1), |S^(k-1)| = 2 pi^(k/2) / Gamma(k/2)
        let ball = std::f64::consts::PI.powf(k / 2.0) / half_gamma(k / 2.0 + 1.0);
        let sphere = 2.0 * std::f64::consts::PI.powf(k / 2.0) / half_gamma(k / 2.0);
        for rho in [1.5, 2.0, 3.0, 5.0] {
            radial.push(RadialRow { rho, weight: rho.powf(k - 1.0), radial: k * ball * rho.powf(k - 1.0) / sphere });
        }
    }
    Ok(EndsReport { delta, alpha, rows, max_rel_err, radial })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_function_values() {
        assert!((scale_function(0.0, 3.7) - 3.7).abs() < 1e-14);
        assert!((scale_function(0.5, std::f64::consts::E) - 2.0).abs() < 1e-15);
        assert!((scale_function(0.75, 1e12) - 3.0).abs() < 1e-5);
        assert_eq!(scale_function(0.3, -1.0), -1.0);
    }

    #[test]
    fn oracle_values() {
        assert!((hitting_oracle(0.0, 0.0, 5.0, 10.0).unwrap() - 0.5).abs() < 1e-15);
        let want = (2.8 - (3.0 - 2.0 / 5f64.sqrt())) / 2.8;
        assert!((hitting_oracle(0.75, 0.0, 5.0, 100.0).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.2480).abs() < 5e-5);
        assert_eq!(hitting_oracle(0.5, 0.0, 10.0, 10.0).unwrap(), 0.0);
        assert!(hitting_oracle(0.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn small_experiment_is_reproducible() {
        let e = HittingExperiment::new(0.0, 0.5, 0.0, 1.0, 1e-3, 400, 11);
        let a = simulate_hitting(&e).unwrap();
        let b = simulate_hitting(&e).unwrap();
        assert_eq!(a, b);
        assert!(a.z_score().abs() < 4.0);
        assert!(simulate_hitting(&HittingExperiment::new(0.0, 0.5, 0.0, 1.0, 1e-3, 99, 1)).is_err());
    }

    #[test]
    fn ends_identities() {
        let mut f = bundled_test_functions();
        f.push(zero_function());
        let r = ends_transform_check(0.5, &f, 1e-10).unwrap();
        assert!(r.max_rel_err < 1e-6, "{r:?}");
        let z = r.rows.last().unwrap();
        assert_eq!((z.norm, z.norm_mu, z.h, z.h_mu), (0.0, 0.0, 0.0, 0.0));
        let two = r.radial.iter().find(|x| x.rho == 2.0).unwrap();
        assert!((two.radial - 2.0).abs() < 1e-12);
        assert!(ends_transform_check(0.25, &f, 1e-10).is_err());
    }

    #[test]
    fn half_gamma_values() {
        assert!((half_gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((half_gamma(2.5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(half_gamma(4.0), 6.0);
    }
}
