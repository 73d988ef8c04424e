//! Seeded randomized checks of the scaling, embedding and intertwining inequalities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distance_raw, BoundingBox, ln_ppow, norm, ppow, r_xi, DegeneracyParams, Pair, Point, Region};
use crate::error::{invalid, Result};
use crate::rng::{self, log_uniform, uniform};

/// Relative slack below which an inequality counts as violated.
pub const VIOLATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub trials: usize,
    pub violations: usize,
    pub two_sided_violations: usize,
    pub branch_violations: usize,
    /// Smallest log-slack over all bounds (negative means violated).
    pub worst_margin: f64,
}

/// Log-slacks `[lower, upper, branch lower, branch upper]` for one `(s, t, d, dp)`.
///
/// The branch bounds for `t <= 1` and `t >= 1` are selected by whether
/// `dp >= d` or `d >= dp`.
pub fn scaling_bound_margins(s: f64, t: f64, d: f64, dp: f64) -> [f64; 4] {
    let e = Pair::new(d, dp);
    let ln2 = std::f64::consts::LN_2;
    let v = ln_ppow(s * t, e);
    let ls = ln_ppow(s, e);
    let dmax = d.max(dp);
    let lower = -2.0 * dmax * ln2 + ls + ln_ppow(t, e.hat());
    let upper = 2.0 * dmax * ln2 + ls + ln_ppow(t, e.tilde());
    let lt = t.ln();
    let (bl, bu) = if t <= 1.0 {
        if dp >= d {
            (-(dp + d) * ln2 + ls + dp * lt, 2.0 * dp * ln2 + ls + d * lt)
        } else {
            (-2.0 * d * ln2 + ls + d * lt, (dp + d) * ln2 + ls + dp * lt)
        }
    } else if dp >= d {
        (-(dp + d) * ln2 + ls + d * lt, (dp + d) * ln2 + ls + dp * lt)
    } else {
        (-(dp + d) * ln2 + ls + dp * lt, (dp + d) * ln2 + ls + d * lt)
    };
    [v - lower, upper - v, v - bl, bu - v]
}

#[derive(Default, Clone, Copy)]
struct Tally {
    a: usize,
    b: usize,
    c: usize,
    worst: f64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, worst: self.worst.min(o.worst) }
    }
    fn empty() -> Tally {
        Tally { worst: f64::INFINITY, ..Default::default() }
    }
}

pub fn check_scaling_bounds(trials: usize, seed: u64) -> Result<ScalingReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let t = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let s = log_uniform(&mut r, 1e-3, 1e3);
            let t = log_uniform(&mut r, 1e-3, 1e3);
            let d: f64 = r.random();
            let dp: f64 = r.random();
            let m = scaling_bound_margins(s, t, d, dp);
            let two = (m[0] < -VIOLATION_TOL || m[1] < -VIOLATION_TOL) as usize;
            let br = (m[2] < -VIOLATION_TOL || m[3] < -VIOLATION_TOL) as usize;
            Tally { a: two.max(br), b: two, c: br, worst: m.iter().cloned().fold(f64::INFINITY, f64::min) }
        })
        .reduce(Tally::empty, Tally::merge);
    Ok(ScalingReport {
        trials,
        violations: t.a,
        two_sided_violations: t.b,
        branch_violations: t.c,
        worst_margin: t.worst,
    })
}

fn random_params(r: &mut ChaCha8Rng) -> DegeneracyParams {
    let n = r.random_range(1..=2usize);
    let m = r.random_range(0..=2usize);
    DegeneracyParams {
        n,
        m,
        d1: r.random(),
        d1p: r.random(),
        d2: 2.0 * r.random::<f64>(),
        d2p: 2.0 * r.random::<f64>(),
    }
}

/// Uniform sample of the Euclidean unit ball in `k` dimensions.
fn unit_ball(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| uniform(r, -1.0, 1.0)).collect();
        if norm(&v) < 1.0 {
            return v;
        }
    }
}

fn unit_vector(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let l = norm(&v);
        if l > 1e-12 {
            return v.into_iter().map(|a| a / l).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub trials: usize,
    /// Cube inside the ball of radius `4 (n + m) t`.
    pub cube_in_ball_violations: usize,
    /// Scaled box inside the ball of radius `kappa r_xi` around `(xi1, 0)`.
    pub box_in_ball_violations: usize,
    /// Ball of radius `kappa t` inside the cube; only with a fixed parameter set and kappa.
    pub ball_in_cube_violations: Option<usize>,
    pub kappa: Option<f64>,
}

/// Samples the three embeddings. With `p = None` the parameters are drawn per trial.
pub fn check_embeddings(
    p: Option<&DegeneracyParams>,
    kappa: Option<f64>,
    trials: usize,
    seed: u64,
) -> Result<EmbeddingReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    if let Some(p) = p {
        p.validate()?;
    }
    if let Some(k) = kappa {
        if p.is_none() || !(k > 0.0 && k <= 1.0) {
            return invalid("kappa needs a fixed parameter set and must lie in (0, 1]");
        }
    }
    let t = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let q = match p {
                Some(p) => p.clone(),
                None => random_params(&mut r),
            };
            let e = q.exponents();
            let g = e.g();
            let origin = Point::origin(&q);
            let mut tally = Tally::empty();

            // cube in ball
            let t = log_uniform(&mut r, 1e-3, 1e3);
            let (h1, h2) = (ppow(t, e.a()), ppow(t, e.b()));
            let corner = i % 4 == 0;
            let mut coord = |h: f64| {
                if corner {
                    let s = if r.random::<bool>() { 1.0 } else { -1.0 };
                    s * h * (1.0 - 1e-9 * r.random::<f64>())
                } else {
                    uniform(&mut r, -h, h)
                }
            };
            let x = Point::new((0..q.n).map(|_| coord(h1)).collect(), (0..q.m).map(|_| coord(h2)).collect());
            let bound = 4.0 * (q.n + q.m) as f64 * t;
            let d = distance_raw(&q, g, &origin, &x);
            tally.worst = tally.worst.min(1.0 - d / bound);
            if d >= bound * (1.0 + VIOLATION_TOL) {
                tally.a += 1;
            }

            // scaled box in ball
            let dir = unit_vector(&mut r, q.n);
            let len = log_uniform(&mut r, 1e-3, 1e3);
            let xi1: Vec<f64> = dir.iter().map(|v| v * len).collect();
            let k = 1.0 - r.random::<f64>();
            let rx = r_xi(&q, &xi1);
            let (b1, b2) = (0.5 * k * ppow(rx, e.a()), 0.5 * k * ppow(rx, e.b()));
            let u1 = unit_ball(&mut r, q.n);
            let x1: Vec<f64> = xi1.iter().zip(&u1).map(|(c, u)| c + b1 * u).collect();
            let x2: Vec<f64> = if q.m > 0 { unit_ball(&mut r, q.m).iter().map(|u| b2 * u).collect() } else { vec![] };
            let centre = Point::new(xi1.clone(), vec![0.0; q.m]);
            let d = distance_raw(&q, g, &centre, &Point::new(x1, x2));
            let bound = k * rx;
            tally.worst = tally.worst.min(1.0 - d / bound);
            if d >= bound * (1.0 + VIOLATION_TOL) {
                tally.b += 1;
            }

            // ball in cube
            if let Some(k) = kappa {
                let t = log_uniform(&mut r, 1e-3, 1e3);
                let ball = Region::Ball { center: origin.clone(), r: k * t };
                let cube = Region::Cube { t };
                let x = ball.bounding_box(&q).ok().and_then(|bx| sample_ball_point(&q, &ball, &bx, &mut r, i % 2 == 0));
                if let Some(x) = x {
                    if !cube.contains_raw(&q, g, &x) {
                        tally.c += 1;
                    }
                }
            }
            tally
        })
        .reduce(Tally::empty, Tally::merge);
    Ok(EmbeddingReport {
        trials,
        cube_in_ball_violations: t.a,
        box_in_ball_violations: t.b,
        ball_in_cube_violations: kappa.map(|_| t.c),
        kappa,
    })
}

/// A point of `ball`: uniform by rejection, or pushed to just inside the boundary
/// along the ray towards a random point of the bounding box.
fn sample_ball_point(p: &DegeneracyParams, ball: &Region, bx: &BoundingBox, r: &mut ChaCha8Rng, boundary: bool) -> Option<Point> {
    let g = p.exponents().g();
    let draw = |r: &mut ChaCha8Rng| {
        let v: Vec<f64> = bx.lo.iter().zip(&bx.hi).map(|(a, b)| uniform(r, *a, *b)).collect();
        Point::new(v[..p.n].to_vec(), v[p.n..].to_vec())
    };
    let Region::Ball { center, .. } = ball else { return None };
    if !boundary {
        for _ in 0..10_000 {
            let x = draw(r);
            if ball.contains_raw(p, g, &x) {
                return Some(x);
            }
        }
        return None;
    }
    let q = draw(r);
    if ball.contains_raw(p, g, &q) {
        return Some(q);
    }
    let lerp = |s: f64| {
        Point::new(
            center.x1.iter().zip(&q.x1).map(|(c, v)| c + s * (v - c)).collect(),
            center.x2.iter().zip(&q.x2).map(|(c, v)| c + s * (v - c)).collect(),
        )
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ball.contains_raw(p, g, &lerp(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lerp(lo))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// Largest kappa that passed and smallest that failed during bisection.
    pub passed: f64,
    pub failed: Option<f64>,
    pub t_samples: usize,
    pub trials: usize,
    /// Always true: the value is a sampled estimate, not a proof.
    pub statistical: bool,
}

/// Safety shrink applied to the last kappa that passed.
pub const KAPPA_SHRINK: f64 = 0.99;
const KAPPA_TOL: f64 = 1e-3;

/// Largest kappa (to 1e-3) for which no sampled point of `B(0; kappa t)` leaves `C_t`.
pub fn find_kappa(p: &DegeneracyParams, t_samples: usize, trials: usize, seed: u64) -> Result<KappaEstimate> {
    p.validate()?;
    if t_samples == 0 || trials == 0 {
        return invalid("t_samples and trials must be at least 1");
    }
    let ts: Vec<f64> = (0..t_samples)
        .map(|j| {
            let mut r = rng::stream(seed, j as u64);
            log_uniform(&mut r, 1e-3, 1e3)
        })
        .collect();
    let g = p.exponents().g();
    let ok = |k: f64| -> bool {
        ts.par_iter().enumerate().all(|(j, &t)| {
            let ball = Region::Ball { center: Point::origin(p), r: k * t };
            let cube = Region::Cube { t };
            let Ok(bx) = ball.bounding_box(p) else { return false };
            (0..trials).all(|i| {
                let mut r = rng::stream(seed ^ 0x9e37_79b9_7f4a_7c15, (j * trials + i) as u64);
                match sample_ball_point(p, &ball, &bx, &mut r, i % 2 == 0) {
                    Some(x) => cube.contains_raw(p, g, &x),
                    None => true,
                }
            })
        })
    };
    if ok(1.0) {
        return Ok(KappaEstimate { kappa: 1.0, passed: 1.0, failed: None, t_samples, trials, statistical: true });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > KAPPA_TOL {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(KappaEstimate { kappa: lo * KAPPA_SHRINK, passed: lo, failed: Some(hi), t_samples, trials, statistical: true })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub trials: usize,
    pub violations: usize,
    pub upper_violations: usize,
    pub lower_violations: usize,
    /// Smallest log-slack of the two-sided bound.
    pub worst_margin: f64,
    /// Trials whose parameters had `d_i = d_i'` for both blocks.
    pub exact_trials: usize,
    /// Largest relative deviation from `t^2` times the transported form on those trials.
    pub exact_max_rel_err: f64,
    /// Trials skipped because the scaled point over- or underflows in f64.
    pub unrepresentable: usize,
}

fn log_sum(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// Test function `(c0 + c . y) exp(-|y - mu|^2 / (2 s^2))` and its gradient.
struct Bump {
    c0: f64,
    c: Vec<f64>,
    mu: Vec<f64>,
    s: f64,
}

impl Bump {
    fn grad(&self, y: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = y.iter().zip(&self.mu).map(|(a, b)| (a - b) / self.s).collect();
        let e = (-0.5 * z.iter().map(|v| v * v).sum::<f64>()).exp();
        let lin = self.c0 + self.c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        self.c.iter().zip(&z).map(|(ck, zk)| e * (ck - lin * zk / self.s)).collect()
    }
}

/// Samples the two-sided bound relating the form of the transported function to
/// the transported hatted/tilded forms. With `p = None` the parameters are drawn per trial.
pub fn check_intertwining(p: Option<&DegeneracyParams>, trials: usize, seed: u64) -> Result<IntertwiningReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    if let Some(p) = p {
        p.validate()?;
    }
    #[derive(Clone, Copy)]
    struct Acc {
        up: usize,
        low: usize,
        any: usize,
        worst: f64,
        exact: usize,
        err: f64,
        skipped: usize,
    }
    let acc = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let q = match p {
                Some(p) => p.clone(),
                None => random_params(&mut r),
            };
            let e = q.exponents();
            let t = log_uniform(&mut r, 1e-2, 1e2);
            let coord = |r: &mut ChaCha8Rng| {
                let s = if r.random::<bool>() { 1.0 } else { -1.0 };
                s * log_uniform(r, 1e-3, 1e3)
            };
            let x1: Vec<f64> = (0..q.n).map(|_| coord(&mut r)).collect();
            let x2: Vec<f64> = (0..q.m).map(|_| coord(&mut r)).collect();
            let (f1, f2) = (ppow(t, e.a()), ppow(t, e.b()));
            let y: Vec<f64> = x1.iter().map(|v| f1 * v).chain(x2.iter().map(|v| f2 * v)).collect();
            let dim = q.n + q.m;
            let s = log_uniform(&mut r, 1e-2, 1e2) * (1.0 + norm(&y));
            let phi = Bump {
                c0: r.sample(StandardNormal),
                c: (0..dim).map(|_| r.sample(StandardNormal)).collect(),
                mu: y.iter().map(|v| v + s * r.sample::<f64, _>(StandardNormal)).collect(),
                s,
            };
            let mut a = Acc { up: 0, low: 0, any: 0, worst: f64::INFINITY, exact: 0, err: 0.0, skipped: 0 };
            if !norm(&y).is_finite() || y.iter().zip(x1.iter().chain(&x2)).any(|(yk, xk)| *yk == 0.0 && *xk != 0.0) {
                a.skipped = 1;
                return a;
            }
            let grad = phi.grad(&y);
            let g1: f64 = grad[..q.n].iter().map(|v| v * v).sum();
            let g2: f64 = grad[q.n..].iter().map(|v| v * v).sum();
            let rx = norm(&x1);
            let (p1, p2) = (q.delta1().scaled(2.0), q.delta2().scaled(2.0));
            let (lf1, lf2, lt) = (ln_ppow(t, e.a()), ln_ppow(t, e.b()), t.ln());
            let lry = lf1 + rx.ln();
            let lp = |e: Pair| lry * if lry <= 0.0 { e.lo } else { e.hi };
            // logs throughout: the scaled factors over- and underflow for d near 1
            let lhs = log_sum(2.0 * lf1 + ln_ppow(rx, p1) + g1.ln(), 2.0 * lf2 + ln_ppow(rx, p2) + g2.ln());
            let form = |a: Pair, b: Pair| log_sum(lp(a) + g1.ln(), if q.m > 0 { lp(b) + g2.ln() } else { f64::NEG_INFINITY });
            let lk = 4.0 * e.delta_m * std::f64::consts::LN_2;
            let upper = lk + 2.0 * lt + form(p1.tilde(), p2.tilde());
            let lower = -lk + 2.0 * lt + form(p1.hat(), p2.hat());
            if lhs > f64::NEG_INFINITY {
                a.worst = (upper - lhs).min(lhs - lower);
            }
            a.up = (lhs - upper > VIOLATION_TOL) as usize;
            a.low = (lower - lhs > VIOLATION_TOL) as usize;
            a.any = (a.up + a.low).min(1);
            if q.d1 == q.d1p && (q.m == 0 || q.d2 == q.d2p) {
                let exact = 2.0 * lt + form(p1, p2);
                a.exact = 1;
                a.err = if lhs == exact { 0.0 } else { (lhs - exact).abs().exp_m1() };
            }
            a
        })
        .reduce(
            || Acc { up: 0, low: 0, any: 0, worst: f64::INFINITY, exact: 0, err: 0.0, skipped: 0 },
            |a, b| Acc {
                up: a.up + b.up,
                low: a.low + b.low,
                any: a.any + b.any,
                worst: a.worst.min(b.worst),
                exact: a.exact + b.exact,
                err: a.err.max(b.err),
                skipped: a.skipped + b.skipped,
            },
        );
    Ok(IntertwiningReport {
        trials,
        violations: acc.any,
        upper_violations: acc.up,
        lower_violations: acc.low,
        worst_margin: acc.worst,
        exact_trials: acc.exact,
        exact_max_rel_err: acc.err,
        unrepresentable: acc.skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_hand_example() {
        // s = 4, t = 1/2, d = 1/2, d' = 0: (st)^(d,d') = 1
        let m = scaling_bound_margins(4.0, 0.5, 0.5, 0.0);
        assert!((m[0] - (1.0f64 / (0.5 * 0.5f64.sqrt())).ln()).abs() < 1e-12);
        assert!((m[1] - 2f64.ln()).abs() < 1e-12);
        assert!(m.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn scaling_at_t_one() {
        for &(s, d, dp) in &[(0.01, 0.3, 0.9), (50.0, 0.8, 0.1), (1.0, 0.0, 0.5)] {
            let m = scaling_bound_margins(s, 1.0, d, dp);
            assert!(m.iter().all(|v| *v >= -1e-12), "{m:?}");
        }
    }

    #[test]
    fn scaling_suite_small() {
        let r = check_scaling_bounds(20_000, 3).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.worst_margin >= -VIOLATION_TOL);
    }

    #[test]
    fn embeddings_small() {
        let r = check_embeddings(None, None, 20_000, 5).unwrap();
        assert_eq!(r.cube_in_ball_violations, 0);
        assert_eq!(r.box_in_ball_violations, 0);
        assert!(r.ball_in_cube_violations.is_none());
    }

    #[test]
    fn kappa_on_the_line_is_one() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let k = find_kappa(&p, 4, 200, 1).unwrap();
        assert_eq!(k.kappa, 1.0);
    }

    #[test]
    fn kappa_flat_plane() {
        let p = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
        let k = find_kappa(&p, 4, 1000, 1).unwrap();
        assert!((k.kappa - 0.5).abs() < 0.01, "{k:?}");
        let e = check_embeddings(Some(&p), Some(k.kappa), 20_000, 99).unwrap();
        assert_eq!(e.ball_in_cube_violations, Some(0));
    }

    #[test]
    fn exact_branch_of_intertwining() {
        let p = DegeneracyParams::new(1, 1, 0.25, 0.25, 0.5, 0.5).unwrap();
        let r = check_intertwining(Some(&p), 5000, 11).unwrap();
        assert_eq!(r.exact_trials, 5000);
        assert!(r.exact_max_rel_err < 1e-10, "{r:?}");
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn bump_gradient_matches_differences() {
        let b = Bump { c0: 0.3, c: vec![1.0, -2.0], mu: vec![0.1, 0.4], s: 0.7 };
        let f = |y: &[f64]| {
            let q: f64 = y.iter().zip(&b.mu).map(|(a, m)| (a - m) * (a - m)).sum();
            (b.c0 + b.c[0] * y[0] + b.c[1] * y[1]) * (-q / (2.0 * b.s * b.s)).exp()
        };
        let y = [0.2, -0.3];
        let g = b.grad(&y);
        let h = 1e-6;
        for k in 0..2 {
            let mut a = y;
            let mut c = y;
            a[k] += h;
            c[k] -= h;
            assert!((g[k] - (f(&a) - f(&c)) / (2.0 * h)).abs() < 1e-8);
        }
    }
}
