//! Heat semigroup on truncated Neumann grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    ball_length_1d, distance_d, ppow, region_volume, DegeneracyParams, Point, Region, VolumeMethod,
};
use crate::spectral::{assemble_region_form, fit_slope, Conductance, DiscreteForm, Ldl, Resolution};

/// Steps of implicit Euler before switching to Crank-Nicolson.
pub const IMPLICIT_START_STEPS: usize = 2;
pub const MAX_STEPS: usize = 10_000_000;
/// Boundary-cell mass fraction above which a field is flagged.
pub const BOUNDARY_WARNING: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct HeatField {
    pub form: DiscreteForm,
    pub values: Vec<f64>,
    pub time: f64,
    pub source: usize,
    pub mass: f64,
    pub initial_mass: f64,
    pub steps: usize,
    pub dt: f64,
    /// Largest `|mass - initial mass|` seen over all steps.
    pub mass_drift: f64,
    /// Smallest `min(values) / max(values)` seen over all steps.
    pub min_ratio: f64,
    pub boundary_fraction: f64,
    pub boundary_warning: bool,
}

impl HeatField {
    pub fn at_source(&self) -> f64 {
        self.values[self.source]
    }

    /// Mass in `{x1 < 0}`.
    pub fn negative_side_mass(&self) -> f64 {
        self.form
            .nodes
            .iter()
            .zip(self.values.iter().zip(&self.form.mass))
            .filter(|(x, _)| x.x1[0] < 0.0)
            .map(|(_, (v, m))| v * m)
            .sum()
    }

    pub fn nearest(&self, x: &Point) -> usize {
        nearest_node(&self.form, x)
    }
}

pub fn nearest_node(f: &DiscreteForm, x: &Point) -> usize {
    let d2 = |p: &Point| -> f64 {
        p.x1.iter().zip(&x.x1).chain(p.x2.iter().zip(&x.x2)).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let mut best = (0, f64::INFINITY);
    for (i, p) in f.nodes.iter().enumerate() {
        let d = d2(p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Time stepper with both factorisations kept.
pub struct HeatSolver {
    form: DiscreteForm,
    dt: f64,
    cn: Ldl,
    ie: Ldl,
}

impl HeatSolver {
    pub fn new(form: DiscreteForm, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt = {dt} must be positive"));
        }
        let cn = form.banded(0.5 * dt, 1.0).factor();
        let ie = form.banded(dt, 1.0).factor();
        Ok(HeatSolver { form, dt, cn, ie })
    }

    pub fn form(&self) -> &DiscreteForm {
        &self.form
    }

    pub fn delta(&self, source: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.form.len()];
        u[source] = 1.0 / self.form.mass[source];
        u
    }

    fn step(&self, u: &mut Vec<f64>, implicit: bool) {
        let mut rhs: Vec<f64> = u.iter().zip(&self.form.mass).map(|(a, m)| a * m).collect();
        if implicit {
            self.ie.solve_in_place(&mut rhs);
        } else {
            let ku = self.form.apply(u);
            for (r, k) in rhs.iter_mut().zip(ku) {
                *r -= 0.5 * self.dt * k;
            }
            self.cn.solve_in_place(&mut rhs);
        }
        *u = rhs;
    }

    /// Advances `field` by `steps` steps; the first `implicit` of them are implicit Euler.
    pub fn advance(&self, field: &mut HeatField, steps: usize, implicit: usize) -> Result<()> {
        if field.steps + steps > MAX_STEPS {
            return Err(Error::NoConvergence(format!("step cap {MAX_STEPS} exceeded")));
        }
        let m0 = field.initial_mass;
        for k in 0..steps {
            self.step(&mut field.values, k < implicit);
            let mass = self.form.mass_dot(&field.values, &vec![1.0; self.form.len()]);
            field.mass_drift = field.mass_drift.max((mass - m0).abs());
            let (lo, hi) = field.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            if hi > 0.0 {
                field.min_ratio = field.min_ratio.min(lo / hi);
            }
        }
        field.steps += steps;
        field.time += steps as f64 * self.dt;
        field.mass = self.form.mass_dot(&field.values, &vec![1.0; self.form.len()]);
        let b: f64 = self
            .form
            .boundary
            .iter()
            .zip(field.values.iter().zip(&self.form.mass))
            .filter(|(b, _)| **b)
            .map(|(_, (v, m))| v.abs() * m)
            .sum();
        field.boundary_fraction = b / field.mass.abs().max(f64::MIN_POSITIVE);
        field.boundary_warning = field.boundary_fraction > BOUNDARY_WARNING;
        Ok(())
    }

    pub fn start(&self, source: usize) -> HeatField {
        let values = self.delta(source);
        let mass = self.form.mass_dot(&values, &vec![1.0; self.form.len()]);
        HeatField {
            form: self.form.clone(),
            values,
            time: 0.0,
            source,
            mass,
            initial_mass: mass,
            steps: 0,
            dt: self.dt,
            mass_drift: 0.0,
            min_ratio: 0.0,
            boundary_fraction: 0.0,
            boundary_warning: false,
        }
    }
}

/// Number of steps of size close to `dt` that land exactly on `t`.
pub fn step_plan(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) {
        return invalid(format!("dt = {dt} must be positive"));
    }
    if !(t >= 0.0) {
        return invalid(format!("t = {t} must be non-negative"));
    }
    if t == 0.0 {
        return Ok((0, dt));
    }
    let n = (t / dt - 1e-9).ceil().max(1.0);
    if n > MAX_STEPS as f64 {
        return Err(Error::NoConvergence(format!("t / dt = {n} exceeds the step cap {MAX_STEPS}")));
    }
    Ok((n as usize, t / n))
}

/// Kernel column `y -> K_t(x0; y)` by Crank-Nicolson from a discrete delta at the node nearest `x0`.
pub fn evolve_kernel(p: &DegeneracyParams, reg: &Region, x0: &Point, t: f64, dt: f64, res: Resolution) -> Result<HeatField> {
    x0.conforms(p)?;
    let (steps, dt) = step_plan(t, dt)?;
    let form = assemble_region_form(p, reg, res, Conductance::Harmonic)?;
    let solver = HeatSolver::new(form, dt)?;
    let mut f = solver.start(nearest_node(solver.form(), x0));
    solver.advance(&mut f, steps, IMPLICIT_START_STEPS)?;
    Ok(f)
}

/// Chapman-Kolmogorov at the source: `sum_y K_t(x0; y)^2 m_y` against `K_2t(x0; x0)`.
/// Returns `(field at 2t, relative discrepancy)`.
pub fn semigroup_check(p: &DegeneracyParams, reg: &Region, x0: &Point, t: f64, dt: f64, res: Resolution) -> Result<(HeatField, f64)> {
    let (steps, dt) = step_plan(t, dt)?;
    let form = assemble_region_form(p, reg, res, Conductance::Harmonic)?;
    let solver = HeatSolver::new(form, dt)?;
    let src = nearest_node(solver.form(), x0);
    let mut half = solver.start(src);
    solver.advance(&mut half, steps, IMPLICIT_START_STEPS)?;
    let composed = solver.form().mass_dot(&half.values, &half.values);
    let mut full = solver.start(src);
    solver.advance(&mut full, 2 * steps, 2 * IMPLICIT_START_STEPS)?;
    let direct = full.at_source();
    Ok((full, (composed - direct).abs() / composed.abs().max(direct.abs())))
}

/// Cube `C_T` whose boundary is at quasi-distance at least `6 sqrt(t)` from `x0`.
pub fn default_domain(p: &DegeneracyParams, x0: &Point, t: f64) -> Result<Region> {
    x0.conforms(p)?;
    if !(t > 0.0) {
        return invalid("t must be positive");
    }
    let need = 6.0 * t.sqrt();
    let e = p.exponents();
    let far_enough = |tt: f64| -> bool {
        let (h1, h2) = (ppow(tt, e.a()), ppow(tt, e.b()));
        if x0.x1.iter().any(|v| v.abs() >= h1) || x0.x2.iter().any(|v| v.abs() >= h2) {
            return false;
        }
        boundary_samples(p, h1, h2).iter().all(|y| distance_d(p, x0, y).map(|d| d >= need).unwrap_or(false))
    };
    let mut hi = 1.0;
    while !far_enough(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence("no truncation cube found".into()));
        }
    }
    let mut lo = hi / 2.0;
    while far_enough(lo) && lo > 1e-12 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if far_enough(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Region::Cube { t: hi })
}

fn boundary_samples(p: &DegeneracyParams, h1: f64, h2: f64) -> Vec<Point> {
    if p.m == 0 {
        return vec![Point::new(vec![h1], vec![]), Point::new(vec![-h1], vec![])];
    }
    let k = 256;
    let mut out = Vec::with_capacity(8 * k);
    for i in 0..=k {
        let s = -1.0 + 2.0 * i as f64 / k as f64;
        for sign in [-1.0, 1.0] {
            out.push(Point::new(vec![sign * h1], vec![s * h2]));
            out.push(Point::new(vec![s * h1], vec![sign * h2]));
        }
    }
    out
}

pub fn kernel_symmetry_check(
    p: &DegeneracyParams,
    reg: &Region,
    x0: &Point,
    y0: &Point,
    t: f64,
    dt: f64,
    res: Resolution,
) -> Result<f64> {
    let a = evolve_kernel(p, reg, x0, t, dt, res)?;
    let b = evolve_kernel(p, reg, y0, t, dt, res)?;
    let kxy = a.values[b.source];
    let kyx = b.values[a.source];
    let m = kxy.abs().max(kyx.abs());
    Ok(if m == 0.0 { 0.0 } else { (kxy - kyx).abs() / m })
}

/// `|B(x; r)|`: exact on the line, grid estimate otherwise.
pub fn ball_volume(p: &DegeneracyParams, x: &Point, r: f64, grid: usize) -> Result<f64> {
    let ball = Region::Ball { center: x.clone(), r };
    if p.n == 1 && p.m == 0 {
        let (a, b) = ball_length_1d(p, &ball)?;
        return Ok(b - a);
    }
    Ok(region_volume(p, &ball, VolumeMethod::Grid { resolution: grid })?.estimate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnDiagRow {
    pub x: Point,
    pub t: f64,
    pub kernel: f64,
    pub volume: f64,
    pub product: f64,
    pub boundary_fraction: f64,
    pub warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnDiagTable {
    pub rows: Vec<OnDiagRow>,
    pub min_product: f64,
}

/// `K_t(x; x) |B(x; sqrt t)|` on the default truncation cube for each `(x, t)`,
/// with `steps_per_t` time steps per run.
pub fn ondiag_lower(p: &DegeneracyParams, centers: &[Point], times: &[f64], res: Resolution, steps_per_t: usize) -> Result<OnDiagTable> {
    if steps_per_t < 10 {
        return invalid("use at least 10 steps per run");
    }
    let jobs: Vec<(Point, f64)> = centers.iter().flat_map(|c| times.iter().map(move |t| (c.clone(), *t))).collect();
    let rows: Vec<OnDiagRow> = jobs
        .par_iter()
        .map(|(x, t)| {
            let dom = default_domain(p, x, *t)?;
            let f = evolve_kernel(p, &dom, x, *t, t / steps_per_t as f64, res)?;
            let k = f.at_source();
            let v = ball_volume(p, x, t.sqrt(), 512)?;
            Ok(OnDiagRow {
                x: x.clone(),
                t: *t,
                kernel: k,
                volume: v,
                product: k * v,
                boundary_fraction: f.boundary_fraction,
                warning: f.boundary_warning,
            })
        })
        .collect::<Result<_>>()?;
    let min_product = rows.iter().map(|r| r.product).fold(f64::INFINITY, f64::min);
    Ok(OnDiagTable { rows, min_product })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFitReport {
    pub a: f64,
    pub omega: f64,
    #[serde(rename = "aPrime")]
    pub a_prime: f64,
    #[serde(rename = "omegaPrime")]
    pub omega_prime: f64,
    pub range: [f64; 2],
    /// `||y - fit|| / ||y||` of the upper fit.
    pub residual: f64,
    pub samples: usize,
    pub bins: usize,
    /// `|B(x0; sqrt t)|` per time point.
    pub volumes: Vec<f64>,
    pub times: Vec<f64>,
    /// Exponents are measured against the quasi-distance, not the intrinsic metric.
    pub metric: String,
}

pub const FIT_RANGE: [f64; 2] = [1.0, 16.0];

/// Regression of `ln(K_t(x0; y) |B(x0; sqrt t)|)` on `D(x0, y)^2 / t` over `[1, 16]`.
pub fn fit_gaussian_bounds(p: &DegeneracyParams, x0: &Point, times: &[f64], res: Resolution, steps_per_t: usize) -> Result<GaussianFitReport> {
    if times.len() < 3 {
        return invalid("at least 3 time points are needed");
    }
    let per_t: Vec<(Vec<(f64, f64)>, f64)> = times
        .par_iter()
        .map(|&t| {
            let dom = default_domain(p, x0, t)?;
            let f = evolve_kernel(p, &dom, x0, t, t / steps_per_t.max(10) as f64, res)?;
            let v = ball_volume(p, x0, t.sqrt(), 512)?;
            let mut pts = Vec::new();
            for (y, k) in f.form.nodes.iter().zip(&f.values) {
                let s = distance_d(p, x0, y)?.powi(2) / t;
                if (FIT_RANGE[0]..=FIT_RANGE[1]).contains(&s) && *k > 0.0 {
                    pts.push((s, (k * v).ln()));
                }
            }
            Ok((pts, v))
        })
        .collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = per_t.iter().flat_map(|(p, _)| p.iter().cloned()).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().cloned().unzip();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if xs.len() < 3 || !(spread > 0.0) {
        return invalid("degenerate regression: samples do not spread over the fit range");
    }
    let (slope, icpt) = linear_fit(&xs, &ys);
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (icpt + slope * x)).powi(2)).sum();
    let norm: f64 = ys.iter().map(|y| y * y).sum();

    // lower envelope: minimum per unit bin
    let nb = (FIT_RANGE[1] - FIT_RANGE[0]) as usize;
    let mut mins: Vec<Option<(f64, f64)>> = vec![None; nb];
    for &(x, y) in &samples {
        let b = ((x - FIT_RANGE[0]) as usize).min(nb - 1);
        if mins[b].map_or(true, |(_, v)| y < v) {
            mins[b] = Some((x, y));
        }
    }
    let pts: Vec<(f64, f64)> = mins.into_iter().flatten().collect();
    if pts.len() < 3 {
        return invalid("fewer than 3 populated bins for the lower fit");
    }
    let (bx, by): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
    let (ls, li) = linear_fit(&bx, &by);
    Ok(GaussianFitReport {
        a: li.exp(),
        omega: -ls,
        a_prime: icpt.exp(),
        omega_prime: -slope,
        range: FIT_RANGE,
        residual: (rss / norm).sqrt(),
        samples: xs.len(),
        bins: pts.len(),
        volumes: per_t.iter().map(|(_, v)| *v).collect(),
        times: times.to_vec(),
        metric: "quasi-distance proxy".into(),
    })
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let s = fit_slope(x, y);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    (s, my - s * mx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub x0: f64,
    pub t: f64,
    pub fraction: f64,
    pub mass: f64,
    pub domain: Region,
    pub cells: usize,
    pub boundary_fraction: f64,
}

/// Mass of `K_t(x0; .)` on `{x1 < 0}` for a start point with `x1 > 0`; `n = 1, m = 0`.
pub fn crossing_mass(p: &DegeneracyParams, x0: f64, t: f64, dt: f64, res: Resolution) -> Result<CrossingReport> {
    if p.n != 1 || p.m != 0 {
        return invalid("crossing mass is implemented for n = 1, m = 0");
    }
    if !(x0 > 0.0) {
        return invalid("the start point must satisfy x1 > 0");
    }
    let x = Point::new(vec![x0], vec![]);
    let dom = default_domain(p, &x, t)?;
    let f = evolve_kernel(p, &dom, &x, t, dt, res)?;
    Ok(CrossingReport {
        x0,
        t,
        fraction: f.negative_side_mass() / f.mass,
        mass: f.mass,
        domain: dom,
        cells: f.form.len(),
        boundary_fraction: f.boundary_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> DegeneracyParams {
        DegeneracyParams::line(0.0, 0.0).unwrap()
    }

    #[test]
    fn delta_at_time_zero() {
        let p = flat();
        let f = evolve_kernel(&p, &Region::Interval { a: -1.0, b: 1.0 }, &Point::new(vec![0.0], vec![]), 0.0, 1e-3, Resolution::line(11)).unwrap();
        assert!((f.values[5] - 5.5).abs() < 1e-12);
        assert_eq!(f.values.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn mass_is_conserved() {
        let p = DegeneracyParams::line(0.3, 0.6).unwrap();
        let f = evolve_kernel(&p, &Region::Interval { a: -3.0, b: 3.0 }, &Point::new(vec![0.2], vec![]), 0.2, 1e-3, Resolution::line(301)).unwrap();
        assert!((f.mass - 1.0).abs() < 1e-12);
        assert!(f.mass_drift < 1e-12);
    }

    #[test]
    fn symmetric_kernel() {
        let p = DegeneracyParams::line(0.25, 0.25).unwrap();
        let r = Region::Interval { a: -4.0, b: 4.0 };
        let d = kernel_symmetry_check(&p, &r, &Point::new(vec![0.3], vec![]), &Point::new(vec![-0.7], vec![]), 0.1, 1e-3, Resolution::line(801)).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn default_domain_is_far_enough() {
        let p = flat();
        let x = Point::new(vec![0.5], vec![]);
        let Region::Cube { t } = default_domain(&p, &x, 0.25).unwrap() else { panic!() };
        // boundary at 0.5 + 6 * 0.5 = 3.5
        assert!((t - 3.5).abs() < 1e-9, "{t}");
    }

    #[test]
    fn step_plan_lands_on_t() {
        let (n, dt) = step_plan(0.25, 1e-3).unwrap();
        assert_eq!(n, 250);
        assert!((n as f64 * dt - 0.25).abs() < 1e-15);
        assert!(step_plan(1.0, 0.0).is_err());
    }

    #[test]
    fn too_few_times_for_fit() {
        let p = flat();
        assert!(fit_gaussian_bounds(&p, &Point::new(vec![0.0], vec![]), &[0.25, 0.5], Resolution::line(101), 50).is_err());
    }
}
