use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::spectral_gap;
use super::form::{assemble_interval_form, assemble_line_form, assemble_region_form, Conductance};
use super::mesh::{Mesh1d, Resolution};
use crate::error::{invalid, Result};
use crate::geometry::{DegeneracyParams, Point, Region, Sign};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub region: Region,
    pub resolution: Resolution,
    pub cells: usize,
    pub gap: f64,
    /// `gap * r^2`.
    pub normalized: f64,
    pub radius: f64,
    pub residual: f64,
    pub iterations: usize,
    pub dropped_cells: usize,
}

/// Poincare constant of the Neumann form on `reg`.
///
/// Intervals and half-intervals use the one-dimensional reduced form; other
/// regions use the full operator (`n = 1`, `m <= 1`).
pub fn poincare_constant(p: &DegeneracyParams, reg: &Region, res: Resolution, cond: Conductance) -> Result<PoincareEstimate> {
    let form = match (reg, res) {
        (Region::Interval { .. } | Region::HalfInterval { .. }, Resolution::Uniform { n1, .. }) => {
            assemble_interval_form(p, reg, n1, false, cond)?
        }
        (Region::Interval { a, b }, Resolution::Graded { core, growth }) => {
            if (a + b).abs() > 1e-12 * b.abs() {
                return invalid("graded meshes need an interval symmetric about 0");
            }
            assemble_line_form(p, reg, &Mesh1d::graded_symmetric(*b, core, growth)?, false, cond)?
        }
        (Region::HalfInterval { b }, Resolution::Graded { core, growth }) => {
            assemble_line_form(p, reg, &Mesh1d::graded_half(*b, core, growth)?, false, cond)?
        }
        _ => assemble_region_form(p, reg, res, cond)?,
    };
    let g = spectral_gap(&form)?;
    let r = reg.radius(p);
    Ok(PoincareEstimate {
        region: reg.clone(),
        resolution: res,
        cells: form.len(),
        gap: g.gap,
        normalized: g.gap * r * r,
        radius: r,
        residual: g.residual,
        iterations: g.iterations,
        dropped_cells: form.dropped_cells,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Cube,
    Ball { center: Point },
    HalfBall { center: Point, sign: Sign },
    /// `(-r, r)`.
    Interval,
}

impl Family {
    pub fn region(&self, r: f64) -> Region {
        match self {
            Family::Cube => Region::Cube { t: r },
            Family::Ball { center } => Region::Ball { center: center.clone(), r },
            Family::HalfBall { center, sign } => Region::HalfBall { center: center.clone(), r, sign: *sign },
            Family::Interval => Region::Interval { a: -r, b: r },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub gap: f64,
    pub normalized: f64,
    pub cells: usize,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln normalized` against `ln r` over the large-radius half.
    pub slope: f64,
    pub fit_from: usize,
    /// `max / min` of the normalized constants.
    pub spread: f64,
}

/// Index where the slope fit starts: the upper half of the sweep.
pub fn fit_start(len: usize) -> usize {
    (len - 1) / 2
}

pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn poincare_sweep(
    p: &DegeneracyParams,
    family: &Family,
    radii: &[f64],
    res: Resolution,
    cond: Conductance,
) -> Result<SweepTable> {
    if radii.len() < 3 {
        return invalid("a sweep needs at least 3 radii to fit a slope");
    }
    if radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return invalid("radii must be positive and strictly increasing");
    }
    let rows: Vec<SweepRow> = radii
        .par_iter()
        .map(|&r| {
            poincare_constant(p, &family.region(r), res, cond).map(|e| SweepRow {
                r,
                gap: e.gap,
                normalized: e.normalized,
                cells: e.cells,
                residual: e.residual,
                iterations: e.iterations,
            })
        })
        .collect::<Result<_>>()?;
    let from = fit_start(rows.len());
    let xs: Vec<f64> = rows[from..].iter().map(|r| r.r.ln()).collect();
    let ys: Vec<f64> = rows[from..].iter().map(|r| r.normalized.ln()).collect();
    let max = rows.iter().map(|r| r.normalized).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.normalized).fold(f64::INFINITY, f64::min);
    Ok(SweepTable { slope: fit_slope(&xs, &ys), fit_from: from, spread: max / min, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_interval_is_scale_invariant() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let t = poincare_sweep(&p, &Family::Interval, &[0.5, 1.0, 3.0, 10.0], Resolution::line(401), Conductance::Harmonic).unwrap();
        let first = t.rows[0].normalized;
        for r in &t.rows {
            assert!((r.normalized - first).abs() < 1e-8 * first);
        }
        assert!(t.slope.abs() < 1e-8);
    }

    #[test]
    fn slope_fit_window() {
        assert_eq!(fit_start(5), 2);
        assert_eq!(fit_start(4), 1);
        assert_eq!(fit_start(9), 4);
        assert!((fit_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_short_or_unsorted_radii() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        assert!(poincare_sweep(&p, &Family::Interval, &[1.0, 2.0], Resolution::line(11), Conductance::Harmonic).is_err());
        assert!(poincare_sweep(&p, &Family::Interval, &[1.0, 3.0, 2.0], Resolution::line(11), Conductance::Harmonic).is_err());
    }
}
