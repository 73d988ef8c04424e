use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::region::extent;
use super::{distance_raw, DegeneracyParams, Point, Region, Sign};
use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum VolumeMethod {
    /// Midpoint rule on `resolution` cells per axis of the bounding box.
    Grid { resolution: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    /// Half the volume of cells on the boundary (grid) or one standard error (Monte Carlo).
    pub error: f64,
    pub box_volume: f64,
}

const MAX_GRID_CELLS: usize = 1 << 28;
const MC_CHUNK: usize = 1 << 14;

pub fn region_volume(p: &DegeneracyParams, reg: &Region, method: VolumeMethod) -> Result<VolumeEstimate> {
    let bx = reg.bounding_box(p)?;
    let g = p.exponents().g();
    let d = bx.dim();
    let widths: Vec<f64> = bx.lo.iter().zip(&bx.hi).map(|(a, b)| b - a).collect();
    let to_point = |v: &[f64]| Point::new(v[..p.n].to_vec(), v[p.n..].to_vec());
    match method {
        VolumeMethod::Grid { resolution } => {
            if resolution < 4 {
                return invalid("grid resolution must be at least 4");
            }
            let total = resolution
                .checked_pow(d as u32)
                .filter(|&c| c <= MAX_GRID_CELLS)
                .ok_or_else(|| Error::Invalid(format!("{resolution}^{d} cells exceeds the grid cap")))?;
            let h: Vec<f64> = widths.iter().map(|w| w / resolution as f64).collect();
            let inside: Vec<bool> = (0..total)
                .into_par_iter()
                .map(|idx| {
                    let mut rem = idx;
                    let mut v = vec![0.0; d];
                    for k in 0..d {
                        let i = rem % resolution;
                        rem /= resolution;
                        v[k] = bx.lo[k] + (i as f64 + 0.5) * h[k];
                    }
                    reg.contains_raw(p, g, &to_point(&v))
                })
                .collect();
            let mut count = 0usize;
            let mut edge = 0usize;
            for idx in 0..total {
                let mut rem = idx;
                let mut stride = 1;
                let mut differs = false;
                for _ in 0..d {
                    let i = rem % resolution;
                    rem /= resolution;
                    let lo_n = if i > 0 { inside[idx - stride] } else { false };
                    let hi_n = if i + 1 < resolution { inside[idx + stride] } else { false };
                    differs |= lo_n != inside[idx] || hi_n != inside[idx];
                    stride *= resolution;
                }
                count += inside[idx] as usize;
                edge += differs as usize;
            }
            let cell: f64 = h.iter().product();
            Ok(VolumeEstimate {
                estimate: count as f64 * cell,
                error: 0.5 * edge as f64 * cell,
                box_volume: bx.volume(),
            })
        }
        VolumeMethod::MonteCarlo { samples, seed } => {
            if samples < 100 {
                return invalid("Monte Carlo volume needs at least 100 samples");
            }
            let chunks = samples.div_ceil(MC_CHUNK);
            let hits: usize = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut r = rng::stream(seed, c as u64);
                    let n = MC_CHUNK.min(samples - c * MC_CHUNK);
                    let mut v = vec![0.0; d];
                    (0..n)
                        .filter(|_| {
                            for k in 0..d {
                                v[k] = bx.lo[k] + r.random::<f64>() * widths[k];
                            }
                            reg.contains_raw(p, g, &to_point(&v))
                        })
                        .count()
                })
                .sum();
            let q = hits as f64 / samples as f64;
            let vol = bx.volume();
            Ok(VolumeEstimate {
                estimate: vol * q,
                error: vol * (q * (1.0 - q) / samples as f64).sqrt(),
                box_volume: vol,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub r: f64,
    pub small: VolumeEstimate,
    pub large: VolumeEstimate,
    pub ratio: f64,
}

pub fn doubling_ratio(p: &DegeneracyParams, center: &Point, r: f64, method: VolumeMethod) -> Result<DoublingReport> {
    let small = region_volume(p, &Region::Ball { center: center.clone(), r }, method)?;
    let large = region_volume(p, &Region::Ball { center: center.clone(), r: 2.0 * r }, method)?;
    if small.estimate <= 0.0 {
        return Err(Error::NoConvergence(format!(
            "ball of radius {r} has zero estimated volume; increase the resolution"
        )));
    }
    Ok(DoublingReport { r, ratio: large.estimate / small.estimate, small, large })
}

/// Endpoints of a ball (or half-ball) on the line `n = 1, m = 0`.
///
/// `x -> D(x, c)` is increasing on either side of `c`, so both ends are found
/// by bisection.
pub fn ball_length_1d(p: &DegeneracyParams, reg: &Region) -> Result<(f64, f64)> {
    reg.validate(p)?;
    if p.n != 1 || p.m != 0 {
        return invalid("ball_length_1d needs n = 1, m = 0");
    }
    let (center, r, sign) = match reg {
        Region::Ball { center, r } => (center, *r, None),
        Region::HalfBall { center, r, sign } => (center, *r, Some(*sign)),
        _ => return invalid("ball_length_1d expects a ball"),
    };
    let c = center.x1[0];
    let u = extent(r, 0.0, c.abs(), p.delta1());
    let g = p.exponents().g();
    let dist = |x: f64| distance_raw(p, g, center, &Point::new(vec![x], vec![]));
    let edge = |dir: f64| {
        let (mut a, mut b) = (0.0f64, u);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if dist(c + dir * mid) < r {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-15 * b.max(1e-300) {
                break;
            }
        }
        c + dir * 0.5 * (a + b)
    };
    let (mut lo, mut hi) = (edge(-1.0), edge(1.0));
    match sign {
        Some(Sign::Plus) => lo = lo.max(0.0),
        Some(Sign::Minus) => hi = hi.min(0.0),
        None => {}
    }
    Ok((lo, hi.max(lo)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhombus_area() {
        let p = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
        let b = Region::Ball { center: Point::origin(&p), r: 1.0 };
        let v = region_volume(&p, &b, VolumeMethod::Grid { resolution: 400 }).unwrap();
        assert!((v.estimate - 4.0).abs() < 0.02, "{v:?}");
        assert!((v.estimate - 4.0).abs() <= 2.0 * v.error);
        let m = region_volume(&p, &b, VolumeMethod::MonteCarlo { samples: 200_000, seed: 7 }).unwrap();
        assert!((m.estimate - 4.0).abs() < 4.0 * m.error, "{m:?}");
    }

    #[test]
    fn euclidean_cube() {
        let p = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
        let v = region_volume(&p, &Region::Cube { t: 1.5 }, VolumeMethod::Grid { resolution: 16 }).unwrap();
        assert!((v.estimate - 9.0).abs() < 1e-12);
    }

    #[test]
    fn interval_doubling() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let d = doubling_ratio(&p, &Point::origin(&p), 0.7, VolumeMethod::Grid { resolution: 1000 }).unwrap();
        assert!((d.ratio - 2.0).abs() < 0.01);
    }

    #[test]
    fn exact_line_ball() {
        let p = DegeneracyParams::line(0.5, 0.5).unwrap();
        // |x|^(1/2) < r  <=>  |x| < r^2
        let (lo, hi) = ball_length_1d(&p, &Region::Ball { center: Point::origin(&p), r: 0.5 }).unwrap();
        assert!((lo + 0.25).abs() < 1e-14 && (hi - 0.25).abs() < 1e-14);
        let h = Region::HalfBall { center: Point::origin(&p), r: 0.5, sign: Sign::Plus };
        assert_eq!(ball_length_1d(&p, &h).unwrap().0, 0.0);
    }

    #[test]
    fn rejects_tiny_settings() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let b = Region::Ball { center: Point::origin(&p), r: 1.0 };
        assert!(region_volume(&p, &b, VolumeMethod::Grid { resolution: 2 }).is_err());
        assert!(region_volume(&p, &b, VolumeMethod::MonteCarlo { samples: 10, seed: 1 }).is_err());
    }
}
