//! Piecewise powers, the scaling semigroup, the quasi-distance and regions.

mod checks;
mod power;
mod region;
mod volume;

pub use checks::{
    check_embeddings, check_intertwining, check_scaling_bounds, find_kappa, scaling_bound_margins,
    EmbeddingReport, IntertwiningReport, KappaEstimate, ScalingReport,
};
pub use power::{derived_exponents, ln_ppow, piecewise_power, ppow, DegeneracyParams, Pair, ScalingExponents};
pub use region::{BoundingBox, Region, Sign};
pub use volume::{
    ball_length_1d, doubling_ratio, region_volume, VolumeEstimate, VolumeMethod,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl Point {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        Point { x1, x2 }
    }

    pub fn origin(p: &DegeneracyParams) -> Self {
        Point::new(vec![0.0; p.n], vec![0.0; p.m])
    }

    /// Splits a flat coordinate list `[x1.., x2..]`.
    pub fn from_flat(p: &DegeneracyParams, v: &[f64]) -> Result<Self> {
        if v.len() != p.n + p.m {
            return Err(Error::Dimension(format!(
                "expected {} coordinates, got {}",
                p.n + p.m,
                v.len()
            )));
        }
        Ok(Point::new(v[..p.n].to_vec(), v[p.n..].to_vec()))
    }

    pub fn conforms(&self, p: &DegeneracyParams) -> Result<()> {
        if self.x1.len() != p.n || self.x2.len() != p.m {
            return Err(Error::Dimension(format!(
                "point has blocks ({}, {}), params need ({}, {})",
                self.x1.len(),
                self.x2.len(),
                p.n,
                p.m
            )));
        }
        Ok(())
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn scale_point(p: &DegeneracyParams, t: f64, x: &Point) -> Result<Point> {
    if !(t > 0.0) {
        return invalid(format!("scale factor t = {t} must be positive"));
    }
    x.conforms(p)?;
    let e = p.exponents();
    let s1 = ppow(t, e.a());
    let s2 = ppow(t, e.b());
    Ok(Point::new(
        x.x1.iter().map(|v| s1 * v).collect(),
        x.x2.iter().map(|v| s2 * v).collect(),
    ))
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Quasi-distance without dimension checks.
pub(crate) fn distance_raw(p: &DegeneracyParams, g: Pair, x: &Point, y: &Point) -> f64 {
    let s1 = norm(&x.x1) + norm(&y.x1);
    let mut d = ratio(dist(&x.x1, &y.x1), ppow(s1, p.delta1()));
    if p.m > 0 {
        let s2 = norm(&x.x2) + norm(&y.x2);
        d += ratio(dist(&x.x2, &y.x2), ppow(s1, p.delta2()) + ppow(s2, g));
    }
    d
}

pub fn distance_d(p: &DegeneracyParams, x: &Point, y: &Point) -> Result<f64> {
    x.conforms(p)?;
    y.conforms(p)?;
    Ok(distance_raw(p, p.exponents().g(), x, y))
}

pub fn r_xi(p: &DegeneracyParams, xi1: &[f64]) -> f64 {
    ppow(norm(xi1), Pair::new(1.0 - p.d1, 1.0 - p.d1p))
}

pub fn carre_du_champ(p: &DegeneracyParams, grad1: &[f64], grad2: &[f64], x: &Point) -> Result<f64> {
    x.conforms(p)?;
    if grad1.len() != p.n || grad2.len() != p.m {
        return Err(Error::Dimension("gradient blocks do not match (n, m)".into()));
    }
    let r = norm(&x.x1);
    let g1: f64 = grad1.iter().map(|v| v * v).sum();
    let g2: f64 = grad2.iter().map(|v| v * v).sum();
    Ok(p.w1(r) * g1 + if p.m > 0 { p.w2(r) * g2 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> DegeneracyParams {
        DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let p = flat();
        let o = Point::new(vec![0.0], vec![0.0]);
        let x = Point::new(vec![1.0], vec![0.0]);
        assert_eq!(distance_d(&p, &x, &x).unwrap(), 0.0);
        assert_eq!(distance_d(&p, &x, &o).unwrap(), 1.0);
        let x = Point::new(vec![0.0], vec![1.0]);
        assert_eq!(distance_d(&p, &x, &o).unwrap(), 0.5);
        let bad = Point::new(vec![0.0, 1.0], vec![]);
        assert!(distance_d(&p, &bad, &o).is_err());
    }

    #[test]
    fn distance_on_degeneracy_surface() {
        let p = DegeneracyParams::new(1, 1, 0.5, 0.3, 0.7, 0.2).unwrap();
        let x = Point::new(vec![0.0], vec![0.0]);
        assert_eq!(distance_d(&p, &x, &x).unwrap(), 0.0);
        let y = Point::new(vec![0.0], vec![2.0]);
        assert!(distance_d(&p, &x, &y).unwrap().is_finite());
    }

    #[test]
    fn scale_examples() {
        let p = flat();
        let x = Point::new(vec![1.0], vec![1.0]);
        assert_eq!(scale_point(&p, 1.0, &x).unwrap(), x);
        assert_eq!(scale_point(&p, 4.0, &x).unwrap(), Point::new(vec![4.0], vec![4.0]));
        let q = DegeneracyParams::new(1, 0, 0.5, 0.5, 0.0, 0.0).unwrap();
        let y = scale_point(&q, 0.5, &Point::new(vec![1.0], vec![])).unwrap();
        assert!((y.x1[0] - 0.25).abs() < 1e-15);
        assert!(scale_point(&p, 0.0, &x).is_err());
    }

    #[test]
    fn r_xi_examples() {
        let p = DegeneracyParams::new(1, 0, 0.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!(r_xi(&p, &[0.0]), 0.0);
        assert!((r_xi(&p, &[4.0]) - 2.0).abs() < 1e-15);
        let q = DegeneracyParams::new(1, 0, 0.5, 0.5, 0.0, 0.0).unwrap();
        assert!((r_xi(&q, &[0.25]) - 0.5).abs() < 1e-15);
        let x = Point::new(vec![4.0], vec![]);
        assert!((distance_d(&p, &x, &Point::origin(&p)).unwrap() - r_xi(&p, &[4.0])).abs() < 1e-15);
    }

    #[test]
    fn carre_examples() {
        let p = DegeneracyParams::new(1, 1, 0.5, 0.5, 0.0, 0.0).unwrap();
        let x = Point::new(vec![4.0], vec![0.0]);
        assert_eq!(carre_du_champ(&p, &[0.0], &[0.0], &x).unwrap(), 0.0);
        assert!((carre_du_champ(&p, &[1.0], &[0.0], &x).unwrap() - 4.0).abs() < 1e-14);
        let q = DegeneracyParams::line(0.0, 0.0).unwrap();
        let y = Point::new(vec![0.3], vec![]);
        assert_eq!(carre_du_champ(&q, &[1.0], &[], &y).unwrap(), 1.0);
    }
}
