use serde::{Deserialize, Serialize};

use super::{distance_raw, norm, r_xi, DegeneracyParams, Pair, Point};
use crate::error::{invalid, Error, Result};
use crate::geometry::ppow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    /// `a < x1 < b` (n = 1).
    Interval { a: f64, b: f64 },
    /// `0 <= x1 < b` (n = 1).
    HalfInterval { b: f64 },
    /// The anisotropic cube `C_t` centred at the origin.
    Cube { t: f64 },
    /// `C(xi; kappa)`.
    ScaledBox { xi1: Vec<f64>, kappa: f64 },
    Ball { center: Point, r: f64 },
    /// Ball intersected with `x1 >= 0` (Plus) or `x1 <= 0` (Minus); n = 1.
    HalfBall { center: Point, r: f64, sign: Sign },
}

/// Axis-aligned box over the flat coordinates `[x1.., x2..]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

impl Region {
    pub fn validate(&self, p: &DegeneracyParams) -> Result<()> {
        let need_line = |what: &str| -> Result<()> {
            if p.n != 1 {
                return invalid(format!("{what} requires n = 1"));
            }
            Ok(())
        };
        match self {
            Region::Interval { a, b } => {
                need_line("interval")?;
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return invalid(format!("interval needs finite a < b, got ({a}, {b})"));
                }
            }
            Region::HalfInterval { b } => {
                need_line("half-interval")?;
                if !(*b > 0.0 && b.is_finite()) {
                    return invalid(format!("half-interval end {b} must be positive"));
                }
            }
            Region::Cube { t } => {
                if !(*t > 0.0 && t.is_finite()) {
                    return invalid(format!("cube scale {t} must be positive"));
                }
            }
            Region::ScaledBox { xi1, kappa } => {
                if xi1.len() != p.n {
                    return Err(Error::Dimension(format!("xi1 has length {}, n = {}", xi1.len(), p.n)));
                }
                if norm(xi1) == 0.0 {
                    return invalid("scaled box requires xi1 != 0");
                }
                if !(*kappa > 0.0 && *kappa <= 1.0) {
                    return invalid(format!("kappa = {kappa} must lie in (0, 1]"));
                }
            }
            Region::Ball { center, r } => {
                center.conforms(p)?;
                if !(*r > 0.0 && r.is_finite()) {
                    return invalid(format!("ball radius {r} must be positive"));
                }
            }
            Region::HalfBall { center, r, .. } => {
                need_line("half-ball")?;
                center.conforms(p)?;
                if !(*r > 0.0 && r.is_finite()) {
                    return invalid(format!("ball radius {r} must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Radius or edge parameter used to normalise Poincare constants.
    pub fn radius(&self, p: &DegeneracyParams) -> f64 {
        match self {
            Region::Interval { a, b } => 0.5 * (b - a),
            Region::HalfInterval { b } => *b,
            Region::Cube { t } => *t,
            Region::ScaledBox { xi1, kappa } => kappa * r_xi(p, xi1),
            Region::Ball { r, .. } | Region::HalfBall { r, .. } => *r,
        }
    }

    pub fn contains(&self, p: &DegeneracyParams, x: &Point) -> Result<bool> {
        self.validate(p)?;
        x.conforms(p)?;
        Ok(self.contains_raw(p, p.exponents().g(), x))
    }

    /// Membership without validation; `g` is the `(gamma, gamma')` pair.
    pub(crate) fn contains_raw(&self, p: &DegeneracyParams, g: Pair, x: &Point) -> bool {
        match self {
            Region::Interval { a, b } => *a < x.x1[0] && x.x1[0] < *b,
            Region::HalfInterval { b } => 0.0 <= x.x1[0] && x.x1[0] < *b,
            Region::Cube { t } => {
                let e = p.exponents();
                let (h1, h2) = (ppow(*t, e.a()), ppow(*t, e.b()));
                x.x1.iter().all(|v| v.abs() < h1) && x.x2.iter().all(|v| v.abs() < h2)
            }
            Region::ScaledBox { xi1, kappa } => {
                let e = p.exponents();
                let r = r_xi(p, xi1);
                let d1: f64 = x.x1.iter().zip(xi1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                d1 < 0.5 * kappa * ppow(r, e.a()) && norm(&x.x2) < 0.5 * kappa * ppow(r, e.b())
            }
            Region::Ball { center, r } => distance_raw(p, g, center, x) < *r,
            Region::HalfBall { center, r, sign } => {
                let side = match sign {
                    Sign::Plus => x.x1[0] >= 0.0,
                    Sign::Minus => x.x1[0] <= 0.0,
                };
                side && distance_raw(p, g, center, x) < *r
            }
        }
    }

    /// A box that contains the region. Exact for boxes; for balls it is
    /// derived from one-dimensional lower bounds on the quasi-distance.
    pub fn bounding_box(&self, p: &DegeneracyParams) -> Result<BoundingBox> {
        self.validate(p)?;
        let e = p.exponents();
        let bx = match self {
            Region::Interval { a, b } => {
                unbounded_second_block(p)?;
                BoundingBox { lo: vec![*a], hi: vec![*b] }
            }
            Region::HalfInterval { b } => {
                unbounded_second_block(p)?;
                BoundingBox { lo: vec![0.0], hi: vec![*b] }
            }
            Region::Cube { t } => {
                let (h1, h2) = (ppow(*t, e.a()), ppow(*t, e.b()));
                let mut lo = vec![-h1; p.n];
                lo.extend(std::iter::repeat(-h2).take(p.m));
                BoundingBox { hi: lo.iter().map(|v| -v).collect(), lo }
            }
            Region::ScaledBox { xi1, kappa } => {
                let r = r_xi(p, xi1);
                let (h1, h2) = (0.5 * kappa * ppow(r, e.a()), 0.5 * kappa * ppow(r, e.b()));
                let mut lo: Vec<f64> = xi1.iter().map(|c| c - h1).collect();
                let mut hi: Vec<f64> = xi1.iter().map(|c| c + h1).collect();
                lo.extend(std::iter::repeat(-h2).take(p.m));
                hi.extend(std::iter::repeat(h2).take(p.m));
                BoundingBox { lo, hi }
            }
            Region::Ball { center, r } | Region::HalfBall { center, r, .. } => {
                let mut b = ball_box(p, center, *r);
                if let Region::HalfBall { sign, .. } = self {
                    match sign {
                        Sign::Plus => b.lo[0] = b.lo[0].max(0.0),
                        Sign::Minus => b.hi[0] = b.hi[0].min(0.0),
                    }
                    if b.lo[0] >= b.hi[0] {
                        return invalid("half-ball lies on the wrong side of x1 = 0");
                    }
                }
                b
            }
        };
        Ok(bx)
    }
}

fn unbounded_second_block(p: &DegeneracyParams) -> Result<()> {
    if p.m > 0 {
        return invalid("intervals are unbounded in x2; use m = 0");
    }
    Ok(())
}

fn ball_box(p: &DegeneracyParams, c: &Point, r: f64) -> BoundingBox {
    let c1 = norm(&c.x1);
    let u1 = extent(r, 0.0, c1, p.delta1());
    let mut lo: Vec<f64> = c.x1.iter().map(|v| v - u1).collect();
    let mut hi: Vec<f64> = c.x1.iter().map(|v| v + u1).collect();
    if p.m > 0 {
        let k = ppow(2.0 * c1 + u1, p.delta2());
        let u2 = extent(r, k, norm(&c.x2), p.exponents().g());
        lo.extend(c.x2.iter().map(|v| v - u2));
        hi.extend(c.x2.iter().map(|v| v + u2));
    }
    BoundingBox { lo, hi }
}

/// Upper bound for `sup { u >= 0 : u < r (k + (u + 2c)^(e)) }`, with `e` < 1 on both branches.
pub(crate) fn extent(r: f64, k: f64, c: f64, e: Pair) -> f64 {
    let g = |u: f64| u - r * (k + ppow(u + 2.0 * c, e));
    // beyond `hi` the map u -> g(u) is positive and increasing
    let mut hi = 1.0f64.max(r * (k + 1.0));
    loop {
        let z = hi + 2.0 * c;
        if z >= 1.0 && g(hi) > 0.0 && 1.0 - r * e.hi * z.powf(e.hi - 1.0) > 0.0 {
            break;
        }
        hi *= 2.0;
    }
    const PIECES: usize = 1 << 16;
    let step = hi / PIECES as f64;
    for i in (0..PIECES).rev() {
        let a = i as f64 * step;
        let b = a + step;
        if a - r * (k + ppow(b + 2.0 * c, e)) <= 0.0 {
            return b;
        }
    }
    step
}
