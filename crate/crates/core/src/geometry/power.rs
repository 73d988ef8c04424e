use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Exponent pair `(lo, hi)`: `lo` applies for `a <= 1`, `hi` for `a >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub lo: f64,
    pub hi: f64,
}

impl Pair {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Pair { lo, hi }
    }

    pub fn scaled(self, k: f64) -> Self {
        Pair::new(k * self.lo, k * self.hi)
    }

    /// `(max, min)`
    pub fn hat(self) -> Self {
        Pair::new(self.lo.max(self.hi), self.lo.min(self.hi))
    }

    /// `(min, max)`
    pub fn tilde(self) -> Self {
        Pair::new(self.lo.min(self.hi), self.lo.max(self.hi))
    }

    pub fn for_base(self, a: f64) -> f64 {
        if a <= 1.0 {
            self.lo
        } else {
            self.hi
        }
    }
}

/// Piecewise power without argument checks. `0^0 = 1`, `0^e = 0` for `e > 0`.
#[inline]
pub fn ppow(a: f64, e: Pair) -> f64 {
    a.powf(e.for_base(a))
}

/// `ln(a^(e))` for `a > 0`.
#[inline]
pub fn ln_ppow(a: f64, e: Pair) -> f64 {
    a.ln() * e.for_base(a)
}

pub fn piecewise_power(a: f64, e: Pair) -> Result<f64> {
    if !(a >= 0.0) {
        return invalid(format!("piecewise power of negative or NaN base {a}"));
    }
    Ok(ppow(a, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyParams {
    pub n: usize,
    pub m: usize,
    pub d1: f64,
    pub d1p: f64,
    pub d2: f64,
    pub d2p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub alpha: f64,
    pub alphap: f64,
    pub beta: f64,
    pub betap: f64,
    pub gamma: f64,
    pub gammap: f64,
    #[serde(rename = "deltaM")]
    pub delta_m: f64,
}

impl DegeneracyParams {
    pub fn new(n: usize, m: usize, d1: f64, d1p: f64, d2: f64, d2p: f64) -> Result<Self> {
        let p = DegeneracyParams { n, m, d1, d1p, d2, d2p };
        p.validate()?;
        Ok(p)
    }

    /// One-dimensional model with `n = 1`, `m = 0`.
    pub fn line(d1: f64, d1p: f64) -> Result<Self> {
        Self::new(1, 0, d1, d1p, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return invalid("n must be at least 1");
        }
        for (name, v) in [("d1", self.d1), ("d1p", self.d1p)] {
            if !(0.0..1.0).contains(&v) {
                return invalid(format!("{name} = {v} must lie in [0, 1)"));
            }
        }
        for (name, v) in [("d2", self.d2), ("d2p", self.d2p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn exponents(&self) -> ScalingExponents {
        derived_exponents(self)
    }

    pub fn delta1(&self) -> Pair {
        Pair::new(self.d1, self.d1p)
    }

    pub fn delta2(&self) -> Pair {
        Pair::new(self.d2, self.d2p)
    }

    /// Weight `|x1|^(2d1, 2d1p)` of the first-block gradient.
    pub fn w1(&self, r: f64) -> f64 {
        ppow(r, self.delta1().scaled(2.0))
    }

    /// Weight `|x1|^(2d2, 2d2p)` of the second-block gradient.
    pub fn w2(&self, r: f64) -> f64 {
        ppow(r, self.delta2().scaled(2.0))
    }

    pub fn is_isotropic_pairs(&self) -> bool {
        self.d1 == self.d1p && self.d2 == self.d2p
    }
}

pub fn derived_exponents(p: &DegeneracyParams) -> ScalingExponents {
    let alpha = 1.0 / (1.0 - p.d1);
    let alphap = 1.0 / (1.0 - p.d1p);
    ScalingExponents {
        alpha,
        alphap,
        beta: (1.0 + p.d2 - p.d1) * alpha,
        betap: (1.0 + p.d2p - p.d1p) * alphap,
        gamma: p.d2 / (1.0 + p.d2 - p.d1),
        gammap: p.d2p / (1.0 + p.d2p - p.d1p),
        delta_m: p.d1.max(p.d1p).max(p.d2).max(p.d2p),
    }
}

impl ScalingExponents {
    pub fn a(&self) -> Pair {
        Pair::new(self.alpha, self.alphap)
    }
    pub fn b(&self) -> Pair {
        Pair::new(self.beta, self.betap)
    }
    pub fn g(&self) -> Pair {
        Pair::new(self.gamma, self.gammap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_examples() {
        let e = Pair::new(0.5, 1.5);
        assert_eq!(piecewise_power(1.0, e).unwrap(), 1.0);
        assert!((piecewise_power(2.0, e).unwrap() - 2.828427124746190).abs() < 1e-12);
        assert!((piecewise_power(0.5, e).unwrap() - 0.7071067811865476).abs() < 1e-12);
        assert_eq!(piecewise_power(0.0, Pair::new(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(piecewise_power(0.0, Pair::new(0.3, 0.0)).unwrap(), 0.0);
        assert!(piecewise_power(-1.0, e).is_err());
    }

    #[test]
    fn exponent_examples() {
        let e = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap().exponents();
        assert_eq!((e.alpha, e.alphap, e.beta, e.betap, e.gamma, e.gammap), (1.0, 1.0, 1.0, 1.0, 0.0, 0.0));
        let e = DegeneracyParams::new(1, 0, 0.0, 0.5, 0.0, 0.0).unwrap().exponents();
        assert_eq!(e.alphap, 2.0);
        let e = DegeneracyParams::new(1, 1, 0.5, 0.5, 0.5, 0.5).unwrap().exponents();
        assert_eq!((e.alpha, e.beta, e.gamma), (2.0, 2.0, 0.5));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DegeneracyParams::new(0, 0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(DegeneracyParams::new(1, 0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(DegeneracyParams::new(1, 0, 0.0, -0.1, 0.0, 0.0).is_err());
        assert!(DegeneracyParams::new(1, 1, 0.0, 0.0, -1.0, 0.0).is_err());
    }
}
