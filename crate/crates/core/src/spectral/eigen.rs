//! Smallest generalized eigenpair `K u = lambda M u`, orthogonal to constants for
//! pure Neumann forms, by block inverse iteration with Rayleigh-Ritz.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::form::DiscreteForm;
use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub block: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-9, max_iter: 10_000, block: 6 }
    }
}

#[derive(Clone, Debug)]
pub struct GapResult {
    pub gap: f64,
    /// Unclamped Rayleigh quotient.
    pub raw: f64,
    /// Mass-normalised eigenvector.
    pub eigvec: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn spectral_gap(f: &DiscreteForm) -> Result<GapResult> {
    spectral_gap_with(f, EigenOptions::default())
}

pub fn spectral_gap_with(f: &DiscreteForm, opt: EigenOptions) -> Result<GapResult> {
    let n = f.len();
    if n < 3 {
        return invalid("eigenproblem needs at least 3 unknowns");
    }
    let deflate = f.zero_order.is_none();
    let bs = opt.block.max(1).min(if deflate { n - 1 } else { n });
    let trace_k: f64 = f.diagonal().iter().sum();
    let trace_m = f.total_mass();
    let eps = 1e-12 * (trace_k / trace_m).max(f64::MIN_POSITIVE);
    let ldl = f.banded(1.0, eps).factor();
    let total = trace_m;
    let project = |v: &mut [f64]| {
        if deflate {
            let c = f.mass_dot(v, &vec![1.0; n]) / total;
            v.iter_mut().for_each(|a| *a -= c);
        }
    };
    let mut seed_idx = 0u64;
    let mut random = |v: &mut Vec<f64>| {
        let mut r = rng::stream(0x5eed, seed_idx);
        seed_idx += 1;
        for a in v.iter_mut() {
            *a = r.random::<f64>() - 0.5;
        }
    };
    let mut v: Vec<Vec<f64>> = (0..bs)
        .map(|_| {
            let mut a = vec![0.0; n];
            random(&mut a);
            a
        })
        .collect();
    for c in v.iter_mut() {
        project(c);
    }
    orthonormalize(f, &mut v, &project, &mut random);

    // symmetric scaling for the residual: A = M^-1/2 K M^-1/2
    let sq: Vec<f64> = f.mass.iter().map(|m| m.sqrt()).collect();
    let a_norm = {
        let mut r = f.diagonal();
        for (i, ri) in r.iter_mut().enumerate() {
            *ri /= f.mass[i];
        }
        for e in &f.edges {
            r[e.i] += e.c / (sq[e.i] * sq[e.j]);
            r[e.j] += e.c / (sq[e.i] * sq[e.j]);
        }
        r.into_iter().fold(0.0, f64::max).max(f64::MIN_POSITIVE)
    };
    let residual_of = |u: &[f64], lam: f64| -> f64 {
        let ku = f.apply(u);
        let num: f64 = ku
            .iter()
            .zip(u)
            .zip(&f.mass)
            .map(|((k, x), m)| {
                let r = (k - lam * m * x) / m.sqrt();
                r * r
            })
            .sum::<f64>()
            .sqrt();
        num / (a_norm * f.mass_dot(u, u).sqrt())
    };

    let mut last = (f64::NAN, f64::INFINITY);
    for it in 1..=opt.max_iter {
        for c in v.iter_mut() {
            let mut w: Vec<f64> = c.iter().zip(&f.mass).map(|(a, m)| a * m).collect();
            ldl.solve_in_place(&mut w);
            project(&mut w);
            *c = w;
        }
        orthonormalize(f, &mut v, &project, &mut random);
        let k = v.len();
        let h = DMatrix::from_fn(k, k, |i, j| f.bilinear(&v[i], &v[j]));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotated: Vec<Vec<f64>> = order
            .iter()
            .map(|&col| {
                let mut out = vec![0.0; n];
                for (j, vj) in v.iter().enumerate() {
                    let q = eig.eigenvectors[(j, col)];
                    for (o, x) in out.iter_mut().zip(vj) {
                        *o += q * x;
                    }
                }
                out
            })
            .collect();
        v = rotated;
        let u = &v[0];
        let lam = f.energy(u) / f.mass_dot(u, u);
        let res = residual_of(u, lam);
        last = (lam, res);
        if res <= opt.tol {
            let norm = f.mass_dot(u, u).sqrt();
            let mut eigvec: Vec<f64> = u.iter().map(|a| a / norm).collect();
            // fixed sign for reproducible output
            if let Some(big) = eigvec.iter().cloned().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
                if big < 0.0 {
                    eigvec.iter_mut().for_each(|a| *a = -*a);
                }
            }
            return Ok(GapResult { gap: lam.max(0.0), raw: lam, eigvec, residual: res, iterations: it });
        }
    }
    Err(Error::NoConvergence(format!(
        "inverse iteration stopped after {} iterations with lambda = {:e}, residual = {:e}",
        opt.max_iter, last.0, last.1
    )))
}

/// Mass-orthonormalises the block by two passes of modified Gram-Schmidt,
/// replacing columns that collapse.
fn orthonormalize(
    f: &DiscreteForm,
    v: &mut [Vec<f64>],
    project: &dyn Fn(&mut [f64]),
    random: &mut dyn FnMut(&mut Vec<f64>),
) {
    for i in 0..v.len() {
        for attempt in 0..4 {
            let before = f.mass_dot(&v[i], &v[i]).sqrt();
            for _ in 0..2 {
                for j in 0..i {
                    let c = f.mass_dot(&v[i], &v[j]);
                    let (head, tail) = v.split_at_mut(i);
                    for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                        *a -= c * b;
                    }
                }
            }
            let after = f.mass_dot(&v[i], &v[i]).sqrt();
            if after > 1e-10 * before && after > 0.0 && after.is_finite() {
                v[i].iter_mut().for_each(|a| *a /= after);
                break;
            }
            random(&mut v[i]);
            project(&mut v[i]);
            if attempt == 3 {
                let after = f.mass_dot(&v[i], &v[i]).sqrt();
                v[i].iter_mut().for_each(|a| *a /= after);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DegeneracyParams, Region};
    use crate::spectral::form::{assemble_interval_form, Conductance};

    #[test]
    fn neumann_cosine_mode() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let f = assemble_interval_form(&p, &Region::Interval { a: -1.0, b: 1.0 }, 1025, false, Conductance::Harmonic).unwrap();
        let g = spectral_gap(&f).unwrap();
        let exact = std::f64::consts::FRAC_PI_2.powi(2);
        assert!((g.gap - exact).abs() / exact < 1e-5, "{}", g.gap);
        let c = f.mass_dot(&vec![1.0; f.len()], &g.eigvec);
        let norm = g.eigvec.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(c.abs() <= 1e-8 * norm);
        assert!(g.residual <= 1e-9);
    }

    #[test]
    fn zero_order_form_uses_full_spectrum() {
        // -u'' + (pi/2)^2 u with Neumann ends: lowest mode is the constant
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let f = assemble_interval_form(&p, &Region::Interval { a: -1.0, b: 1.0 }, 201, true, Conductance::Harmonic).unwrap();
        let g = spectral_gap(&f).unwrap();
        assert!((g.gap - std::f64::consts::FRAC_PI_2.powi(2)).abs() < 1e-9);
    }

    #[test]
    fn decoupled_halves_give_zero() {
        let p = DegeneracyParams::line(0.5, 0.5).unwrap();
        let f = assemble_interval_form(&p, &Region::Interval { a: -1.0, b: 1.0 }, 101, false, Conductance::Harmonic).unwrap();
        let g = spectral_gap(&f).unwrap();
        assert!(g.gap < 1e-9, "{}", g.gap);
    }
}
