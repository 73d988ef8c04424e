use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One-dimensional cell mesh given by its faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh1d {
    pub faces: Vec<f64>,
}

impl Mesh1d {
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells < 1 || !(a < b) {
            return invalid(format!("bad uniform mesh on ({a}, {b}) with {cells} cells"));
        }
        let h = (b - a) / cells as f64;
        let mut faces: Vec<f64> = (0..=cells).map(|i| a + i as f64 * h).collect();
        faces[cells] = b;
        Ok(Mesh1d { faces })
    }

    /// Uniform cells of width `2 / core` on `[-1, 1]` (`core` odd, so 0 is a centre),
    /// then widths growing by `growth` per cell out to `[-l, l]`.
    pub fn graded_symmetric(l: f64, core: usize, growth: f64) -> Result<Self> {
        let half = graded_positive(l, core, growth, true)?;
        let mut faces: Vec<f64> = half.iter().rev().map(|v| -v).collect();
        faces.extend(half);
        Ok(Mesh1d { faces })
    }

    /// Same grading on `[0, b]`, with a face at 0.
    pub fn graded_half(b: f64, core: usize, growth: f64) -> Result<Self> {
        let mut faces = vec![0.0];
        faces.extend(graded_positive(b, core, growth, false)?);
        Ok(Mesh1d { faces })
    }

    pub fn cells(&self) -> usize {
        self.faces.len() - 1
    }

    pub fn centers(&self) -> Vec<f64> {
        self.faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.faces.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

fn graded_positive(l: f64, core: usize, growth: f64, centred: bool) -> Result<Vec<f64>> {
    if core < 3 || core % 2 == 0 || !(growth >= 1.0) || !(l > 0.0) {
        return invalid("graded mesh needs odd core >= 3, growth >= 1 and a positive length");
    }
    let h0 = 2.0 / core as f64;
    let mut x = if centred { 0.5 * h0 } else { 0.0 };
    let mut f = if centred { vec![x] } else { vec![] };
    while x + h0 <= 1.0f64.min(l) * (1.0 + 1e-12) {
        x += h0;
        f.push(x);
    }
    let mut h = h0;
    while x < l {
        h *= growth;
        x = (x + h).min(l);
        f.push(x);
    }
    let k = f.len();
    if k >= 3 && f[k - 1] - f[k - 2] < 0.5 * (f[k - 2] - f[k - 3]) {
        f.remove(k - 2);
    }
    if let Some(last) = f.last_mut() {
        *last = l;
    }
    Ok(f)
}

/// How a region is discretised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mesh", rename_all = "lowercase")]
pub enum Resolution {
    /// `n1` cells across the first coordinate and `n2` across the second (ignored when m = 0).
    Uniform { n1: usize, n2: usize },
    /// Graded line mesh; only for one-dimensional regions.
    Graded { core: usize, growth: f64 },
}

impl Resolution {
    pub fn line(n: usize) -> Self {
        Resolution::Uniform { n1: n, n2: 1 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_symmetric_mesh() {
        let m = Mesh1d::graded_symmetric(1000.0, 65, 1.05).unwrap();
        assert_eq!(m.faces[0], -1000.0);
        assert_eq!(*m.faces.last().unwrap(), 1000.0);
        assert!(m.widths().iter().all(|w| *w > 0.0));
        // centre cell sits on 0
        assert!(m.centers().iter().any(|c| c.abs() < 1e-15));
        let c = m.cells();
        assert_eq!(c % 2, 1);
    }

    #[test]
    fn graded_short_interval() {
        let m = Mesh1d::graded_symmetric(0.5, 65, 1.05).unwrap();
        assert!(m.widths().iter().all(|w| *w > 0.0));
        assert_eq!(*m.faces.last().unwrap(), 0.5);
        let h = Mesh1d::graded_half(3.0, 33, 1.1).unwrap();
        assert_eq!(h.faces[0], 0.0);
        assert!(h.widths().iter().all(|w| *w > 0.0));
    }
}
