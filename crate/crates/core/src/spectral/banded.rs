//! Symmetric banded matrices and their LDL^T factorisation.

/// Lower band of a symmetric matrix: entry `(i, j)` with `i - bw <= j <= i`
/// lives at `data[i * (bw + 1) + bw - (i - j)]`.
#[derive(Clone, Debug)]
pub struct Banded {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Banded { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Adds `v` to `(i, j)` and, implicitly, `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry outside the band");
        let k = self.at(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    pub fn factor(&self) -> Ldl {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + bw - (i - j)];
                for k in k0..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)] * d[k];
                }
                l[i * w + bw - (i - j)] = s / d[j];
            }
            let mut s = l[i * w + bw];
            for k in j0..i {
                let v = l[i * w + bw - (i - k)];
                s -= v * v * d[k];
            }
            // singular forms are shifted by the caller; guard against an exact zero
            if s.abs() < f64::MIN_POSITIVE {
                s = f64::MIN_POSITIVE;
            }
            d[i] = s;
            l[i * w + bw] = 1.0;
        }
        Ldl { n, bw, l, d }
    }
}

#[derive(Clone, Debug)]
pub struct Ldl {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + bw - (i - k)] * b[k];
            }
            b[i] = s;
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + bw - (k - i)] * b[k];
            }
            b[i] = s;
        }
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        let n = 50;
        let mut a = Banded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 4.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                s
            })
            .collect();
        a.factor().solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn wide_band_solve() {
        let n = 40;
        let bw = 5;
        let mut a = Banded::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 20.0);
            for k in 1..=bw {
                if i >= k {
                    a.add(i, i - k, -1.0 / k as f64);
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a.get(i, j) * x[j];
            }
        }
        a.factor().solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }
}
