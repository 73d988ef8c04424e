use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::banded::Banded;
use super::mesh::{Mesh1d, Resolution};
use crate::error::{invalid, Result};
use crate::geometry::{ball_length_1d, ppow, DegeneracyParams, Pair, Point, Region};

/// How edge conductances are computed from the weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Conductance {
    /// Exact flux of the one-dimensional problem between the two centres:
    /// `1 / int dx / w(|x|)`, zero when the integral diverges.
    #[default]
    Harmonic,
    /// `w(|face|) / h`.
    Midpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layout {
    Line { faces: Vec<f64> },
    Plane { n1: usize, n2: usize, lo: [f64; 2], h: [f64; 2] },
}

/// Weighted Neumann form on cell centres.
#[derive(Clone, Debug)]
pub struct DiscreteForm {
    pub params: DegeneracyParams,
    pub region: Region,
    pub nodes: Vec<Point>,
    pub mass: Vec<f64>,
    /// Off-diagonal couplings; the stiffness is `sum c (e_i - e_j)(e_i - e_j)^T`.
    pub edges: Vec<Edge>,
    pub zero_order: Option<Vec<f64>>,
    pub layout: Layout,
    /// Rasterised cells discarded because they were not connected to the main component.
    pub dropped_cells: usize,
    /// Cells touching the outer boundary of the discretised region.
    pub boundary: Vec<bool>,
}

impl DiscreteForm {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for e in &self.edges {
            let f = e.c * (u[e.i] - u[e.j]);
            out[e.i] += f;
            out[e.j] -= f;
        }
        if let Some(z) = &self.zero_order {
            for (o, (zi, ui)) in out.iter_mut().zip(z.iter().zip(u)) {
                *o += zi * ui;
            }
        }
        out
    }

    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s: f64 = self.edges.iter().map(|e| e.c * (u[e.i] - u[e.j]) * (v[e.i] - v[e.j])).sum();
        if let Some(z) = &self.zero_order {
            s += z.iter().zip(u.iter().zip(v)).map(|(a, (b, c))| a * b * c).sum::<f64>();
        }
        s
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    pub fn mass_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(v)).map(|(m, (a, b))| m * a * b).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass-weighted average.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.mass.iter().zip(u).map(|(m, a)| m * a).sum::<f64>() / self.total_mass()
    }

    /// Discrete Rayleigh quotient of `u` against its variance; the minimum over `u` is the gap.
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let mu = if self.zero_order.is_some() { 0.0 } else { self.mean(u) };
        let var: f64 = self.mass.iter().zip(u).map(|(m, a)| m * (a - mu) * (a - mu)).sum();
        self.energy(u) / var
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = self.zero_order.clone().unwrap_or_else(|| vec![0.0; self.len()]);
        for e in &self.edges {
            d[e.i] += e.c;
            d[e.j] += e.c;
        }
        d
    }

    /// Row sums of the stiffness matrix (zero without a zero-order term).
    pub fn row_sums(&self) -> Vec<f64> {
        self.apply(&vec![1.0; self.len()])
    }

    /// Largest row sum of absolute entries.
    pub fn stiffness_inf_norm(&self) -> f64 {
        let mut r = self.diagonal();
        for e in &self.edges {
            r[e.i] += e.c.abs();
            r[e.j] += e.c.abs();
        }
        r.into_iter().fold(0.0, f64::max)
    }

    pub fn bandwidth(&self) -> usize {
        self.edges.iter().map(|e| e.i.abs_diff(e.j)).max().unwrap_or(0)
    }

    /// `a K + b M` in banded storage.
    pub fn banded(&self, a: f64, b: f64) -> Banded {
        let mut m = Banded::zeros(self.len(), self.bandwidth());
        for (i, d) in self.diagonal().iter().enumerate() {
            m.add(i, i, a * d + b * self.mass[i]);
        }
        for e in &self.edges {
            m.add(e.i, e.j, -a * e.c);
        }
        m
    }

    /// Dense stiffness matrix; for tests on small forms.
    pub fn stiffness_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut k = vec![vec![0.0; n]; n];
        for (i, d) in self.diagonal().iter().enumerate() {
            k[i][i] = *d;
        }
        for e in &self.edges {
            k[e.i][e.j] -= e.c;
            k[e.j][e.i] -= e.c;
        }
        k
    }

    pub fn x1(&self) -> Vec<f64> {
        self.nodes.iter().map(|p| p.x1[0]).collect()
    }
}

/// `int_a^b s^(-k) ds` for `0 <= a < b`.
fn inv_pow_integral(a: f64, b: f64, k: f64) -> f64 {
    let q = 1.0 - k;
    if a == 0.0 {
        return if q > 0.0 { b.powf(q) / q } else { f64::INFINITY };
    }
    let lr = ((b - a) / a).ln_1p();
    if q == 0.0 {
        lr
    } else {
        a.powf(q) * (q * lr).exp_m1() / q
    }
}

/// `int_a^b ds / |s|^(e)`.
pub fn inv_weight_integral(a: f64, b: f64, e: Pair) -> f64 {
    if a >= b {
        return 0.0;
    }
    if b <= 0.0 {
        return inv_weight_integral(-b, -a, e);
    }
    if a < 0.0 {
        return inv_weight_integral(0.0, -a, e) + inv_weight_integral(0.0, b, e);
    }
    let mut s = 0.0;
    if a < 1.0 {
        s += inv_pow_integral(a, b.min(1.0), e.lo);
    }
    if b > 1.0 {
        s += inv_pow_integral(a.max(1.0), b, e.hi);
    }
    s
}

/// `int_a^b |s|^(e) ds` with non-negative exponents.
pub fn weight_integral(a: f64, b: f64, e: Pair) -> f64 {
    if a >= b {
        return 0.0;
    }
    if b <= 0.0 {
        return weight_integral(-b, -a, e);
    }
    if a < 0.0 {
        return weight_integral(0.0, -a, e) + weight_integral(0.0, b, e);
    }
    let pw = |x: f64, k: f64| x.powf(k + 1.0) / (k + 1.0);
    let mut s = 0.0;
    if a < 1.0 {
        let c = b.min(1.0);
        s += pw(c, e.lo) - pw(a, e.lo);
    }
    if b > 1.0 {
        let c = a.max(1.0);
        s += pw(b, e.hi) - pw(c, e.hi);
    }
    s
}

fn x1_conductance(p: &DegeneracyParams, xa: f64, xb: f64, cond: Conductance) -> f64 {
    let e = p.delta1().scaled(2.0);
    match cond {
        Conductance::Harmonic => {
            let i = inv_weight_integral(xa, xb, e);
            if i.is_finite() {
                1.0 / i
            } else {
                0.0
            }
        }
        Conductance::Midpoint => ppow((0.5 * (xa + xb)).abs(), e) / (xb - xa),
    }
}

/// Neumann form on a one-dimensional mesh.
pub fn assemble_line_form(
    p: &DegeneracyParams,
    region: &Region,
    mesh: &Mesh1d,
    with_zero_order: bool,
    cond: Conductance,
) -> Result<DiscreteForm> {
    let n = mesh.cells();
    if n < 3 {
        return invalid("a line form needs at least 3 cells");
    }
    let x = mesh.centers();
    let mass = mesh.widths();
    let mut edges = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let c = match cond {
            Conductance::Harmonic => x1_conductance(p, x[i], x[i + 1], cond),
            Conductance::Midpoint => ppow(mesh.faces[i + 1].abs(), p.delta1().scaled(2.0)) / (x[i + 1] - x[i]),
        };
        if c > 0.0 {
            edges.push(Edge { i, j: i + 1, c });
        }
    }
    let zero_order = with_zero_order.then(|| {
        let k = FRAC_PI_2 * FRAC_PI_2;
        x.iter().zip(&mass).map(|(xi, h)| k * p.w2(xi.abs()) * h).collect()
    });
    Ok(DiscreteForm {
        params: p.clone(),
        region: region.clone(),
        nodes: x.iter().map(|v| Point::new(vec![*v], vec![])).collect(),
        mass,
        edges,
        zero_order,
        layout: Layout::Line { faces: mesh.faces.clone() },
        dropped_cells: 0,
        boundary: (0..n).map(|i| i == 0 || i == n - 1).collect(),
    })
}

/// Reduced form on an interval or half-interval with `cells` uniform cells (odd, >= 3).
pub fn assemble_interval_form(
    p: &DegeneracyParams,
    region: &Region,
    cells: usize,
    with_zero_order: bool,
    cond: Conductance,
) -> Result<DiscreteForm> {
    if cells < 3 {
        return invalid(format!("N = {cells}: at least 3 cells are needed"));
    }
    if cells % 2 == 0 {
        return invalid(format!("N = {cells}: the cell count must be odd"));
    }
    let (a, b) = match region {
        Region::Interval { a, b } => (*a, *b),
        Region::HalfInterval { b } => (0.0, *b),
        _ => return invalid("interval form needs an interval or half-interval"),
    };
    if p.n != 1 {
        return invalid("interval forms need n = 1");
    }
    region.validate(&DegeneracyParams { m: 0, ..p.clone() })?;
    assemble_line_form(p, region, &Mesh1d::uniform(a, b, cells)?, with_zero_order, cond)
}

/// Extent of a region along the line (`n = 1, m = 0`).
pub fn line_extent(p: &DegeneracyParams, region: &Region) -> Result<(f64, f64)> {
    match region {
        Region::Ball { .. } | Region::HalfBall { .. } => ball_length_1d(p, region),
        _ => {
            let b = region.bounding_box(p)?;
            Ok((b.lo[0], b.hi[0]))
        }
    }
}

/// Neumann form of the full operator on a region, for `n = 1` and `m <= 1`.
pub fn assemble_region_form(
    p: &DegeneracyParams,
    region: &Region,
    res: Resolution,
    cond: Conductance,
) -> Result<DiscreteForm> {
    p.validate()?;
    region.validate(p)?;
    if p.n != 1 || p.m > 1 {
        return invalid("region forms are implemented for n = 1 and m <= 1");
    }
    if p.m == 0 {
        let (lo, hi) = line_extent(p, region)?;
        let mesh = match res {
            Resolution::Uniform { n1, .. } => Mesh1d::uniform(lo, hi, n1)?,
            Resolution::Graded { core, growth } => {
                if lo == 0.0 {
                    Mesh1d::graded_half(hi, core, growth)?
                } else if (lo + hi).abs() <= 1e-12 * hi.abs() {
                    Mesh1d::graded_symmetric(hi, core, growth)?
                } else {
                    return invalid("graded meshes need a region symmetric about 0 or starting at 0");
                }
            }
        };
        return assemble_line_form(p, region, &mesh, false, cond);
    }
    let Resolution::Uniform { n1, n2 } = res else {
        return invalid("graded meshes are only available for m = 0");
    };
    if n1 < 1 || n2 < 1 {
        return invalid("resolution must be positive");
    }
    let bx = region.bounding_box(p)?;
    let h = [(bx.hi[0] - bx.lo[0]) / n1 as f64, (bx.hi[1] - bx.lo[1]) / n2 as f64];
    let lo = [bx.lo[0], bx.lo[1]];
    let g = p.exponents().g();
    let center = |i: usize, j: usize| [lo[0] + (i as f64 + 0.5) * h[0], lo[1] + (j as f64 + 0.5) * h[1]];
    let inside: Vec<bool> = (0..n1 * n2)
        .map(|k| {
            let c = center(k % n1, k / n1);
            region.contains_raw(p, g, &Point::new(vec![c[0]], vec![c[1]]))
        })
        .collect();

    // keep the largest 4-connected component
    let mut comp = vec![usize::MAX; n1 * n2];
    let mut best = (0usize, usize::MAX);
    let mut ncomp = 0;
    for s in 0..n1 * n2 {
        if !inside[s] || comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut q = VecDeque::from([s]);
        comp[s] = ncomp;
        while let Some(k) = q.pop_front() {
            size += 1;
            let (i, j) = (k % n1, k / n1);
            let mut nb = Vec::with_capacity(4);
            if i > 0 {
                nb.push(k - 1);
            }
            if i + 1 < n1 {
                nb.push(k + 1);
            }
            if j > 0 {
                nb.push(k - n1);
            }
            if j + 1 < n2 {
                nb.push(k + n1);
            }
            for t in nb {
                if inside[t] && comp[t] == usize::MAX {
                    comp[t] = ncomp;
                    q.push_back(t);
                }
            }
        }
        if size > best.0 {
            best = (size, ncomp);
        }
        ncomp += 1;
    }
    let total_inside = inside.iter().filter(|b| **b).count();
    if best.0 < 3 {
        return invalid(format!("region rasterises to {} connected cells; at least 3 are needed", best.0));
    }
    let keep = |k: usize| inside[k] && comp[k] == best.1;

    // natural ordering with the shorter axis running fastest
    let x1_fast = n1 <= n2;
    let mut index = vec![usize::MAX; n1 * n2];
    let mut nodes = Vec::with_capacity(best.0);
    let (outer, inner) = if x1_fast { (n2, n1) } else { (n1, n2) };
    for a in 0..outer {
        for b in 0..inner {
            let (i, j) = if x1_fast { (b, a) } else { (a, b) };
            let k = i + n1 * j;
            if keep(k) {
                index[k] = nodes.len();
                let c = center(i, j);
                nodes.push(Point::new(vec![c[0]], vec![c[1]]));
            }
        }
    }
    let mut boundary = vec![false; nodes.len()];
    for j in 0..n2 {
        for i in 0..n1 {
            let k = i + n1 * j;
            if keep(k) {
                let full = i > 0 && keep(k - 1) && i + 1 < n1 && keep(k + 1) && j > 0 && keep(k - n1) && j + 1 < n2 && keep(k + n1);
                boundary[index[k]] = !full;
            }
        }
    }
    let e1 = p.delta1().scaled(2.0);
    let e2 = p.delta2().scaled(2.0);
    let mut edges = Vec::new();
    for j in 0..n2 {
        for i in 0..n1 {
            let k = i + n1 * j;
            if !keep(k) {
                continue;
            }
            let c = center(i, j);
            if i + 1 < n1 && keep(k + 1) {
                let xb = c[0] + h[0];
                let cond1 = match cond {
                    Conductance::Harmonic => {
                        let v = inv_weight_integral(c[0], xb, e1);
                        if v.is_finite() {
                            h[1] / v
                        } else {
                            0.0
                        }
                    }
                    Conductance::Midpoint => ppow((c[0] + 0.5 * h[0]).abs(), e1) * h[1] / h[0],
                };
                if cond1 > 0.0 {
                    edges.push(Edge { i: index[k], j: index[k + 1], c: cond1 });
                }
            }
            if j + 1 < n2 && keep(k + n1) {
                let cond2 = match cond {
                    Conductance::Harmonic => weight_integral(c[0] - 0.5 * h[0], c[0] + 0.5 * h[0], e2) / h[1],
                    Conductance::Midpoint => ppow(c[0].abs(), e2) * h[0] / h[1],
                };
                if cond2 > 0.0 {
                    edges.push(Edge { i: index[k], j: index[k + n1], c: cond2 });
                }
            }
        }
    }
    Ok(DiscreteForm {
        params: p.clone(),
        region: region.clone(),
        mass: vec![h[0] * h[1]; nodes.len()],
        nodes,
        edges,
        zero_order: None,
        layout: Layout::Plane { n1, n2, lo, h },
        dropped_cells: total_inside - best.0,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cell_assembly() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let r = Region::Interval { a: -1.0, b: 1.0 };
        for cond in [Conductance::Midpoint, Conductance::Harmonic] {
            let f = assemble_interval_form(&p, &r, 3, false, cond).unwrap();
            let k = f.stiffness_dense();
            assert!((k[0][1] + 1.5).abs() < 1e-14 && (k[1][2] + 1.5).abs() < 1e-14);
            assert!(f.row_sums().iter().all(|s| s.abs() < 1e-14));
        }
    }

    #[test]
    fn midpoint_weight_next_to_origin() {
        let p = DegeneracyParams::line(0.5, 0.5).unwrap();
        let r = Region::Interval { a: -1.0, b: 1.0 };
        let n = 9;
        let h = 2.0 / n as f64;
        let f = assemble_interval_form(&p, &r, n, false, Conductance::Midpoint).unwrap();
        let k = f.stiffness_dense();
        let mid = n / 2;
        assert!((-k[mid][mid - 1] - (h / 2.0) / h).abs() < 1e-14);
        assert!((-k[mid][mid + 1] - (h / 2.0) / h).abs() < 1e-14);
    }

    #[test]
    fn harmonic_decouples_at_one_half() {
        let p = DegeneracyParams::line(0.5, 0.5).unwrap();
        let f = assemble_interval_form(&p, &Region::Interval { a: -1.0, b: 1.0 }, 9, false, Conductance::Harmonic).unwrap();
        assert_eq!(f.edges.len(), 6);
    }

    #[test]
    fn rejects_bad_cell_counts() {
        let p = DegeneracyParams::line(0.0, 0.0).unwrap();
        let r = Region::Interval { a: -1.0, b: 1.0 };
        assert!(assemble_interval_form(&p, &r, 4, false, Conductance::Harmonic).is_err());
        assert!(assemble_interval_form(&p, &r, 1, false, Conductance::Harmonic).is_err());
        assert!(assemble_interval_form(&p, &Region::Cube { t: 1.0 }, 5, false, Conductance::Harmonic).is_err());
    }

    #[test]
    fn weight_integrals() {
        let e = Pair::new(0.5, 1.5);
        // int_0^2 = 1 / 1.5 + (2^2.5 - 1) / 2.5
        let v = weight_integral(0.0, 2.0, e);
        assert!((v - (1.0 / 1.5 + (2f64.powf(2.5) - 1.0) / 2.5)).abs() < 1e-13);
        assert!((weight_integral(-2.0, 0.0, e) - v).abs() < 1e-13);
        let w = inv_weight_integral(0.25, 4.0, Pair::new(0.5, 2.0));
        // int_.25^1 s^-.5 + int_1^4 s^-2
        assert!((w - (2.0 * (1.0 - 0.5) + (1.0 - 0.25))).abs() < 1e-13);
        assert!(inv_weight_integral(-0.1, 0.1, Pair::new(1.0, 1.0)).is_infinite());
        let close = inv_weight_integral(1e7, 1e7 + 1.0, Pair::new(0.0, 1.5));
        assert!((close - 1e7f64.powf(-1.5)).abs() < 1e-6 * 1e7f64.powf(-1.5));
    }

    #[test]
    fn linear_function_energy_on_flat_square() {
        let p = DegeneracyParams::new(1, 1, 0.0, 0.0, 0.0, 0.0).unwrap();
        let n = 41;
        let f = assemble_region_form(&p, &Region::Cube { t: 1.0 }, Resolution::Uniform { n1: n, n2: n }, Conductance::Harmonic).unwrap();
        let u = f.x1();
        // the midpoint stencil loses half a cell at each end
        let exact = 4.0 * (n as f64 - 1.0) / n as f64;
        assert!((f.energy(&u) - exact).abs() < 1e-12);
        assert!(f.energy(&vec![1.0; f.len()]).abs() < 1e-14);
    }

    #[test]
    fn half_ball_has_no_negative_nodes() {
        let p = DegeneracyParams::new(1, 1, 0.75, 0.75, 0.2, 0.2).unwrap();
        let r = Region::HalfBall { center: Point::origin(&p), r: 1.0, sign: crate::geometry::Sign::Plus };
        let f = assemble_region_form(&p, &r, Resolution::Uniform { n1: 31, n2: 31 }, Conductance::Harmonic).unwrap();
        assert!(f.nodes.iter().all(|x| x.x1[0] >= 0.0));
        assert!(f.len() > 100);
    }
}
