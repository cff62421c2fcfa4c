//! Uniform Cartesian grids, nodal fields and the discrete functional.
//!
//! Nodes are stored row-major with the last axis fastest. A face joins node
//! `i` to `i + e_a`; it is indexed by the lower node, so the face arrays have
//! one slot per node and the slots on the upper boundary of each axis are
//! unused (value 0).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::symmetric_offsets;
use crate::weights::WeightSpec;

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Half the shortest side.
    pub fn radius(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|x|` over the box.
    pub fn reach(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a - slack && *v <= b + slack)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    n: Vec<usize>,
    h: f64,
    strides: Vec<usize>,
}

impl Grid {
    /// Grid with origin `lo`, `n[a]` nodes along axis `a` and spacing `h`.
    pub fn new(lo: Vec<f64>, n: Vec<usize>, h: f64) -> Result<Self> {
        let d = n.len();
        if !(1..=3).contains(&d) || lo.len() != d {
            return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
        }
        if let Some(k) = n.iter().find(|k| **k < 3) {
            return Err(Error::InvalidGrid(format!("{k} nodes per axis, need at least 3")));
        }
        if !(h.is_finite() && h > 0.0) || lo.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let mut strides = vec![1usize; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * n[a + 1];
        }
        Ok(Grid { lo, n, h, strides })
    }

    /// `n^d` nodes spanning the cube `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("degenerate box [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        Grid::new(vec![lo; dim], vec![n; dim], h)
    }

    /// Grid covering `domain` with `n` nodes along the first axis; the box
    /// sides must be commensurate with the resulting spacing.
    pub fn on_domain(domain: &Domain, n: usize) -> Result<Self> {
        let side = domain.hi[0] - domain.lo[0];
        if !(side > 0.0) || n < 3 {
            return Err(Error::InvalidGrid("degenerate box or n < 3".into()));
        }
        let h = side / (n - 1) as f64;
        let mut counts = Vec::with_capacity(domain.dim());
        for a in 0..domain.dim() {
            let cells = (domain.hi[a] - domain.lo[a]) / h;
            let k = cells.round();
            if (cells - k).abs() > 1e-9 * cells.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "side {a} is not a multiple of the spacing {h}"
                )));
            }
            counts.push(k as usize + 1);
        }
        Grid::new(domain.lo.clone(), counts, h)
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn domain(&self) -> Domain {
        Domain {
            lo: self.lo.clone(),
            hi: self
                .lo
                .iter()
                .zip(&self.n)
                .map(|(l, k)| l + (k - 1) as f64 * self.h)
                .collect(),
        }
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Coordinate of `flat` along `axis`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.n[axis]
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.axis_index(flat, a)).collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.lo[a] + self.axis_index(flat, a) as f64 * self.h)
            .collect()
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        (0..self.dim()).any(|a| {
            let k = self.axis_index(flat, a);
            k == 0 || k + 1 == self.n[a]
        })
    }

    /// True when the face from `flat` to `flat + e_axis` exists.
    #[inline]
    pub fn has_face(&self, flat: usize, axis: usize) -> bool {
        self.axis_index(flat, axis) + 1 < self.n[axis]
    }

    /// Node nearest to `x` (clamped into the grid).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dim())
            .map(|a| {
                let t = ((x[a] - self.lo[a]) / self.h).round();
                t.clamp(0.0, (self.n[a] - 1) as f64) as usize
            })
            .collect();
        self.flat(&idx)
    }

    /// Nodes with `|x − center| ≤ radius`, ascending.
    pub fn ball_nodes(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let d = self.dim();
        let mut lo_idx = vec![0usize; d];
        let mut hi_idx = vec![0usize; d];
        for a in 0..d {
            let lo = ((center[a] - radius - self.lo[a]) / self.h).ceil() - 1.0;
            let hi = ((center[a] + radius - self.lo[a]) / self.h).floor() + 1.0;
            lo_idx[a] = lo.clamp(0.0, (self.n[a] - 1) as f64) as usize;
            hi_idx[a] = hi.clamp(0.0, (self.n[a] - 1) as f64) as usize;
        }
        let r2 = radius * radius * (1.0 + 1e-12);
        let mut out = Vec::new();
        let mut idx = lo_idx.clone();
        loop {
            let flat = self.flat(&idx);
            let dist2: f64 = (0..d)
                .map(|a| {
                    let x = self.lo[a] + idx[a] as f64 * self.h - center[a];
                    x * x
                })
                .sum();
            if dist2 <= r2 {
                out.push(flat);
            }
            let mut a = d;
            loop {
                if a == 0 {
                    out.sort_unstable();
                    return out;
                }
                a -= 1;
                if idx[a] < hi_idx[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo_idx[a];
            }
        }
    }

    /// True when every node within `radius` of `center` lies strictly inside
    /// the grid box.
    pub fn ball_inside(&self, center: &[f64], radius: f64) -> bool {
        let dom = self.domain();
        (0..self.dim()).all(|a| center[a] - radius > dom.lo[a] && center[a] + radius < dom.hi[a])
    }

    /// Grid with the same node count and the box scaled by `lambda` about the
    /// coordinate origin.
    pub fn scaled(&self, lambda: f64) -> Result<Grid> {
        Grid::new(
            self.lo.iter().map(|v| v * lambda).collect(),
            self.n.clone(),
            self.h * lambda,
        )
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n || self.h != other.h || self.lo != other.lo {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }
}

/// Nodal values on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("field values must be finite".into()));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    /// Multilinear interpolation at `x`; `OutOfBox` outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let d = g.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = (x[a] - g.lo[a]) / g.h;
            let top = (g.n[a] - 1) as f64;
            if !(t >= -1e-9 && t <= top + 1e-9) {
                return Err(Error::OutOfBox(x.to_vec()));
            }
            let t = t.clamp(0.0, top);
            let k = (t.floor() as usize).min(g.n[a] - 2);
            base[a] = k;
            frac[a] = t - k as f64;
        }
        let origin = g.flat(&base);
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = origin;
            for a in 0..d {
                if corner & (1 << a) != 0 {
                    weight *= frac[a];
                    flat += g.strides[a];
                } else {
                    weight *= 1.0 - frac[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        Ok(acc)
    }
}

/// Nonnegative Dirichlet data, stored on the boundary nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    grid: Grid,
    /// Full-length array; interior slots are 0.
    values: Vec<f64>,
    sup_norm: f64,
}

impl BoundaryData {
    pub fn from_fn<F>(grid: &Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut values = vec![0.0; grid.len()];
        for (i, v) in values.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                *v = f(&grid.point(i));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &Grid, level: f64) -> Result<Self> {
        Self::from_fn(grid, |_| level)
    }

    /// Takes the boundary values of `field`.
    pub fn from_field(field: &ScalarField) -> Result<Self> {
        let g = &field.grid;
        let values = (0..g.len())
            .map(|i| if g.is_boundary(i) { field.values[i] } else { 0.0 })
            .collect();
        Self::from_values(g, values)
    }

    fn from_values(grid: &Grid, mut values: Vec<f64>) -> Result<Self> {
        let mut sup: f64 = 0.0;
        for (i, v) in values.iter_mut().enumerate() {
            if !grid.is_boundary(i) {
                *v = 0.0;
                continue;
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Precondition(format!(
                    "boundary value {v} at node {i} must be finite and nonnegative"
                )));
            }
            sup = sup.max(*v);
        }
        Ok(BoundaryData {
            grid: grid.clone(),
            values,
            sup_norm: sup,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Value at a boundary node; 0 at interior nodes.
    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    /// Field equal to the data on the boundary and 0 inside.
    pub fn extend_by_zero(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.clone(),
        }
    }
}

/// Weight samples on grid faces.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceWeightField {
    pub grid: Grid,
    /// `faces[a][i]` is the weight on the face from node `i` to `i + e_a`.
    pub faces: Vec<Vec<f64>>,
    pub tau0: f64,
    pub cap: f64,
}

impl FaceWeightField {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_face_fn(grid, value, value, |_, _| value)
    }

    /// Builds the field from `f(axis, face_center)`, clamped to `[tau0, cap]`.
    pub fn from_face_fn<F>(grid: &Grid, tau0: f64, cap: f64, f: F) -> Self
    where
        F: Fn(usize, &[f64]) -> f64 + Sync,
    {
        let h = grid.h();
        let faces = (0..grid.dim())
            .map(|a| {
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| {
                        if !grid.has_face(i, a) {
                            return 0.0;
                        }
                        let mut x = grid.point(i);
                        x[a] += 0.5 * h;
                        f(a, &x).clamp(tau0, cap)
                    })
                    .collect()
            })
            .collect();
        FaceWeightField {
            grid: grid.clone(),
            faces,
            tau0,
            cap,
        }
    }

    #[inline]
    pub fn face(&self, axis: usize, lower: usize) -> f64 {
        self.faces[axis][lower]
    }

    /// Iterates `(axis, lower node, upper node, weight)` over all faces.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let g = &self.grid;
        (0..g.dim()).flat_map(move |a| {
            (0..g.len())
                .filter(move |&i| g.has_face(i, a))
                .map(move |i| (a, i, i + g.stride(a), self.faces[a][i]))
        })
    }

    /// Sum of the weights on the faces adjacent to `flat`, and the number of
    /// such faces.
    pub fn node_weight_sum(&self, flat: usize) -> (f64, usize) {
        let g = &self.grid;
        let mut sum = 0.0;
        let mut count = 0;
        for a in 0..g.dim() {
            if g.has_face(flat, a) {
                sum += self.faces[a][flat];
                count += 1;
            }
            if g.axis_index(flat, a) > 0 {
                sum += self.faces[a][flat - g.stride(a)];
                count += 1;
            }
        }
        (sum, count)
    }

    /// Mean of the adjacent face weights: the nodal carrier of ω.
    pub fn node_weight(&self, flat: usize) -> f64 {
        let (s, c) = self.node_weight_sum(flat);
        s / c as f64
    }
}

/// Samples `ω` at every face centre. Singular centres take the mean of the
/// `2^d` offsets `±h/8` per coordinate; all values are clamped to
/// `[τ₀, cap]`.
pub fn sample_face_weights(spec: &WeightSpec, grid: &Grid) -> Result<FaceWeightField> {
    if spec.dim != grid.dim() {
        return Err(Error::ShapeMismatch(format!(
            "weight of dimension {} on a {}-d grid",
            spec.dim,
            grid.dim()
        )));
    }
    let h = grid.h();
    let cap = spec.cap(h, grid.domain().reach());
    Ok(FaceWeightField::from_face_fn(grid, spec.tau0, cap, |_, x| {
        let v = spec.eval(x);
        if v.is_finite() {
            return v;
        }
        let (sum, count) = symmetric_offsets(x, h / 8.0)
            .map(|q| spec.eval(&q))
            .filter(|w| w.is_finite())
            .fold((0.0, 0usize), |(s, c), w| (s + w, c + 1));
        if count == 0 {
            cap
        } else {
            sum / count as f64
        }
    }))
}

/// Dirichlet and volume parts of the discrete functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub volume: f64,
    pub total: f64,
    pub epsilon: f64,
}

/// `Σ_faces w_f ((u₊ − u₋)/h)² h^d + ε h^d #{u > 0}`.
pub fn energy(u: &ScalarField, w: &FaceWeightField, epsilon: f64) -> Result<EnergyBreakdown> {
    u.grid.check_same(&w.grid)?;
    let g = &u.grid;
    let scale = g.h().powi(g.dim() as i32 - 2);
    let dirichlet = scale * dirichlet_sum(&u.values, w, |_| true);
    let volume = epsilon * g.cell_volume() * u.positive_count() as f64;
    Ok(EnergyBreakdown {
        dirichlet,
        volume,
        total: dirichlet + volume,
        epsilon,
    })
}

/// `Σ w_f (v₊ − v₋)²` over faces whose lower node passes `keep`.
///
/// Partial sums run over fixed chunks and are added in order, so the result
/// does not depend on the thread count.
pub(crate) fn dirichlet_sum<K>(v: &[f64], w: &FaceWeightField, keep: K) -> f64
where
    K: Fn(usize) -> bool + Sync,
{
    const CHUNK: usize = 4096;
    let g = &w.grid;
    let node = |i: usize| {
        let mut acc = 0.0;
        for a in 0..g.dim() {
            if g.has_face(i, a) {
                let j = i + g.stride(a);
                if keep(i) || keep(j) {
                    let diff = v[j] - v[i];
                    acc += w.faces[a][i] * diff * diff;
                }
            }
        }
        acc
    };
    let partial: Vec<f64> = (0..g.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(g.len())).map(node).sum())
        .collect();
    partial.iter().sum()
}

/// `Σ_f w_f (u_j − u_i)` over the faces at node `i`, divided by `h²`.
#[inline]
pub(crate) fn stencil_flux(u: &[f64], w: &FaceWeightField, i: usize) -> f64 {
    let g = &w.grid;
    let mut acc = 0.0;
    for a in 0..g.dim() {
        let s = g.stride(a);
        acc += w.faces[a][i] * (u[i + s] - u[i]);
        acc -= w.faces[a][i - s] * (u[i] - u[i - s]);
    }
    acc
}

/// Conservative stencil `Σ_a (w₊(u₊ − u) − w₋(u − u₋))/h²` at interior
/// nodes, 0 on the boundary.
pub fn discrete_flux_divergence(u: &ScalarField, w: &FaceWeightField) -> Result<ScalarField> {
    u.grid.check_same(&w.grid)?;
    let g = &u.grid;
    let inv_h2 = 1.0 / (g.h() * g.h());
    let values = (0..g.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            if g.is_boundary(i) {
                0.0
            } else {
                stencil_flux(&u.values, w, i) * inv_h2
            }
        })
        .collect();
    Ok(ScalarField {
        grid: g.clone(),
        values,
    })
}

/// `Σ_{B_R} f² ω h^d / (R² · Σ_faces ω |∇f|² h^d)` for `f` vanishing at every
/// node with `|x − c| ≥ R`.
pub fn poincare_ratio(f: &ScalarField, w: &FaceWeightField, center: &[f64], radius: f64) -> Result<f64> {
    f.grid.check_same(&w.grid)?;
    let g = &f.grid;
    if center.len() != g.dim() || !(radius > 0.0) {
        return Err(Error::Precondition("bad ball for the Poincaré ratio".into()));
    }
    let inside = |i: usize| {
        let p = g.point(i);
        p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() < radius * radius
    };
    if let Some(i) = (0..g.len()).find(|&i| f.values[i] != 0.0 && !inside(i)) {
        return Err(Error::Precondition(format!(
            "f does not vanish outside the open ball (node {i})"
        )));
    }
    let vol = g.cell_volume();
    let mass: f64 = (0..g.len())
        .filter(|&i| f.values[i] != 0.0)
        .map(|i| f.values[i] * f.values[i] * w.node_weight(i) * vol)
        .sum();
    let grad = g.h().powi(g.dim() as i32 - 2) * dirichlet_sum(&f.values, w, |_| true);
    if grad <= 0.0 {
        return Err(Error::UndefinedRatio("f has zero weighted gradient energy".into()));
    }
    Ok(mass / (radius * radius * grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::cube(2, -1.0, 1.0, 2).is_err());
        assert!(Grid::cube(4, -1.0, 1.0, 5).is_err());
        assert!(Grid::cube(2, 1.0, 1.0, 5).is_err());
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(7), vec![-0.5, 0.0]);
        assert_eq!(g.flat(&[1, 2]), 7);
        assert!(g.is_boundary(4) && !g.is_boundary(12));
    }

    #[test]
    fn on_domain_requires_commensurate_sides() {
        let d = Domain {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 0.5],
        };
        let g = Grid::on_domain(&d, 9).unwrap();
        assert_eq!(g.shape(), &[9, 5]);
        let bad = Domain {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 0.3],
        };
        assert!(Grid::on_domain(&bad, 9).is_err());
    }

    #[test]
    fn ball_nodes_include_ties() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let b = g.ball_nodes(&[0.0, 0.0], 0.5);
        assert_eq!(b.len(), 5);
        let brute: Vec<usize> = (0..g.len())
            .filter(|&i| g.point(i).iter().map(|x| x * x).sum::<f64>() <= 0.25)
            .collect();
        assert_eq!(b, brute);
    }

    #[test]
    fn interpolation_reproduces_multilinear() {
        let g = Grid::cube(2, 0.0, 1.0, 5).unwrap();
        let u = ScalarField::from_fn(&g, |x| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1]);
        let v = u.interpolate(&[0.3, 0.71]).unwrap();
        assert!((v - (1.0 + 0.6 - 0.71 + 3.0 * 0.3 * 0.71)).abs() < 1e-12);
        assert!(u.interpolate(&[1.2, 0.5]).is_err());
        assert_eq!(u.interpolate(&[1.0, 1.0]).unwrap(), u.values[24]);
    }

    #[test]
    fn face_weights_constant_and_singular() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        let c = sample_face_weights(&WeightSpec::constant(2, 1.0).unwrap(), &g).unwrap();
        assert!(c.iter().all(|(_, _, _, w)| w == 1.0));
        let spec = WeightSpec::power_subspace(2, -0.5, 1).unwrap();
        let w = sample_face_weights(&spec, &g).unwrap();
        // face along axis 1 sitting on x1 = 0
        let on_line = w.face(1, g.flat(&[2, 1]));
        assert!((on_line - w.cap).abs() < 1e-12);
        // face along axis 1 at x1 = 0.5
        let off = w.face(1, g.flat(&[3, 1]));
        assert!((off - 0.5f64.powf(-0.5)).abs() < 1e-12);
        assert!(w.iter().all(|(_, _, _, v)| v >= w.tau0 && v <= w.cap));
    }

    #[test]
    fn energy_examples() {
        let g = Grid::cube(2, 0.0, 1.0, 11).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let zero = ScalarField::zeros(&g);
        assert_eq!(energy(&zero, &w, 1.0).unwrap().total, 0.0);
        let one = ScalarField::from_fn(&g, |_| 1.0);
        let e = energy(&one, &w, 1.0).unwrap();
        assert_eq!(e.dirichlet, 0.0);
        assert!((e.volume - 121.0 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_quadratic_and_affine() {
        let g = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let affine = ScalarField::from_fn(&g, |x| 0.3 + 2.0 * x[0] - x[1]);
        let div = discrete_flux_divergence(&affine, &w).unwrap();
        assert!(div.values.iter().all(|v| v.abs() < 1e-10));
        let quad = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        let div = discrete_flux_divergence(&quad, &w).unwrap();
        for i in 0..g.len() {
            let expect = if g.is_boundary(i) { 0.0 } else { 2.0 };
            assert!((div.values[i] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn poincare_requires_compact_support_and_energy() {
        let g = Grid::cube(2, -1.0, 1.0, 17).unwrap();
        let w = FaceWeightField::constant(&g, 1.0);
        let zero = ScalarField::zeros(&g);
        assert!(matches!(
            poincare_ratio(&zero, &w, &[0.0, 0.0], 0.5),
            Err(Error::UndefinedRatio(_))
        ));
        let wide = ScalarField::from_fn(&g, |x| (1.0 - x[0].abs()).max(0.0));
        assert!(poincare_ratio(&wide, &w, &[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn boundary_data_rejects_negative_values() {
        let g = Grid::cube(2, -1.0, 1.0, 5).unwrap();
        assert!(BoundaryData::from_fn(&g, |x| x[0]).is_err());
        let f = BoundaryData::from_fn(&g, |x| x[0].abs()).unwrap();
        assert_eq!(f.sup_norm(), 1.0);
        assert_eq!(f.value(12), 0.0);
    }
}
