//! Free boundary extraction and the geometric measurements made on it.
//!
//! All radius-based fits use the dyadic radii `2^{-k}` inside the window
//! `[4h, R_Ω/4]`, where `R_Ω` is half the shortest side of the grid box.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::weights::WeightSpec;

/// Allowed shortfall of the local growth slope below `1 + |α|/2`.
pub const EXPONENT_SLACK: f64 = 0.15;
/// Fraction of the explicit nondegeneracy constant that must be attained.
pub const NONDEGENERACY_SLACK: f64 = 0.5;
/// Multiplicative allowance on the dyadic decay bound.
pub const DECAY_SLACK: f64 = 1.2;
/// Minimum number of usable radii for a fit.
pub const MIN_RADII: usize = 4;

/// Cells with both a zero and a strictly positive vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeBoundarySet {
    /// Lower-corner node of each cell.
    pub cells: Vec<usize>,
    /// Cell centres.
    pub points: Vec<Vec<f64>>,
}

impl FreeBoundarySet {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Distance from `x` to the nearest cell centre.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

pub fn extract_free_boundary(u: &ScalarField) -> FreeBoundarySet {
    let g = &u.grid;
    let d = g.dim();
    let cells: Vec<usize> = (0..g.len())
        .into_par_iter()
        .filter(|&i| (0..d).all(|a| g.has_face(i, a)))
        .filter(|&i| {
            let (mut zero, mut pos) = (false, false);
            for corner in 0..(1usize << d) {
                let j = i
                    + (0..d)
                        .filter(|a| corner & (1 << a) != 0)
                        .map(|a| g.stride(a))
                        .sum::<usize>();
                if u.values[j] > 0.0 {
                    pos = true;
                } else {
                    zero = true;
                }
            }
            zero && pos
        })
        .collect();
    let half = 0.5 * g.h();
    let points = cells
        .iter()
        .map(|&i| g.point(i).iter().map(|x| x + half).collect())
        .collect();
    FreeBoundarySet { cells, points }
}

/// A zero node with a strictly positive axis neighbour.
pub fn is_free_boundary_node(u: &ScalarField, i: usize) -> bool {
    let g = &u.grid;
    if u.values[i] > 0.0 {
        return false;
    }
    (0..g.dim()).any(|a| {
        let s = g.stride(a);
        (g.has_face(i, a) && u.values[i + s] > 0.0) || (g.axis_index(i, a) > 0 && u.values[i - s] > 0.0)
    })
}

/// Free boundary node minimizing `dist`; ties go to the first node in
/// row-major order.
pub fn nearest_free_boundary_node<D>(u: &ScalarField, dist: D) -> Option<usize>
where
    D: Fn(&[f64]) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for i in 0..u.grid.len() {
        if is_free_boundary_node(u, i) {
            let d = dist(&u.grid.point(i));
            if best.map_or(true, |(_, b)| d < b) {
                best = Some((i, d));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// The free boundary node nearest to `Λ_∞(ω)`; for weights without a
/// singular set the hyperplane `x₁ = 0` is used instead.
pub fn canonical_point(u: &ScalarField, spec: &WeightSpec) -> Result<usize> {
    let set = spec.singular_set();
    let found = if set.is_empty() {
        nearest_free_boundary_node(u, |x| x[0].abs())
    } else {
        nearest_free_boundary_node(u, |x| set.iter().map(|c| c.distance(x)).fold(f64::INFINITY, f64::min))
    };
    found.ok_or_else(|| Error::Precondition("field has no free boundary node".into()))
}

/// Dyadic radii `2^{-k}` in `[4h, R_Ω/4]`, decreasing.
pub fn usable_radii(grid: &Grid) -> Vec<f64> {
    let lo = 4.0 * grid.h();
    let hi = 0.25 * grid.domain().radius();
    (0..60)
        .map(|k| 0.5f64.powi(k))
        .filter(|r| *r >= lo * (1.0 - 1e-12) && *r <= hi * (1.0 + 1e-12))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub center: Vec<f64>,
    pub center_node: usize,
    pub radii: Vec<f64>,
    /// `S(r) = max_{B_r(z₀)} u`.
    pub s_values: Vec<f64>,
    /// `4h` and `R_Ω/4` of the source grid.
    pub window: (f64, f64),
}

impl GrowthReport {
    /// Radii and `S` values inside the usable window.
    pub fn usable(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.window;
        self.radii
            .iter()
            .zip(&self.s_values)
            .filter(|(r, _)| **r >= lo * (1.0 - 1e-12) && **r <= hi * (1.0 + 1e-12))
            .map(|(r, s)| (*r, *s))
            .unzip()
    }
}

pub fn growth_function(u: &ScalarField, z0: usize, radii: &[f64]) -> Result<GrowthReport> {
    if z0 >= u.grid.len() || !is_free_boundary_node(u, z0) {
        return Err(Error::Precondition(format!("node {z0} is not a free boundary node")));
    }
    let g = &u.grid;
    let center = g.point(z0);
    let s_values = radii
        .par_iter()
        .map(|&r| {
            g.ball_nodes(&center, r)
                .into_iter()
                .map(|i| u.values[i])
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(GrowthReport {
        center,
        center_node: z0,
        radii: radii.to_vec(),
        s_values,
        window: (4.0 * g.h(), 0.25 * g.domain().radius()),
    })
}

/// Least-squares line `y = slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    /// `exp(intercept)` of the log-log fit.
    pub constant: f64,
    /// Radii used, increasing.
    pub radii: Vec<f64>,
    /// Slopes between consecutive used radii, smallest radii first.
    pub local_slopes: Vec<f64>,
}

pub fn fit_growth_exponent(report: &GrowthReport) -> Result<GrowthFit> {
    let (mut radii, mut s) = report.usable();
    let mut pairs: Vec<(f64, f64)> = radii.drain(..).zip(s.drain(..)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.len() < MIN_RADII {
        return Err(Error::TooFewRadii {
            found: pairs.len(),
            required: MIN_RADII,
        });
    }
    if pairs.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Precondition("S(r) vanishes at a usable radius".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let local_slopes = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    Ok(GrowthFit {
        exponent: slope,
        constant: intercept.exp(),
        radii: pairs.iter().map(|(r, _)| *r).collect(),
        local_slopes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityCheck {
    /// `1 + |α|/2`.
    pub target_exponent: f64,
    /// `max_r S(r)/r^{1+|α|/2}` over the usable radii.
    pub inferred_c: f64,
    pub first_local_slope: f64,
    pub pass: bool,
}

pub fn check_optimal_regularity(report: &GrowthReport, alpha: f64) -> Result<RegularityCheck> {
    let fit = fit_growth_exponent(report)?;
    let p = 1.0 + alpha.abs() / 2.0;
    let inferred_c = fit
        .radii
        .iter()
        .zip(report_values(report, &fit.radii))
        .map(|(r, s)| s / r.powf(p))
        .fold(0.0, f64::max);
    let first = fit.local_slopes[0];
    Ok(RegularityCheck {
        target_exponent: p,
        inferred_c,
        first_local_slope: first,
        pass: inferred_c.is_finite() && first >= p - EXPONENT_SLACK,
    })
}

fn report_values(report: &GrowthReport, radii: &[f64]) -> Vec<f64> {
    radii
        .iter()
        .map(|r| {
            let k = report.radii.iter().position(|x| x == r).expect("radius from report");
            report.s_values[k]
        })
        .collect()
}

/// `2·sqrt((1/L)·d^d/(d+2)^{d+2})`.
pub fn nondegeneracy_constant(d: usize, l_bound: f64) -> f64 {
    let d = d as f64;
    2.0 * (d.powf(d) / (d + 2.0).powf(d + 2.0) / l_bound).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyCheck {
    pub min_ratio: f64,
    pub ratios: Vec<f64>,
    pub predicted_constant: f64,
    pub pass: bool,
}

pub fn check_nondegeneracy(report: &GrowthReport, alpha: f64, l_bound: f64, d: usize) -> Result<NondegeneracyCheck> {
    let (radii, s) = report.usable();
    if radii.is_empty() {
        return Err(Error::TooFewRadii { found: 0, required: 1 });
    }
    let p = 1.0 + alpha.abs() / 2.0;
    let ratios: Vec<f64> = radii.iter().zip(&s).map(|(r, v)| v / r.powf(p)).collect();
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let c = nondegeneracy_constant(d, l_bound);
    Ok(NondegeneracyCheck {
        min_ratio,
        ratios,
        predicted_constant: c,
        pass: min_ratio >= NONDEGENERACY_SLACK * c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayLevel {
    pub k: usize,
    /// `sup_{B_{2^{-k}}} ũ`.
    pub sup: f64,
    /// `2^{k(α/2 − 1)}`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rho: f64,
    /// Normalization applied so that `sup_{B_1} ũ ≤ 1`.
    pub normalization: f64,
    pub levels: Vec<DecayLevel>,
    /// First level dropped because `ρ 2^{-k} < 4h`.
    pub truncated_at: Option<usize>,
    pub pass: bool,
}

/// Checks `sup_{B_{2^{-k}}} ũ ≤ 1.2 · 2^{k(α/2 − 1)}` for `k = 1..=k_max`,
/// where `ũ(x) = u(z₀ + ρx)/max(1, sup_{B_ρ(z₀)} u)`.
pub fn dyadic_decay_check(u: &ScalarField, z0: usize, rho: f64, alpha: f64, k_max: usize) -> Result<DecayTable> {
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("rho = {rho} must be positive")));
    }
    let g = &u.grid;
    let center = g.point(z0);
    let sup_ball = |r: f64| {
        g.ball_nodes(&center, r)
            .into_iter()
            .map(|i| u.values[i])
            .fold(0.0, f64::max)
    };
    let normalization = sup_ball(rho).max(1.0);
    let mut levels = Vec::new();
    let mut truncated_at = None;
    for k in 1..=k_max {
        let r = rho * 0.5f64.powi(k as i32);
        if r < 4.0 * g.h() * (1.0 - 1e-12) {
            log::info!("dyadic decay truncated at level {k}: radius {r} below 4h");
            truncated_at = Some(k);
            break;
        }
        let sup = sup_ball(r) / normalization;
        let bound = 2f64.powf(k as f64 * (alpha / 2.0 - 1.0));
        levels.push(DecayLevel {
            k,
            sup,
            bound,
            pass: sup <= DECAY_SLACK * bound,
        });
    }
    let pass = levels.iter().all(|l| l.pass);
    Ok(DecayTable {
        rho,
        normalization,
        levels,
        truncated_at,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub radii: Vec<f64>,
    pub fractions: Vec<f64>,
    pub min_fraction: f64,
}

/// `#{u > 0} / #nodes` over each discrete ball `B_r(z₀)`.
pub fn positive_density(u: &ScalarField, z0: usize, radii: &[f64]) -> Result<DensityReport> {
    if !is_free_boundary_node(u, z0) {
        return Err(Error::Precondition(format!("node {z0} is not a free boundary node")));
    }
    let g = &u.grid;
    let center = g.point(z0);
    let fractions: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let nodes = g.ball_nodes(&center, r);
            let pos = nodes.iter().filter(|&&i| u.values[i] > 0.0).count();
            pos as f64 / nodes.len() as f64
        })
        .collect();
    let min_fraction = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DensityReport {
        radii: radii.to_vec(),
        fractions,
        min_fraction,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparability {
    pub c_lower: f64,
    pub c_upper: f64,
    pub samples: usize,
}

impl Comparability {
    pub fn eccentricity(&self) -> f64 {
        self.c_upper / self.c_lower
    }
}

/// Positive nodes of `B_r(z₀)` at distance at least `2h` from the free
/// boundary cells.
pub fn comparability_samples(u: &ScalarField, fb: &FreeBoundarySet, z0: usize, radius: f64) -> Vec<usize> {
    let g = &u.grid;
    let min_dist = 2.0 * g.h();
    g.ball_nodes(&g.point(z0), radius)
        .into_par_iter()
        .filter(|&i| u.values[i] > 0.0 && fb.distance(&g.point(i)) >= min_dist)
        .collect()
}

/// Bounds of `u / dist(x, ∂{u>0})^{1+|α|/2}` over the samples.
pub fn distance_comparability(
    u: &ScalarField,
    alpha: f64,
    fb: &FreeBoundarySet,
    samples: &[usize],
) -> Result<Comparability> {
    if fb.is_empty() {
        return Err(Error::Precondition("free boundary is empty".into()));
    }
    if samples.is_empty() {
        return Err(Error::Precondition("no sample nodes".into()));
    }
    let p = 1.0 + alpha.abs() / 2.0;
    let g = &u.grid;
    let ratios: Vec<f64> = samples
        .par_iter()
        .map(|&i| u.values[i] / fb.distance(&g.point(i)).powf(p))
        .collect();
    Ok(Comparability {
        c_lower: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        c_upper: ratios.iter().cloned().fold(0.0, f64::max),
        samples: samples.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// Decreasing dyadic radii.
    pub radii: Vec<f64>,
    /// Largest oscillation over the cube of half-side `ρ` at any centre.
    pub oscillations: Vec<f64>,
    /// `None` when `u` is constant on the subdomain.
    pub exponent: Option<f64>,
    pub seminorm: f64,
    pub pairs_sampled: usize,
    pub constant: bool,
}

/// Nodes of the cube `|y − x_i|_∞ ≤ r`, clipped to the grid.
fn cube_nodes(g: &Grid, i: usize, r: f64) -> Vec<usize> {
    let m = (r / g.h() + 1e-9).floor() as usize;
    let d = g.dim();
    let idx = g.multi_index(i);
    let lo: Vec<usize> = idx.iter().map(|k| k.saturating_sub(m)).collect();
    let hi: Vec<usize> = (0..d).map(|a| (idx[a] + m).min(g.shape()[a] - 1)).collect();
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        out.push(g.flat(&cur));
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if cur[a] < hi[a] {
                cur[a] += 1;
                break;
            }
            cur[a] = lo[a];
        }
    }
}

/// Empirical Hölder modulus of `u` on `B_R(c)`. Every node of the ball is
/// a centre; oscillations are taken over lattice cubes of half-side `ρ`
/// (exact for affine fields) for dyadic `ρ` in `[4h, R/2]`.
pub fn holder_modulus(u: &ScalarField, center: &[f64], radius: f64) -> Result<HolderReport> {
    let g = &u.grid;
    if !g.ball_inside(center, radius) {
        return Err(Error::Precondition("subdomain must lie inside the grid".into()));
    }
    let nodes = g.ball_nodes(center, radius);
    let radii: Vec<f64> = (0..60)
        .map(|k| 0.5f64.powi(k))
        .filter(|r| *r >= 4.0 * g.h() * (1.0 - 1e-12) && *r <= 0.5 * radius * (1.0 + 1e-12))
        .collect();
    if radii.len() < 2 {
        return Err(Error::TooFewRadii {
            found: radii.len(),
            required: 2,
        });
    }
    let oscillations: Vec<f64> = radii
        .iter()
        .map(|&r| {
            nodes
                .par_iter()
                .map(|&i| {
                    let (lo, hi) = cube_nodes(g, i, r)
                        .into_iter()
                        .map(|j| u.values[j])
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                    hi - lo
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let constant = oscillations.iter().all(|o| *o == 0.0);
    if constant {
        return Ok(HolderReport {
            radii,
            oscillations,
            exponent: None,
            seminorm: 0.0,
            pairs_sampled: 0,
            constant: true,
        });
    }
    let usable: Vec<(f64, f64)> = radii
        .iter()
        .zip(&oscillations)
        .filter(|(_, o)| **o > 0.0)
        .map(|(r, o)| (r.ln(), o.ln()))
        .collect();
    let tau = if usable.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        least_squares(&xs, &ys).0.max(0.0)
    } else {
        0.0
    };
    // pairs over a subsample of at most ~4000 nodes
    let step = (nodes.len() / 4000).max(1);
    let sub: Vec<usize> = nodes.iter().step_by(step).copied().collect();
    let points: Vec<Vec<f64>> = sub.iter().map(|&i| g.point(i)).collect();
    let seminorm = (0..sub.len())
        .into_par_iter()
        .map(|a| {
            let mut best: f64 = 0.0;
            for b in (a + 1)..sub.len() {
                let dist = points[a]
                    .iter()
                    .zip(&points[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let diff = (u.values[sub[a]] - u.values[sub[b]]).abs();
                best = best.max(diff / dist.powf(tau));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(HolderReport {
        radii,
        oscillations,
        exponent: Some(tau),
        seminorm,
        pairs_sampled: sub.len() * (sub.len() - 1) / 2,
        constant: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_space(n: usize, p: f64) -> ScalarField {
        let g = Grid::cube(2, -1.0, 1.0, n).unwrap();
        ScalarField::from_fn(&g, move |x| x[0].max(0.0).powf(p))
    }

    #[test]
    fn free_boundary_of_half_space_is_one_layer() {
        let u = half_space(17, 1.0);
        let fb = extract_free_boundary(&u);
        assert_eq!(fb.len(), 16);
        assert!(fb.points.iter().all(|p| (p[0] - 0.0625).abs() < 1e-12));
        let one = ScalarField::from_fn(&u.grid, |_| 1.0);
        assert!(extract_free_boundary(&one).is_empty());
    }

    #[test]
    fn usable_window_at_257() {
        let g = Grid::cube(2, -1.0, 1.0, 257).unwrap();
        assert_eq!(usable_radii(&g), vec![0.25, 0.125, 0.0625, 0.03125]);
        let g = Grid::cube(2, -1.0, 1.0, 65).unwrap();
        assert_eq!(usable_radii(&g).len(), 2);
    }

    #[test]
    fn growth_of_powers() {
        for p in [1.0, 1.25, 2.0] {
            let u = half_space(257, p);
            let z0 = u.grid.nearest_node(&[0.0, 0.0]);
            let rep = growth_function(&u, z0, &usable_radii(&u.grid)).unwrap();
            for (r, s) in rep.radii.iter().zip(&rep.s_values) {
                assert!((s - r.powf(p)).abs() < 1e-12);
            }
            let fit = fit_growth_exponent(&rep).unwrap();
            assert!((fit.exponent - p).abs() < 1e-6);
        }
    }

    #[test]
    fn growth_requires_free_boundary_node() {
        let u = half_space(33, 1.0);
        let inside = u.grid.nearest_node(&[0.5, 0.0]);
        assert!(growth_function(&u, inside, &[0.25]).is_err());
    }

    #[test]
    fn regularity_check_examples() {
        let u = half_space(257, 1.25);
        let z0 = u.grid.nearest_node(&[0.0, 0.0]);
        let rep = growth_function(&u, z0, &usable_radii(&u.grid)).unwrap();
        let c = check_optimal_regularity(&rep, -0.5).unwrap();
        assert!(c.pass);
        assert!((c.inferred_c - 1.0).abs() < 1e-9);
        let u = half_space(257, 1.0);
        let rep = growth_function(&u, z0, &usable_radii(&u.grid)).unwrap();
        assert!(!check_optimal_regularity(&rep, -0.5).unwrap().pass);
    }

    #[test]
    fn too_few_radii() {
        let u = half_space(65, 1.0);
        let z0 = u.grid.nearest_node(&[0.0, 0.0]);
        let rep = growth_function(&u, z0, &usable_radii(&u.grid)).unwrap();
        assert!(matches!(fit_growth_exponent(&rep), Err(Error::TooFewRadii { .. })));
    }

    #[test]
    fn nondegeneracy_constants() {
        assert!((nondegeneracy_constant(2, 1.0) - 0.25).abs() < 1e-15);
        assert!((nondegeneracy_constant(3, 1.0) - 2.0 * (27.0f64 / 3125.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decay_of_exact_power_and_zero() {
        let alpha = -0.5;
        let u = half_space(257, 1.0 - alpha / 2.0);
        let z0 = u.grid.nearest_node(&[0.0, 0.0]);
        let t = dyadic_decay_check(&u, z0, 1.0, alpha, 4).unwrap();
        assert!(t.pass);
        assert_eq!(t.levels.len(), 4);
        for l in &t.levels {
            assert!((l.sup - l.bound).abs() < 1e-12);
        }
        let zero = ScalarField::zeros(&u.grid);
        assert!(dyadic_decay_check(&zero, z0, 0.5, alpha, 4).unwrap().pass);
        let t = dyadic_decay_check(&u, z0, 0.5, alpha, 10).unwrap();
        assert_eq!(t.truncated_at, Some(5));
    }

    #[test]
    fn density_of_half_space() {
        let u = half_space(129, 1.0);
        let z0 = u.grid.nearest_node(&[0.0, 0.0]);
        let d = positive_density(&u, z0, &[0.25, 0.125]).unwrap();
        for (r, f) in d.radii.iter().zip(&d.fractions) {
            let nodes = u.grid.ball_nodes(&[0.0, 0.0], *r);
            let pos = nodes.iter().filter(|&&i| u.grid.point(i)[0] > 0.0).count();
            assert_eq!(*f, pos as f64 / nodes.len() as f64);
            assert!((f - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn comparability_of_powers() {
        for (p, alpha) in [(1.0, 0.0), (1.25, -0.5)] {
            let u = half_space(129, p);
            let fb = extract_free_boundary(&u);
            let z0 = u.grid.nearest_node(&[0.0, 0.0]);
            let samples = comparability_samples(&u, &fb, z0, 0.25);
            let c = distance_comparability(&u, alpha, &fb, &samples).unwrap();
            // distance is measured to cell centres half a cell to the right
            assert!(c.eccentricity() < 1.6, "{c:?}");
            assert!(c.c_lower > 0.9);
        }
    }

    #[test]
    fn holder_of_affine_constant_and_root() {
        let g = Grid::cube(2, -1.0, 1.0, 129).unwrap();
        let affine = ScalarField::from_fn(&g, |x| 1.0 + x[0] - 2.0 * x[1]);
        let r = holder_modulus(&affine, &[0.0, 0.0], 0.5).unwrap();
        assert!((r.exponent.unwrap() - 1.0).abs() < 1e-9, "{r:?}");
        let c = ScalarField::from_fn(&g, |_| 3.0);
        let r = holder_modulus(&c, &[0.0, 0.0], 0.5).unwrap();
        assert!(r.constant && r.exponent.is_none() && r.seminorm == 0.0);
        let root = ScalarField::from_fn(&g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().sqrt());
        let r = holder_modulus(&root, &[0.0, 0.0], 0.5).unwrap();
        assert!((r.exponent.unwrap() - 0.5).abs() < 0.02, "{r:?}");
        assert!(r.oscillations.windows(2).all(|w| w[1] <= w[0]));
    }
}
