//! Blow-up rescalings `u_λ(x) = λ^{-β} u(λx)`, `β = 1 − α/2`.
//!
//! Under this scaling `ω_λ |∇u_λ|²(x) = ω(λx) |∇u|²(λx)`, so the Dirichlet
//! part transforms with the Jacobian `λ^{-d}` alone and the jump coefficient
//! of the rescaled problem is unchanged.

use serde::{Deserialize, Serialize};

use crate::analysis::nearest_free_boundary_node;
use crate::error::{Error, Result};
use crate::grid::{energy, sample_face_weights, BoundaryData, Grid, ScalarField};
use crate::scenario::BoundaryScenario;
use crate::solver::{minimize_cavitation, JumpProfile, SolveConfig};
use crate::weights::{rescaled_weight, WeightSpec};

/// `β = 1 − α/2`.
pub fn blowup_exponent(alpha: f64) -> f64 {
    1.0 - alpha / 2.0
}

/// Factor multiplying the jump coefficient when `u` is replaced by
/// `t·u(ρ·)` with `t = λ^{-β}`, `ρ = λ` and the weight by `λ^{|α|} ω(λ·)`:
/// `t² ρ² λ^{|α|}`. It equals 1 for every admissible α.
pub fn jump_coefficient_factor(alpha: f64, lambda: f64) -> f64 {
    let t = lambda.powf(-blowup_exponent(alpha));
    t * t * lambda * lambda * lambda.powf(alpha.abs())
}

/// Samples `λ^{-β} u(λx)` on `reference` by multilinear interpolation.
pub fn rescale_minimizer(u: &ScalarField, lambda: f64, alpha: f64, reference: &Grid) -> Result<ScalarField> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} not in (0, 1]")));
    }
    let factor = lambda.powf(-blowup_exponent(alpha));
    let mut values = Vec::with_capacity(reference.len());
    for i in 0..reference.len() {
        let x: Vec<f64> = reference.point(i).iter().map(|v| v * lambda).collect();
        values.push(factor * u.interpolate(&x)?);
    }
    ScalarField::new(reference.clone(), values)
}

/// Node range of `u.grid` covering `lambda` times its own box.
fn nested_subgrid(grid: &Grid, lambda: f64) -> Result<(Grid, Vec<usize>)> {
    let j = -lambda.log2();
    if !(lambda > 0.0 && lambda <= 1.0) || (j - j.round()).abs() > 1e-12 {
        return Err(Error::Precondition(format!("lambda = {lambda} is not a power of 1/2")));
    }
    let d = grid.dim();
    let dom = grid.domain();
    let h = grid.h();
    let mut first = Vec::with_capacity(d);
    let mut shape = Vec::with_capacity(d);
    for a in 0..d {
        let lo = (lambda * dom.lo[a] - dom.lo[a]) / h;
        let hi = (lambda * dom.hi[a] - dom.lo[a]) / h;
        if (lo - lo.round()).abs() > 1e-9 || (hi - hi.round()).abs() > 1e-9 || lo < -1e-9 {
            return Err(Error::Precondition(format!(
                "lambda = {lambda} box is not nested in the grid along axis {a}"
            )));
        }
        let (lo, hi) = (lo.round() as usize, hi.round() as usize);
        if hi >= grid.shape()[a] || hi < lo + 2 {
            return Err(Error::Precondition(format!(
                "lambda = {lambda} box is too small or outside"
            )));
        }
        first.push(lo);
        shape.push(hi - lo + 1);
    }
    let sub = Grid::new((0..d).map(|a| dom.lo[a] + first[a] as f64 * h).collect(), shape, h)?;
    let map = (0..sub.len())
        .map(|i| {
            let idx: Vec<usize> = sub.multi_index(i).iter().zip(&first).map(|(k, f)| k + f).collect();
            grid.flat(&idx)
        })
        .collect();
    Ok((sub, map))
}

/// Restriction of `u` to the nodes of `lambda · box`.
pub fn restrict_to_scaled_box(u: &ScalarField, lambda: f64) -> Result<ScalarField> {
    let (sub, map) = nested_subgrid(&u.grid, lambda)?;
    let values = map.iter().map(|&i| u.values[i]).collect();
    ScalarField::new(sub, values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

/// Compares the energy of `u` on `λΩ` (its own grid, weight `ω`) with
/// `λ^d` times the energy of `u_λ` on `Ω` (same grid, weight `ω_λ`).
pub fn scaling_energy_identity(
    u: &ScalarField,
    spec: &WeightSpec,
    lambda: f64,
    epsilon: f64,
) -> Result<EnergyIdentity> {
    let g = &u.grid;
    let inner = restrict_to_scaled_box(u, lambda)?;
    let w_inner = sample_face_weights(spec, &inner.grid)?;
    let lhs = energy(&inner, &w_inner, epsilon)?.total;
    let scaled_spec = rescaled_weight(spec, lambda)?;
    let u_lambda = rescale_minimizer(u, lambda, spec.alpha(), g)?;
    let w_scaled = sample_face_weights(&scaled_spec, g)?;
    let eps = epsilon * jump_coefficient_factor(spec.alpha(), lambda);
    let rhs = lambda.powi(g.dim() as i32) * energy(&u_lambda, &w_scaled, eps)?.total;
    Ok(EnergyIdentity {
        lhs,
        rhs,
        rel_error: (lhs - rhs).abs() / lhs.max(1e-30),
    })
}

#[derive(Clone, Debug)]
pub struct BlowupSequence {
    /// Cumulative scales, starting with 1 for the base solve.
    pub lambdas: Vec<f64>,
    pub beta: f64,
    pub rescaled_fields: Vec<ScalarField>,
    /// `‖u_{λ_{k+1}} − u_{λ_k}‖_∞` over `B_{1/2}`.
    pub successive_sup_distances: Vec<f64>,
    /// `(𝒥 of the base field on λΩ, λ^d 𝒥 of its rescaling on Ω)` per λ.
    pub energy_pairs: Vec<(f64, f64)>,
    /// Distance from the origin to the nearest free boundary node per scale.
    pub origin_offsets: Vec<f64>,
    /// Set when the sequence stopped early.
    pub truncated: Option<String>,
    pub all_converged: bool,
}

impl BlowupSequence {
    pub fn distances_decreasing(&self) -> bool {
        self.successive_sup_distances.windows(2).all(|w| w[1] < w[0])
    }
}

/// Solves on `grid` with data `f`, then re-solves at each scale in `lambdas`
/// (decreasing) on the same grid with weight `ω_λ` and the boundary values
/// of the rescaled base field `λ^{-β} u(λx)`.
///
/// Taking the data from the base field rather than from the previous
/// re-solve keeps discretization errors from compounding: every rescaling
/// doubles the distance of the free boundary from the origin.
pub fn blowup_convergence(
    spec: &WeightSpec,
    grid: &Grid,
    f: &BoundaryData,
    lambdas: &[f64],
    profile: &JumpProfile,
    cfg: &SolveConfig,
) -> Result<BlowupSequence> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) || lambdas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Precondition(
            "lambdas must decrease strictly inside (0, 1)".into(),
        ));
    }
    let alpha = spec.alpha();
    let beta = blowup_exponent(alpha);
    let origin = vec![0.0; grid.dim()];
    let offset = |u: &ScalarField| -> f64 {
        nearest_free_boundary_node(u, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .map(|i| u.grid.point(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .unwrap_or(f64::INFINITY)
    };
    let w = sample_face_weights(spec, grid)?;
    let base = minimize_cavitation(grid, &w, f, profile, cfg)?;
    let mut all_converged = base.converged;
    let base_offset = offset(&base.field);
    if base_offset > 2.0 * grid.h() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "origin is not a free boundary point of the base solve (nearest node at {base_offset})"
        )));
    }
    let mut out = BlowupSequence {
        lambdas: vec![1.0],
        beta,
        rescaled_fields: vec![base.field.clone()],
        successive_sup_distances: vec![],
        energy_pairs: vec![],
        origin_offsets: vec![base_offset],
        truncated: None,
        all_converged,
    };
    let half_ball = grid.ball_nodes(&origin, 0.5);
    for &lambda in lambdas {
        let prev = out.rescaled_fields.last().expect("base field");
        let data = rescale_minimizer(&base.field, lambda, alpha, grid)?;
        let f_k = BoundaryData::from_field(&data)?;
        let w_k = sample_face_weights(&rescaled_weight(spec, lambda)?, grid)?;
        let cfg_k = SolveConfig {
            epsilon: cfg.epsilon * jump_coefficient_factor(alpha, lambda),
            ..cfg.clone()
        };
        let solved = minimize_cavitation(grid, &w_k, &f_k, profile, &cfg_k)?;
        all_converged &= solved.converged;
        let off = offset(&solved.field);
        let distance = half_ball
            .iter()
            .map(|&i| (solved.field.values[i] - prev.values[i]).abs())
            .fold(0.0, f64::max);
        let identity = scaling_energy_identity(&base.field, spec, lambda, cfg.epsilon).ok();
        out.lambdas.push(lambda);
        out.origin_offsets.push(off);
        out.successive_sup_distances.push(distance);
        if let Some(e) = identity {
            out.energy_pairs.push((e.lhs, e.rhs));
        } else {
            out.energy_pairs.push((f64::NAN, f64::NAN));
        }
        out.rescaled_fields.push(solved.field);
        if off > 2.0 * grid.h() * (1.0 + 1e-12) {
            let msg = format!("free boundary left the origin at lambda = {lambda} (offset {off})");
            log::warn!("{msg}");
            out.truncated = Some(msg);
            break;
        }
    }
    out.all_converged = all_converged;
    Ok(out)
}

/// Amplitude of half-plane data for which the free boundary crosses the
/// `x₁` axis at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneCalibration {
    pub amplitude: f64,
    /// Sub-grid crossing point at `amplitude`.
    pub crossing: f64,
    pub solves: usize,
}

/// Sub-grid crossing of the free boundary with the `x₁` axis through the
/// origin: the first positive node, moved back by the linear extrapolation
/// of its value and the next one. `None` when the axis has no positive node
/// with a positive successor.
pub fn axis_crossing(u: &ScalarField) -> Option<f64> {
    let g = &u.grid;
    let origin = vec![0.0; g.dim()];
    let c = g.nearest_node(&origin);
    let s = g.stride(0);
    let k0 = g.axis_index(c, 0);
    let row = c - k0 * s;
    let n = g.shape()[0];
    let k = (0..n).find(|&k| u.values[row + k * s] > 0.0)?;
    let x = g.point(row + k * s)[0];
    let (u1, u2) = (
        u.values[row + k * s],
        *u.values.get(row + (k + 1) * s).filter(|_| k + 1 < n)?,
    );
    if u2 <= u1 {
        return Some(x);
    }
    Some(x - g.h() * (u1 / (u2 - u1)).min(1.0))
}

/// Bisects the amplitude of `f = a (x₁)⁺` inside `bracket` so that the
/// free boundary crosses the `x₁` axis at the origin. Larger amplitudes push
/// the crossing towards negative `x₁`. Returns the smallest amplitude tried
/// whose crossing is `≤ 0`, with that crossing.
pub fn calibrate_half_plane(
    spec: &WeightSpec,
    grid: &Grid,
    profile: &JumpProfile,
    cfg: &SolveConfig,
    bracket: (f64, f64),
    iterations: usize,
) -> Result<HalfPlaneCalibration> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("bad amplitude bracket {bracket:?}")));
    }
    let w = sample_face_weights(spec, grid)?;
    let mut solves = 0;
    let mut crossing_at = |a: f64| -> Result<f64> {
        let f = BoundaryScenario::HalfPlane { amplitude: a }.boundary_data(grid)?;
        let r = minimize_cavitation(grid, &w, &f, profile, cfg)?;
        solves += 1;
        Ok(axis_crossing(&r.field).unwrap_or(f64::INFINITY))
    };
    let mut crossing = crossing_at(hi)?;
    if crossing_at(lo)? <= 0.0 || crossing > 0.0 {
        return Err(Error::Precondition(format!(
            "bracket {bracket:?} does not straddle the origin"
        )));
    }
    for _ in 0..iterations {
        let m = 0.5 * (lo + hi);
        let c = crossing_at(m)?;
        if c <= 0.0 {
            hi = m;
            crossing = c;
        } else {
            lo = m;
        }
    }
    Ok(HalfPlaneCalibration {
        amplitude: hi,
        crossing,
        solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jump_coefficient_is_invariant() {
        for alpha in [0.0, -0.25, -0.5, -1.5] {
            for lambda in [0.5, 0.125, 1e-3] {
                assert!((jump_coefficient_factor(alpha, lambda) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescale_identity_and_fixed_point() {
        let g = Grid::cube(2, -1.0, 1.0, 65).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].max(0.0) * 0.3 + x[1] * x[1]);
        let same = rescale_minimizer(&u, 1.0, -0.5, &g).unwrap();
        for (a, b) in u.values.iter().zip(&same.values) {
            assert!((a - b).abs() < 1e-14);
        }
        // (x₁)⁺ is a fixed point for α = 0; the kink lies on grid lines
        let v = ScalarField::from_fn(&g, |x| x[0].max(0.0));
        let r = rescale_minimizer(&v, 0.5, 0.0, &g).unwrap();
        for (a, b) in v.values.iter().zip(&r.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rescale_rejects_outside_samples() {
        let g = Grid::cube(2, 0.0, 1.0, 17).unwrap();
        let big = Grid::cube(2, 0.0, 4.0, 17).unwrap();
        let u = ScalarField::zeros(&g);
        assert!(matches!(rescale_minimizer(&u, 0.5, 0.0, &big), Err(Error::OutOfBox(_))));
    }

    #[test]
    fn nested_lambda_required() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        let u = ScalarField::zeros(&g);
        let spec = WeightSpec::constant(2, 1.0).unwrap();
        assert!(scaling_energy_identity(&u, &spec, 0.3, 1.0).is_err());
        let e = scaling_energy_identity(&u, &spec, 0.5, 1.0).unwrap();
        assert_eq!((e.lhs, e.rhs), (0.0, 0.0));
    }

    #[test]
    fn restriction_picks_inner_nodes() {
        let g = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        let r = restrict_to_scaled_box(&u, 0.5).unwrap();
        assert_eq!(r.grid.shape(), &[5, 5]);
        assert_eq!(r.grid.lo(), &[-0.5, -0.5]);
        assert_eq!(r.values[0], -0.5 - 5.0);
    }
}
