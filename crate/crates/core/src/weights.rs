//! Singular A₂ weight families.
//!
//! Every family is centred at the coordinate origin, so rescaling
//! `ω_λ(x) = λ^{|α|} ω(λx)` is taken about the origin. Singular sets are
//! unions of coordinate subspaces and coordinate hyperplanes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::quadrature::{self, ball_average_many};

/// A weight `ω` on `ℝ^d` together with its essential lower bound `τ₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub dim: usize,
    pub tau0: f64,
    #[serde(flatten)]
    pub kind: WeightKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `ω ≡ value`.
    Constant { value: f64 },
    /// `ω = |x'|^α`, `x'` the first `codim` coordinates.
    PowerSubspace { alpha: f64, codim: usize },
    /// `ω = Π |x_i|^{α_i}`.
    AnisotropicProduct { exponents: Vec<f64> },
    /// `ω = |x_1 ⋯ x_m|^{α₁} · |x_{m+1} ⋯ x_d|^{α₂}`.
    TwoCone { split: usize, alpha1: f64, alpha2: f64 },
    /// `ω = |x'|^α · θ(x/|x|)` with a tabulated angular profile.
    AngularModulated {
        alpha: f64,
        codim: usize,
        profile: AngularProfile,
    },
    /// `ω = θ(x)·ω₀(x) + g(x)` with `ω₀` homogeneous.
    Perturbed {
        base: Box<WeightKind>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        multiplier: Option<RadialMultiplier>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        additive: Option<RadialPower>,
    },
}

/// Positive table on the unit sphere.
///
/// In `d = 2` the values are equispaced in the polar angle over `[0, 2π)`. In
/// `d = 3` they form `rows` colatitude rings (poles included) of equispaced
/// longitudes, row-major. Interpolation is (bi)linear, periodic in longitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub values: Vec<f64>,
    #[serde(default)]
    pub rows: usize,
}

/// `θ(x) = at_origin + amplitude · (1 − exp(−(rate·|x|)^power))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMultiplier {
    pub at_origin: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub power: f64,
}

/// `g(x) = coefficient · |x|^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPower {
    pub coefficient: f64,
    pub exponent: f64,
}

/// One component of `Λ_∞(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SingularComponent {
    /// `{x : x_i = 0 for every i in axes}`.
    Subspace { axes: Vec<usize> },
    /// `{x : x_axis = 0}`.
    Hyperplane { axis: usize },
}

impl SingularComponent {
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SingularComponent::Subspace { axes } => axes.iter().map(|&a| x[a] * x[a]).sum::<f64>().sqrt(),
            SingularComponent::Hyperplane { axis } => x[*axis].abs(),
        }
    }
}

impl AngularProfile {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSpec(
                "angular profile must be a nonempty table of positive values".into(),
            ));
        }
        match dim {
            2 => Ok(()),
            3 if self.rows >= 2 && self.values.len() % self.rows == 0 => Ok(()),
            3 => Err(Error::InvalidSpec(
                "3-d angular profile needs rows >= 2 dividing the table length".into(),
            )),
            _ => Err(Error::InvalidSpec(
                "angular profiles are defined for d = 2 and d = 3".into(),
            )),
        }
    }

    /// Bounds `(min θ, max θ)` of the table; `c₀ = min(min θ, 1/max θ)`.
    pub fn bounds(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return self.values[0];
        }
        let tau = std::f64::consts::TAU;
        let periodic = |vals: &[f64], phi: f64| {
            let n = vals.len();
            let t = phi.rem_euclid(tau) / tau * n as f64;
            let k = (t.floor() as usize).min(n - 1);
            let frac = t - k as f64;
            vals[k] * (1.0 - frac) + vals[(k + 1) % n] * frac
        };
        if x.len() == 2 {
            return periodic(&self.values, x[1].atan2(x[0]));
        }
        let cols = self.values.len() / self.rows;
        let colat = (x[2] / r).clamp(-1.0, 1.0).acos();
        let t = colat / std::f64::consts::PI * (self.rows - 1) as f64;
        let k = (t.floor() as usize).min(self.rows - 2);
        let frac = t - k as f64;
        let phi = x[1].atan2(x[0]);
        let lo = periodic(&self.values[k * cols..(k + 1) * cols], phi);
        let hi = periodic(&self.values[(k + 1) * cols..(k + 2) * cols], phi);
        lo * (1.0 - frac) + hi * frac
    }
}

impl RadialMultiplier {
    fn eval(&self, r: f64) -> f64 {
        self.at_origin + self.amplitude * (1.0 - (-(self.rate * r).powf(self.power)).exp())
    }

    fn bounds(&self) -> (f64, f64) {
        let far = self.at_origin + self.amplitude;
        (self.at_origin.min(far), self.at_origin.max(far))
    }

    fn is_constant(&self) -> bool {
        self.amplitude == 0.0 || self.rate == 0.0
    }
}

fn norm_of(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl WeightKind {
    /// Degree of singularity at the origin.
    pub fn alpha(&self) -> f64 {
        match self {
            WeightKind::Constant { .. } => 0.0,
            WeightKind::PowerSubspace { alpha, .. } | WeightKind::AngularModulated { alpha, .. } => *alpha,
            WeightKind::AnisotropicProduct { exponents } => exponents.iter().sum(),
            WeightKind::TwoCone { split, alpha1, alpha2 } => {
                // dimension is implied by the caller; see WeightSpec::alpha
                let _ = split;
                alpha1 + alpha2
            }
            WeightKind::Perturbed { base, .. } => base.alpha(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            WeightKind::Constant { value } => *value,
            WeightKind::PowerSubspace { alpha, codim } => {
                if *alpha == 0.0 {
                    return 1.0;
                }
                norm_of(&x[..*codim]).powf(*alpha)
            }
            WeightKind::AnisotropicProduct { exponents } => exponents
                .iter()
                .zip(x)
                .map(|(a, xi)| if *a == 0.0 { 1.0 } else { xi.abs().powf(*a) })
                .product(),
            WeightKind::TwoCone { split, alpha1, alpha2 } => {
                let p1: f64 = x[..*split].iter().product::<f64>().abs();
                let p2: f64 = x[*split..].iter().product::<f64>().abs();
                let f1 = if *alpha1 == 0.0 { 1.0 } else { p1.powf(*alpha1) };
                let f2 = if *alpha2 == 0.0 { 1.0 } else { p2.powf(*alpha2) };
                f1 * f2
            }
            WeightKind::AngularModulated { alpha, codim, profile } => {
                let radial = if *alpha == 0.0 {
                    1.0
                } else {
                    norm_of(&x[..*codim]).powf(*alpha)
                };
                radial * profile.eval(x)
            }
            WeightKind::Perturbed {
                base,
                multiplier,
                additive,
            } => {
                let r = norm_of(x);
                let theta = multiplier.as_ref().map_or(1.0, |m| m.eval(r));
                let g = additive.as_ref().map_or(0.0, |g| g.coefficient * r.powf(g.exponent));
                theta * base.eval(x) + g
            }
        }
    }

    fn is_homogeneous(&self) -> bool {
        match self {
            WeightKind::Perturbed {
                multiplier, additive, ..
            } => {
                multiplier.as_ref().map_or(true, RadialMultiplier::is_constant)
                    && additive.as_ref().map_or(true, |g| g.coefficient == 0.0)
            }
            _ => true,
        }
    }
}

impl WeightSpec {
    /// Builds and validates a spec.
    pub fn new(dim: usize, tau0: f64, kind: WeightKind) -> Result<Self> {
        let spec = WeightSpec { dim, tau0, kind };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(dim, value, WeightKind::Constant { value })
    }

    /// `|x'|^α` with `τ₀` the infimum over the cube `[-1, 1]^d`.
    pub fn power_subspace(dim: usize, alpha: f64, codim: usize) -> Result<Self> {
        let tau0 = (codim as f64).sqrt().powf(alpha);
        Self::new(dim, tau0, WeightKind::PowerSubspace { alpha, codim })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: WeightSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weight spec serializes")
    }

    /// Checks every admissibility range. Called by all constructors.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(1..=3).contains(&d) {
            return bad(format!("dimension {d} not in 1..=3"));
        }
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return bad(format!("tau0 = {} must be positive", self.tau0));
        }
        self.validate_kind(&self.kind, false)
    }

    fn validate_kind(&self, kind: &WeightKind, nested: bool) -> Result<()> {
        let d = self.dim;
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match kind {
            WeightKind::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!("constant weight {value} must be positive"));
                }
                if !nested && *value < self.tau0 {
                    return bad(format!("constant weight {value} below tau0 {}", self.tau0));
                }
            }
            WeightKind::PowerSubspace { alpha, codim } => {
                if *codim < 1 || *codim > d {
                    return bad(format!("codim {codim} not in 1..={d}"));
                }
                if !(*alpha > -(*codim as f64) && *alpha <= 0.0) {
                    return bad(format!("alpha {alpha} not in (-{codim}, 0]"));
                }
            }
            WeightKind::AnisotropicProduct { exponents } => {
                if exponents.len() != d {
                    return bad(format!("{} exponents for dimension {d}", exponents.len()));
                }
                if let Some(a) = exponents.iter().find(|a| !(**a > -1.0 && **a <= 0.0)) {
                    return bad(format!("axis exponent {a} not in (-1, 0]"));
                }
            }
            WeightKind::TwoCone { split, alpha1, alpha2 } => {
                if *split < 1 || *split >= d {
                    return bad(format!("cone split {split} not in 1..{d}"));
                }
                // each coordinate factor |x_i|^α must be locally integrable
                for a in [alpha1, alpha2] {
                    if !(*a > -1.0 && *a <= 0.0) {
                        return bad(format!("cone exponent {a} not in (-1, 0]"));
                    }
                }
            }
            WeightKind::AngularModulated { alpha, codim, profile } => {
                if *codim < 1 || *codim > d {
                    return bad(format!("codim {codim} not in 1..={d}"));
                }
                if !(*alpha > -(*codim as f64) && *alpha <= 0.0) {
                    return bad(format!("alpha {alpha} not in (-{codim}, 0]"));
                }
                profile.validate(d)?;
            }
            WeightKind::Perturbed {
                base,
                multiplier,
                additive,
            } => {
                if nested {
                    return bad("perturbations cannot be nested".into());
                }
                if matches!(**base, WeightKind::Perturbed { .. }) {
                    return bad("perturbed base must be homogeneous".into());
                }
                self.validate_kind(base, true)?;
                if let Some(m) = multiplier {
                    let (lo, _) = m.bounds();
                    if !(lo > 0.0 && m.rate >= 0.0 && m.power > 0.0)
                        || ![m.at_origin, m.amplitude, m.rate, m.power]
                            .iter()
                            .all(|v| v.is_finite())
                    {
                        return bad("multiplier must stay positive with rate >= 0, power > 0".into());
                    }
                }
                if let Some(g) = additive {
                    let alpha = base.alpha();
                    if !(g.coefficient >= 0.0 && g.coefficient.is_finite()) {
                        return bad("additive coefficient must be nonnegative".into());
                    }
                    if !(g.exponent > alpha && g.exponent > -(d as f64)) {
                        return bad(format!(
                            "additive exponent {} must exceed the base degree {alpha}",
                            g.exponent
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Degree of singularity `α` at the origin (homogeneity degree of the
    /// homogeneous part).
    pub fn alpha(&self) -> f64 {
        match &self.kind {
            WeightKind::TwoCone { split, alpha1, alpha2 } => {
                *split as f64 * alpha1 + (self.dim - split) as f64 * alpha2
            }
            WeightKind::Perturbed { base, .. } => WeightSpec {
                dim: self.dim,
                tau0: self.tau0,
                kind: (**base).clone(),
            }
            .alpha(),
            k => k.alpha(),
        }
    }

    /// `β = 1 − α/2`, the blow-up exponent.
    pub fn blowup_exponent(&self) -> f64 {
        1.0 - self.alpha() / 2.0
    }

    /// `1 + |α|/2`, the sharp growth exponent at a singular free boundary point.
    pub fn growth_exponent(&self) -> f64 {
        1.0 + self.alpha().abs() / 2.0
    }

    pub fn is_homogeneous(&self) -> bool {
        self.kind.is_homogeneous()
    }

    /// `ω(x)`; `f64::INFINITY` on `Λ_∞(ω)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let v = self.kind.eval(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// `ω⁻¹(x)`, with `1/∞ = 0`.
    pub fn eval_inverse(&self, x: &[f64]) -> f64 {
        let v = self.eval(x);
        if v.is_infinite() {
            0.0
        } else {
            1.0 / v
        }
    }

    /// Components of `Λ_∞(ω)`.
    pub fn singular_set(&self) -> Vec<SingularComponent> {
        fn of(kind: &WeightKind, dim: usize) -> Vec<SingularComponent> {
            match kind {
                WeightKind::Constant { .. } => vec![],
                WeightKind::PowerSubspace { alpha, codim } | WeightKind::AngularModulated { alpha, codim, .. } => {
                    if *alpha < 0.0 {
                        vec![SingularComponent::Subspace {
                            axes: (0..*codim).collect(),
                        }]
                    } else {
                        vec![]
                    }
                }
                WeightKind::AnisotropicProduct { exponents } => exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a < 0.0)
                    .map(|(axis, _)| SingularComponent::Hyperplane { axis })
                    .collect(),
                WeightKind::TwoCone { split, alpha1, alpha2 } => {
                    let mut out = vec![];
                    if *alpha1 < 0.0 {
                        out.extend((0..*split).map(|axis| SingularComponent::Hyperplane { axis }));
                    }
                    if *alpha2 < 0.0 {
                        out.extend((*split..dim).map(|axis| SingularComponent::Hyperplane { axis }));
                    }
                    out
                }
                WeightKind::Perturbed { base, additive, .. } => {
                    let mut out = of(base, dim);
                    let point = SingularComponent::Subspace {
                        axes: (0..dim).collect(),
                    };
                    if additive
                        .as_ref()
                        .is_some_and(|g| g.exponent < 0.0 && g.coefficient > 0.0)
                        && !out.contains(&point)
                    {
                        out.push(point);
                    }
                    out
                }
            }
        }
        of(&self.kind, self.dim)
    }

    /// Distance from `x` to `Λ_∞(ω)`; `None` when the weight has no singular set.
    pub fn distance_to_singular_set(&self, x: &[f64]) -> Option<f64> {
        self.singular_set()
            .iter()
            .map(|c| c.distance(x))
            .min_by(|a, b| a.total_cmp(b))
    }

    /// Upper clamp for sampled face weights on a grid of spacing `h`: the
    /// weight at distance `h/8` from `Λ_∞`. `reach` bounds `|x|` over the
    /// domain and only matters for additive terms that grow with `|x|`.
    pub fn cap(&self, h: f64, reach: f64) -> f64 {
        let s = h / 8.0;
        let d = self.dim;
        fn kind_cap(kind: &WeightKind, d: usize, s: f64) -> f64 {
            match kind {
                WeightKind::Constant { value } => *value,
                WeightKind::PowerSubspace { alpha, .. } => s.powf(*alpha),
                WeightKind::AnisotropicProduct { exponents } => exponents.iter().map(|a| s.powf(*a)).product(),
                WeightKind::TwoCone { split, alpha1, alpha2 } => {
                    s.powf(*split as f64 * alpha1 + (d - split) as f64 * alpha2)
                }
                WeightKind::AngularModulated { alpha, profile, .. } => s.powf(*alpha) * profile.bounds().1,
                WeightKind::Perturbed { base, .. } => kind_cap(base, d, s),
            }
        }
        match &self.kind {
            WeightKind::Perturbed {
                base,
                multiplier,
                additive,
            } => {
                let theta_max = multiplier.as_ref().map_or(1.0, |m| m.bounds().1);
                let g = additive.as_ref().map_or(0.0, |g| {
                    let r = if g.exponent < 0.0 { s } else { reach.max(s) };
                    g.coefficient * r.powf(g.exponent)
                });
                theta_max * kind_cap(base, d, s) + g
            }
            k => kind_cap(k, d, s),
        }
    }

    /// Homogeneous part `ω₀` of the weight (the spec itself when homogeneous).
    pub fn homogeneous_part(&self) -> WeightSpec {
        match &self.kind {
            WeightKind::Perturbed { base, multiplier, .. } => {
                let kind = match multiplier {
                    Some(m) if m.at_origin != 1.0 => WeightKind::Perturbed {
                        base: base.clone(),
                        multiplier: Some(RadialMultiplier {
                            at_origin: m.at_origin,
                            amplitude: 0.0,
                            rate: 0.0,
                            power: 1.0,
                        }),
                        additive: None,
                    },
                    _ => (**base).clone(),
                };
                WeightSpec {
                    dim: self.dim,
                    tau0: self.tau0,
                    kind,
                }
            }
            _ => self.clone(),
        }
    }
}

/// Minimum of the weight over midpoint samples of a box; a numerical check of
/// the declared `τ₀`.
pub fn sampled_minimum(spec: &WeightSpec, domain: &Domain, per_axis: usize) -> f64 {
    let d = spec.dim;
    let total = per_axis.pow(d as u32);
    (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let x: Vec<f64> = (0..d)
                .map(|a| {
                    let k = rem % per_axis;
                    rem /= per_axis;
                    domain.lo[a] + (k as f64 + 0.5) / per_axis as f64 * (domain.hi[a] - domain.lo[a])
                })
                .collect();
            spec.eval(&x)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Returns a spec evaluating to `λ^{|α|} ω(λx)`.
///
/// Homogeneous families are fixed points; for perturbed weights only the
/// perturbation terms change.
pub fn rescaled_weight(spec: &WeightSpec, lambda: f64) -> Result<WeightSpec> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} must be positive")));
    }
    let abs_alpha = spec.alpha().abs();
    let kind = match &spec.kind {
        WeightKind::Perturbed {
            base,
            multiplier,
            additive,
        } => WeightKind::Perturbed {
            base: base.clone(),
            multiplier: multiplier.as_ref().map(|m| RadialMultiplier {
                rate: m.rate * lambda,
                ..m.clone()
            }),
            additive: additive.as_ref().map(|g| RadialPower {
                coefficient: g.coefficient * lambda.powf(abs_alpha + g.exponent),
                exponent: g.exponent,
            }),
        },
        k => k.clone(),
    };
    Ok(WeightSpec {
        dim: spec.dim,
        tau0: spec.tau0,
        kind,
    })
}

/// A ball `B_r(c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Policy generating the balls over which the A₂ product is sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    /// Lattice points per axis for ball centres (endpoints included).
    pub centers_per_axis: usize,
    pub radii: Vec<f64>,
    /// Quadrature midpoints per axis per ball.
    pub resolution: usize,
    /// Extra centres, e.g. points on the singular set.
    #[serde(default)]
    pub extra_centers: Vec<Vec<f64>>,
}

impl Default for BallFamily {
    fn default() -> Self {
        BallFamily {
            centers_per_axis: 9,
            radii: (1..=6).map(|k| 0.5f64.powi(k)).collect(),
            resolution: 32,
            extra_centers: vec![],
        }
    }
}

impl BallFamily {
    /// All balls of the family that fit inside `domain`.
    pub fn balls(&self, domain: &Domain) -> Vec<Ball> {
        let d = domain.dim();
        let c = self.centers_per_axis.max(1);
        let mut centers: Vec<Vec<f64>> = Vec::new();
        for flat in 0..c.pow(d as u32) {
            let mut rem = flat;
            let p: Vec<f64> = (0..d)
                .map(|a| {
                    let k = rem % c;
                    rem /= c;
                    if c == 1 {
                        0.5 * (domain.lo[a] + domain.hi[a])
                    } else {
                        domain.lo[a] + k as f64 / (c - 1) as f64 * (domain.hi[a] - domain.lo[a])
                    }
                })
                .collect();
            centers.push(p);
        }
        centers.extend(self.extra_centers.iter().cloned());
        let mut out = Vec::new();
        for r in &self.radii {
            for p in &centers {
                let inside = (0..d).all(|a| p[a] - r >= domain.lo[a] - 1e-12 && p[a] + r <= domain.hi[a] + 1e-12);
                if inside {
                    out.push(Ball {
                        center: p.clone(),
                        radius: *r,
                    });
                }
            }
        }
        out
    }
}

/// Sampled A₂ constant. `c1_estimate` is a lower estimate of the supremum of
/// `avg_B(ω)·avg_B(ω⁻¹)` over all balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    pub c1_estimate: f64,
    pub ball_family: Vec<Ball>,
    pub per_ball_products: Vec<f64>,
    pub quadrature_resolution: usize,
    /// Balls dropped because every quadrature node was singular.
    pub skipped_balls: usize,
}

pub fn a2_constant(spec: &WeightSpec, domain: &Domain, family: &BallFamily) -> Result<A2Report> {
    if family.resolution < 8 {
        return Err(Error::Precondition(format!(
            "quadrature resolution {} < 8",
            family.resolution
        )));
    }
    if domain.dim() != spec.dim {
        return Err(Error::ShapeMismatch("domain and weight dimensions differ".into()));
    }
    let balls = family.balls(domain);
    if balls.is_empty() {
        return Err(Error::Precondition("ball family is empty on this domain".into()));
    }
    let w = |x: &[f64]| spec.eval(x);
    let winv = |x: &[f64]| {
        let v = spec.eval(x);
        if v.is_finite() {
            1.0 / v
        } else {
            f64::INFINITY
        }
    };
    let products: Vec<Option<f64>> = balls
        .par_iter()
        .map(|b| {
            let fs: [&(dyn Fn(&[f64]) -> f64 + Sync); 2] = [&w, &winv];
            let avg = ball_average_many(&fs, &b.center, b.radius, family.resolution);
            (avg.nodes > 0).then(|| avg.values[0] * avg.values[1])
        })
        .collect();
    let skipped = products.iter().filter(|p| p.is_none()).count();
    if skipped > 0 {
        log::warn!("a2_constant: {skipped} balls had only singular quadrature nodes");
    }
    let (kept_balls, kept): (Vec<Ball>, Vec<f64>) = balls
        .into_iter()
        .zip(products)
        .filter_map(|(b, p)| p.map(|p| (b, p)))
        .unzip();
    let c1 = kept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(A2Report {
        c1_estimate: c1,
        ball_family: kept_balls,
        per_ball_products: kept,
        quadrature_resolution: family.resolution,
        skipped_balls: skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationLimit {
    pub limit_spec: WeightSpec,
    pub lambda_sequence: Vec<f64>,
    /// `∫_{B_1} |ω_λ − ω₀|` per λ.
    pub l1_residuals: Vec<f64>,
    /// False when the residuals fail to decrease along the sequence.
    pub converging: bool,
}

/// L¹ distance between `ω_λ` and `ω₀` over the unit ball.
pub fn rescaling_residual(spec: &WeightSpec, limit: &WeightSpec, lambda: f64, resolution: usize) -> Result<f64> {
    let scaled = rescaled_weight(spec, lambda)?;
    let f = |x: &[f64]| (scaled.eval(x) - limit.eval(x)).abs();
    let origin = vec![0.0; spec.dim];
    let avg = quadrature::ball_average(f, &origin, 1.0, resolution)
        .ok_or_else(|| Error::Internal("residual quadrature found no regular nodes".into()))?;
    Ok(avg * quadrature::unit_ball_volume(spec.dim))
}

pub fn homogenized_limit(spec: &WeightSpec, lambdas: &[f64], resolution: usize) -> Result<HomogenizationLimit> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::Precondition("lambdas must lie in (0, 1)".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition("lambdas must be strictly decreasing".into()));
    }
    let limit = spec.homogeneous_part();
    let residuals = lambdas
        .iter()
        .map(|&l| rescaling_residual(spec, &limit, l, resolution))
        .collect::<Result<Vec<_>>>()?;
    let floor = 1e-12 * residuals.iter().cloned().fold(1.0, f64::max);
    let converging = residuals.windows(2).all(|w| w[1] < w[0] || w[1] <= floor);
    Ok(HomogenizationLimit {
        limit_spec: limit,
        lambda_sequence: lambdas.to_vec(),
        l1_residuals: residuals,
        converging,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityBounds {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    /// `avg_{B_r} ω` per radius.
    pub averages: Vec<f64>,
    pub tau_star: f64,
    pub l_bound: f64,
}

/// Two-sided bounds `τ⋆ r^α ≤ avg_{B_r(c)} ω ≤ L r^α` over the sampled radii.
pub fn singularity_bounds(
    spec: &WeightSpec,
    center: &[f64],
    radii: &[f64],
    resolution: usize,
) -> Result<SingularityBounds> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::Precondition("radii must lie in (0, 1)".into()));
    }
    let alpha = spec.alpha();
    let averages = radii
        .iter()
        .map(|&r| {
            quadrature::ball_average(|x: &[f64]| spec.eval(x), center, r, resolution)
                .ok_or_else(|| Error::Internal("singularity quadrature found no regular nodes".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let normalized: Vec<f64> = averages.iter().zip(radii).map(|(a, r)| a / r.powf(alpha)).collect();
    Ok(SingularityBounds {
        center: center.to_vec(),
        radii: radii.to_vec(),
        averages,
        tau_star: normalized.iter().cloned().fold(f64::INFINITY, f64::min),
        l_bound: normalized.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}
