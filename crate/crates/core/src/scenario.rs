//! Named boundary data and canonical experiment presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Domain, Grid};
use crate::solver::{JumpProfile, SolveConfig};
use crate::weights::{RadialPower, WeightKind, WeightSpec};

/// Dirichlet data on the boundary of the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BoundaryScenario {
    /// `f ≡ level`.
    Constant { level: f64 },
    /// `f = amplitude · (x₁)⁺`; the free boundary of the solution is close
    /// to the hyperplane `x₁ = 0` for a suitable amplitude.
    HalfPlane { amplitude: f64 },
    /// `f = (level + slope · x₁)⁺`.
    Tilted { level: f64, slope: f64 },
    /// `f = amplitude · (x₁² − x₂²)⁺`; symmetric under both reflections, so
    /// a free boundary through the centre stays there under rescaling.
    Saddle { amplitude: f64 },
}

impl BoundaryScenario {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryScenario::Constant { level } => *level,
            BoundaryScenario::HalfPlane { amplitude } => amplitude * x[0].max(0.0),
            BoundaryScenario::Tilted { level, slope } => (level + slope * x[0]).max(0.0),
            BoundaryScenario::Saddle { amplitude } => amplitude * (x[0] * x[0] - x[1] * x[1]).max(0.0),
        }
    }

    pub fn boundary_data(&self, grid: &Grid) -> Result<BoundaryData> {
        BoundaryData::from_fn(grid, |x| self.eval(x))
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryScenario::Constant { .. } => "constant",
            BoundaryScenario::HalfPlane { .. } => "half-plane",
            BoundaryScenario::Tilted { .. } => "tilted",
            BoundaryScenario::Saddle { .. } => "saddle",
        }
    }
}

/// Descriptions of the boundary scenarios, in listing order.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("constant", "f = level on the whole boundary"),
    ("half-plane", "f = amplitude * max(x1, 0)"),
    ("tilted", "f = max(level + slope * x1, 0)"),
    ("saddle", "f = amplitude * max(x1^2 - x2^2, 0)"),
];

/// A ready-to-run experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub weight: WeightSpec,
    pub domain: Domain,
    pub n: usize,
    pub boundary: BoundaryScenario,
    pub epsilon: f64,
}

impl Preset {
    pub fn grid(&self) -> Result<Grid> {
        Grid::on_domain(&self.domain, self.n)
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            epsilon: self.epsilon,
            ..SolveConfig::default()
        }
    }

    pub fn profile(&self) -> JumpProfile {
        JumpProfile::indicator()
    }
}

fn preset(name: &str, description: &str, weight: WeightSpec, dim: usize, n: usize) -> Preset {
    Preset {
        name: name.into(),
        description: description.into(),
        weight,
        domain: Domain::cube(dim, -1.0, 1.0),
        n,
        boundary: BoundaryScenario::Constant { level: 0.1 },
        epsilon: 1.0,
    }
}

/// The perturbed point weight `|x|^{-1/2} + |x|^{-1/4}` in the plane.
pub fn perturbed_point_weight() -> WeightSpec {
    // on [-1, 1]² both terms are smallest at the corners
    let tau0 = 2f64.sqrt().powf(-0.5) + 2f64.sqrt().powf(-0.25);
    WeightSpec::new(
        2,
        tau0,
        WeightKind::Perturbed {
            base: Box::new(WeightKind::PowerSubspace { alpha: -0.5, codim: 2 }),
            multiplier: None,
            additive: Some(RadialPower {
                coefficient: 1.0,
                exponent: -0.25,
            }),
        },
    )
    .expect("valid preset")
}

pub fn presets() -> Vec<Preset> {
    vec![
        preset(
            "ac-classical",
            "constant weight 1, f = 0.1, eps = 1 on [-1,1]^2",
            WeightSpec::constant(2, 1.0).expect("valid preset"),
            2,
            257,
        ),
        preset(
            "singular-line",
            "|x1|^(-1/2), f = 0.1, eps = 1 on [-1,1]^2",
            WeightSpec::power_subspace(2, -0.5, 1).expect("valid preset"),
            2,
            257,
        ),
        preset(
            "anisotropic",
            "|x1|^(-1/4) |x2|^(-1/4), f = 0.1, eps = 1 on [-1,1]^2",
            WeightSpec::new(
                2,
                1.0,
                WeightKind::AnisotropicProduct {
                    exponents: vec![-0.25, -0.25],
                },
            )
            .expect("valid preset"),
            2,
            257,
        ),
        preset(
            "two-cone",
            "|x1|^(-1/2) |x2 x3|^(-1/4), f = 0.1, eps = 1 on [-1,1]^3",
            WeightSpec::new(
                3,
                1.0,
                WeightKind::TwoCone {
                    split: 1,
                    alpha1: -0.5,
                    alpha2: -0.25,
                },
            )
            .expect("valid preset"),
            3,
            65,
        ),
        preset(
            "perturbed-point",
            "|x|^(-1/2) + |x|^(-1/4), f = 0.1, eps = 1 on [-1,1]^2",
            perturbed_point_weight(),
            2,
            257,
        ),
    ]
}

pub fn find_preset(name: &str) -> Result<Preset> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Precondition(format!("unknown preset {name:?}")))
}
