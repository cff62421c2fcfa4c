//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cavitation_core::grid::{Domain, Grid};
use cavitation_core::scenario::{find_preset, BoundaryScenario};
use cavitation_core::{SolveConfig, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Name of a preset supplying weight, grid, boundary data and `ε`.
    /// Explicit fields override it.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub boundary: Option<BoundaryScenario>,
    /// Solver settings; `epsilon` defaults to the preset's when a preset is
    /// named and the solver block omits it.
    #[serde(default)]
    pub solver: Option<serde_json::Value>,
    #[serde(default)]
    pub analyses: Vec<AnalysisRequest>,
    #[serde(default)]
    pub multi_start: Option<MultiStartConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default)]
    pub domain: Option<Domain>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiStartConfig {
    pub starts: usize,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

fn default_gap_tol() -> f64 {
    1e-8
}

/// One analysis of the solved field. Points default to the canonical free
/// boundary point of the weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisRequest {
    Growth {
        #[serde(default)]
        near: Option<Vec<f64>>,
    },
    A2,
    Nondeg {
        #[serde(default)]
        near: Option<Vec<f64>>,
    },
    Density {
        #[serde(default)]
        near: Option<Vec<f64>>,
        #[serde(default = "default_comparability_radius")]
        comparability_radius: f64,
    },
    Replace {
        center: Vec<f64>,
        radius: f64,
    },
    Harnack {
        radius: f64,
    },
    Holder {
        center: Vec<f64>,
        radius: f64,
    },
    Blowup {
        #[serde(default = "default_lambdas")]
        lambdas: Vec<f64>,
    },
}

fn default_comparability_radius() -> f64 {
    0.25
}

fn default_lambdas() -> Vec<f64> {
    vec![0.5, 0.25, 0.125]
}

impl AnalysisRequest {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisRequest::Growth { .. } => "growth",
            AnalysisRequest::A2 => "a2",
            AnalysisRequest::Nondeg { .. } => "nondeg",
            AnalysisRequest::Density { .. } => "density",
            AnalysisRequest::Replace { .. } => "replace",
            AnalysisRequest::Harnack { .. } => "harnack",
            AnalysisRequest::Holder { .. } => "holder",
            AnalysisRequest::Blowup { .. } => "blowup",
        }
    }
}

/// A configuration with the preset merged in and every field checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub name: String,
    pub weight: WeightSpec,
    pub domain: Domain,
    pub grid: Grid,
    pub boundary: BoundaryScenario,
    pub solver: SolveConfig,
    pub analyses: Vec<AnalysisRequest>,
    pub multi_start: Option<MultiStartConfig>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

/// Error in the configuration itself (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("malformed config: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let preset = match &self.preset {
            Some(name) => Some(find_preset(name).map_err(|e| ConfigError(e.to_string()))?),
            None => None,
        };
        let weight = match (&self.weight, &preset) {
            (Some(w), _) => w.clone(),
            (None, Some(p)) => p.weight.clone(),
            (None, None) => return bad("config needs a weight or a preset"),
        };
        weight.validate().map_err(|e| ConfigError(e.to_string()))?;
        let (n, domain) = match (&self.grid, &preset) {
            (Some(g), p) => {
                let domain = g
                    .domain
                    .clone()
                    .or_else(|| p.as_ref().map(|p| p.domain.clone()))
                    .unwrap_or_else(|| Domain::cube(weight.dim, -1.0, 1.0));
                (g.n, domain)
            }
            (None, Some(p)) => (p.n, p.domain.clone()),
            (None, None) => return bad("config needs a grid or a preset"),
        };
        if domain.dim() != weight.dim {
            return bad(format!(
                "grid is {}-dimensional but the weight is {}-dimensional",
                domain.dim(),
                weight.dim
            ));
        }
        let grid = Grid::on_domain(&domain, n).map_err(|e| ConfigError(e.to_string()))?;
        let boundary = match (&self.boundary, &preset) {
            (Some(b), _) => b.clone(),
            (None, Some(p)) => p.boundary.clone(),
            (None, None) => return bad("config needs boundary data or a preset"),
        };
        let mut solver_json = self.solver.clone().unwrap_or_else(|| serde_json::json!({}));
        if let (Some(p), Some(obj)) = (&preset, solver_json.as_object_mut()) {
            obj.entry("epsilon").or_insert(serde_json::json!(p.epsilon));
        }
        let solver: SolveConfig =
            serde_json::from_value(solver_json).map_err(|e| ConfigError(format!("bad solver block: {e}")))?;
        solver.validate().map_err(|e| ConfigError(e.to_string()))?;
        for request in &self.analyses {
            check_request(request, weight.dim)?;
        }
        if let Some(m) = &self.multi_start {
            if m.starts == 0 {
                return bad("multi_start.starts must be at least 1");
            }
        }
        let name = self
            .name
            .clone()
            .or_else(|| self.preset.clone())
            .unwrap_or_else(|| "experiment".into());
        Ok(Resolved {
            name,
            weight,
            domain,
            grid,
            boundary,
            solver,
            analyses: self.analyses.clone(),
            multi_start: self.multi_start.clone(),
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        })
    }
}

fn check_request(request: &AnalysisRequest, dim: usize) -> Result<(), ConfigError> {
    let point = |p: &Option<Vec<f64>>| match p {
        Some(p) if p.len() != dim => bad(format!("{}: point {p:?} is not {dim}-dimensional", request.name())),
        _ => Ok(()),
    };
    match request {
        AnalysisRequest::Growth { near } | AnalysisRequest::Nondeg { near } => point(near),
        AnalysisRequest::Density {
            near,
            comparability_radius,
        } => {
            if !(*comparability_radius > 0.0) {
                return bad("density: comparability_radius must be positive");
            }
            point(near)
        }
        AnalysisRequest::Replace { center, radius } | AnalysisRequest::Holder { center, radius } => {
            point(&Some(center.clone()))?;
            if !(*radius > 0.0) {
                return bad(format!("{}: radius must be positive", request.name()));
            }
            Ok(())
        }
        AnalysisRequest::Harnack { radius } => {
            if !(*radius > 0.0) {
                return bad("harnack: radius must be positive");
            }
            Ok(())
        }
        AnalysisRequest::Blowup { lambdas } => {
            if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
                return bad("blowup: lambdas must lie in (0, 1)");
            }
            Ok(())
        }
        AnalysisRequest::A2 => Ok(()),
    }
}
