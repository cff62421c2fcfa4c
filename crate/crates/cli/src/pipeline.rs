//! Solve, analyze, write reports.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use cavitation_core::analysis::{
    canonical_point, check_nondegeneracy, check_optimal_regularity, comparability_samples, distance_comparability,
    extract_free_boundary, fit_growth_exponent, growth_function, holder_modulus, nearest_free_boundary_node,
    positive_density, usable_radii, GrowthReport,
};
use cavitation_core::blowup::blowup_convergence;
use cavitation_core::grid::{sample_face_weights, BoundaryData, FaceWeightField, Grid, ScalarField};
use cavitation_core::io::{write_csv, write_dump_file};
use cavitation_core::scenario::BoundaryScenario;
use cavitation_core::solver::{
    closeness_gap, harmonic_replacement, harnack_ratio, minimize_cavitation, multi_start, MultiStartReport,
};
use cavitation_core::weights::{a2_constant, singularity_bounds, BallFamily};
use cavitation_core::{JumpProfile, SolveResult, WeightSpec};

use crate::config::{AnalysisRequest, Resolved};

pub const SCHEMA_VERSION: u32 = 1;

/// Densities below this fail the density check.
const MIN_DENSITY: f64 = 0.1;
/// Comparability constants further apart than this fail the density check.
const MAX_ECCENTRICITY: f64 = 50.0;

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub weight: WeightSpec,
    pub grid: GridSummary,
    pub boundary: BoundaryScenario,
    pub epsilon: f64,
    pub seed: u64,
    pub solve: Option<SolveSummary>,
    pub multi_start: Option<MultiStartReport>,
    pub checks: Vec<CheckRecord>,
    pub all_passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSummary {
    pub lo: Vec<f64>,
    pub shape: Vec<usize>,
    pub h: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub sweeps: usize,
    pub polishes: usize,
    pub front_moves: usize,
    pub energy: f64,
    pub dirichlet: f64,
    pub volume: f64,
    pub positive_nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub metrics: Value,
}

/// Everything a run produced, before it is turned into an exit status.
pub struct Outcome {
    pub summary: Summary,
    pub converged: bool,
}

#[derive(Serialize)]
struct EnergyRow {
    sweep: usize,
    dirichlet: f64,
    volume: f64,
    total: f64,
}

#[derive(Serialize)]
struct GrowthRow {
    radius: f64,
    s_value: f64,
    usable: bool,
}

#[derive(Serialize)]
struct DensityRow {
    radius: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct A2Row {
    center: String,
    radius: f64,
    product: f64,
}

#[derive(Serialize)]
struct BlowupRow {
    lambda: f64,
    sup_distance: f64,
    energy_lhs: f64,
    energy_rhs: f64,
    origin_offset: f64,
}

struct Context<'a> {
    cfg: &'a Resolved,
    out: Option<&'a Path>,
    w: FaceWeightField,
    f: BoundaryData,
    profile: JumpProfile,
}

impl Context<'_> {
    fn path(&self, file: &str) -> Option<PathBuf> {
        self.out.map(|d| d.join(file))
    }
}

fn needs_solve(cfg: &Resolved) -> bool {
    cfg.analyses.is_empty()
        || cfg
            .analyses
            .iter()
            .any(|a| !matches!(a, AnalysisRequest::A2 | AnalysisRequest::Harnack { .. }))
}

pub fn run(cfg: &Resolved) -> anyhow::Result<Outcome> {
    let out = cfg.output_dir.as_deref();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let grid = &cfg.grid;
    let ctx = Context {
        cfg,
        out,
        w: sample_face_weights(&cfg.weight, grid)?,
        f: cfg.boundary.boundary_data(grid)?,
        profile: JumpProfile::indicator(),
    };
    let mut solve = None;
    let mut starts = None;
    if needs_solve(cfg) {
        let result = match &cfg.multi_start {
            Some(m) => {
                let (r, report) = multi_start(
                    grid,
                    &ctx.w,
                    &ctx.f,
                    &ctx.profile,
                    &cfg.solver,
                    m.starts,
                    cfg.seed,
                    m.gap_tol,
                )?;
                starts = Some(report);
                r
            }
            None => minimize_cavitation(grid, &ctx.w, &ctx.f, &ctx.profile, &cfg.solver)?,
        };
        log::info!(
            "solve: {} sweeps, converged {}, energy {:.12e}",
            result.sweeps,
            result.converged,
            result.final_energy()
        );
        if let Some(p) = ctx.path("solution.dump") {
            write_dump_file(&result.field, &p)?;
        }
        if let Some(p) = ctx.path("energy.csv") {
            let rows: Vec<EnergyRow> = result
                .energy_history
                .iter()
                .enumerate()
                .map(|(k, e)| EnergyRow {
                    sweep: k,
                    dirichlet: e.dirichlet,
                    volume: e.volume,
                    total: e.total,
                })
                .collect();
            write_csv(&rows, &p)?;
        }
        solve = Some(result);
    }
    let mut checks = Vec::new();
    for request in &cfg.analyses {
        let record = match analyze(&ctx, solve.as_ref(), request) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{} failed: {e:#}", request.name());
                CheckRecord {
                    name: request.name().into(),
                    pass: false,
                    metrics: json!({ "error": format!("{e:#}") }),
                }
            }
        };
        log::info!("{}: {}", record.name, if record.pass { "pass" } else { "fail" });
        checks.push(record);
    }
    let converged = solve.as_ref().map_or(true, |r| r.converged);
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        weight: cfg.weight.clone(),
        grid: GridSummary {
            lo: grid.lo().to_vec(),
            shape: grid.shape().to_vec(),
            h: grid.h(),
        },
        boundary: cfg.boundary.clone(),
        epsilon: cfg.solver.epsilon,
        seed: cfg.seed,
        solve: solve.as_ref().map(|r| {
            let e = *r.energy_history.last().expect("history holds the starting energy");
            SolveSummary {
                converged: r.converged,
                sweeps: r.sweeps,
                polishes: r.polishes,
                front_moves: r.front_moves,
                energy: e.total,
                dirichlet: e.dirichlet,
                volume: e.volume,
                positive_nodes: r.field.positive_count(),
            }
        }),
        multi_start: starts,
        all_passed: checks.iter().all(|c| c.pass),
        checks,
    };
    if let Some(p) = ctx.path("summary.json") {
        std::fs::write(p, serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(Outcome { summary, converged })
}

/// Free boundary node nearest to `near`, or the canonical point of the weight.
fn base_point(u: &ScalarField, spec: &WeightSpec, near: &Option<Vec<f64>>) -> anyhow::Result<usize> {
    match near {
        Some(p) => nearest_free_boundary_node(u, |x| dist(x, p))
            .ok_or_else(|| anyhow::anyhow!("the solution has no free boundary")),
        None => Ok(canonical_point(u, spec)?),
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn growth(u: &ScalarField, spec: &WeightSpec, near: &Option<Vec<f64>>) -> anyhow::Result<(usize, GrowthReport)> {
    let z0 = base_point(u, spec, near)?;
    Ok((z0, growth_function(u, z0, &usable_radii(&u.grid))?))
}

fn analyze(ctx: &Context, solve: Option<&SolveResult>, request: &AnalysisRequest) -> anyhow::Result<CheckRecord> {
    let cfg = ctx.cfg;
    let spec = &cfg.weight;
    let alpha = spec.alpha();
    let solved = || solve.map(|r| &r.field).expect("analysis runs after the solve");
    let (pass, metrics) = match request {
        AnalysisRequest::Growth { near } => {
            let u = solved();
            let (z0, report) = growth(u, spec, near)?;
            let fit = fit_growth_exponent(&report)?;
            let reg = check_optimal_regularity(&report, alpha)?;
            if let Some(p) = ctx.path("growth.csv") {
                let usable = report.usable().0;
                let rows: Vec<GrowthRow> = report
                    .radii
                    .iter()
                    .zip(&report.s_values)
                    .map(|(r, s)| GrowthRow {
                        radius: *r,
                        s_value: *s,
                        usable: usable.contains(r),
                    })
                    .collect();
                write_csv(&rows, &p)?;
            }
            (
                reg.pass,
                json!({
                    "center": u.grid.point(z0),
                    "fitted_exponent": fit.exponent,
                    "fitted_constant": fit.constant,
                    "target_exponent": reg.target_exponent,
                    "first_local_slope": reg.first_local_slope,
                    "inferred_c": reg.inferred_c,
                    "radii": report.radii,
                    "s_values": report.s_values,
                }),
            )
        }
        AnalysisRequest::Nondeg { near } => {
            let u = solved();
            let (z0, report) = growth(u, spec, near)?;
            let (radii, _) = report.usable();
            let bounds = singularity_bounds(spec, &u.grid.point(z0), &radii, 64)?;
            let check = check_nondegeneracy(&report, alpha, bounds.l_bound, spec.dim)?;
            (
                check.pass,
                json!({
                    "center": u.grid.point(z0),
                    "min_ratio": check.min_ratio,
                    "ratios": check.ratios,
                    "predicted_constant": check.predicted_constant,
                    "l_bound": bounds.l_bound,
                }),
            )
        }
        AnalysisRequest::Density {
            near,
            comparability_radius,
        } => {
            let u = solved();
            let z0 = base_point(u, spec, near)?;
            let density = positive_density(u, z0, &usable_radii(&u.grid))?;
            let fb = extract_free_boundary(u);
            let samples = comparability_samples(u, &fb, z0, *comparability_radius);
            let comp = distance_comparability(u, alpha, &fb, &samples)?;
            if let Some(p) = ctx.path("density.csv") {
                let rows: Vec<DensityRow> = density
                    .radii
                    .iter()
                    .zip(&density.fractions)
                    .map(|(r, f)| DensityRow {
                        radius: *r,
                        fraction: *f,
                    })
                    .collect();
                write_csv(&rows, &p)?;
            }
            (
                density.min_fraction >= MIN_DENSITY && comp.eccentricity() <= MAX_ECCENTRICITY,
                json!({
                    "center": u.grid.point(z0),
                    "min_fraction": density.min_fraction,
                    "fractions": density.fractions,
                    "c_lower": comp.c_lower,
                    "c_upper": comp.c_upper,
                    "eccentricity": comp.eccentricity(),
                    "samples": comp.samples,
                }),
            )
        }
        AnalysisRequest::Replace { center, radius } => {
            let u = solved();
            let h = harmonic_replacement(u, &ctx.w, center, *radius, 1e-12)?;
            let c = closeness_gap(u, &h, &ctx.w, center, *radius, cfg.solver.epsilon)?;
            if let Some(p) = ctx.path("replacement.dump") {
                write_dump_file(&h, &p)?;
            }
            (c.pass, json!({ "gap": c.lhs, "bound": c.rhs }))
        }
        AnalysisRequest::Harnack { radius } => {
            let c = cfg.domain.center();
            let r = *radius;
            let ratio = harnack_ratio(&ctx.w, &c, r, |x| 1.0 + (x[0] - c[0]) / (4.0 * r))?;
            (
                ratio.is_finite() && ratio >= 1.0,
                json!({ "center": c, "ratio": ratio }),
            )
        }
        AnalysisRequest::Holder { center, radius } => {
            let report = holder_modulus(solved(), center, *radius)?;
            (
                report.constant || report.exponent.is_some_and(|e| e > 0.0),
                serde_json::to_value(&report)?,
            )
        }
        AnalysisRequest::A2 => {
            let report = a2_constant(spec, &cfg.domain, &BallFamily::default())?;
            let min = report.per_ball_products.iter().cloned().fold(f64::INFINITY, f64::min);
            if let Some(p) = ctx.path("a2.csv") {
                let rows: Vec<A2Row> = report
                    .ball_family
                    .iter()
                    .zip(&report.per_ball_products)
                    .map(|(b, v)| A2Row {
                        center: format!("{:?}", b.center),
                        radius: b.radius,
                        product: *v,
                    })
                    .collect();
                write_csv(&rows, &p)?;
            }
            (
                min >= 1.0 - 1e-12,
                json!({
                    "c1_estimate": report.c1_estimate,
                    "min_product": min,
                    "balls": report.per_ball_products.len(),
                    "skipped_balls": report.skipped_balls,
                }),
            )
        }
        AnalysisRequest::Blowup { lambdas } => blowup(ctx, lambdas)?,
    };
    Ok(CheckRecord {
        name: request.name().into(),
        pass,
        metrics,
    })
}

fn blowup(ctx: &Context, lambdas: &[f64]) -> anyhow::Result<(bool, Value)> {
    let cfg = ctx.cfg;
    let grid: &Grid = &cfg.grid;
    let seq = blowup_convergence(&cfg.weight, grid, &ctx.f, lambdas, &ctx.profile, &cfg.solver)?;
    if let Some(dir) = ctx.out {
        for (k, field) in seq.rescaled_fields.iter().enumerate() {
            write_dump_file(field, &dir.join(format!("blowup_{k}.dump")))?;
        }
        let rows: Vec<BlowupRow> = seq
            .successive_sup_distances
            .iter()
            .enumerate()
            .map(|(k, d)| BlowupRow {
                lambda: seq.lambdas[k + 1],
                sup_distance: *d,
                energy_lhs: seq.energy_pairs[k].0,
                energy_rhs: seq.energy_pairs[k].1,
                origin_offset: seq.origin_offsets[k + 1],
            })
            .collect();
        write_csv(&rows, &dir.join("blowup.csv"))?;
    }
    let pass = seq.truncated.is_none() && seq.all_converged && seq.distances_decreasing();
    Ok((
        pass,
        json!({
            "lambdas": seq.lambdas,
            "beta": seq.beta,
            "sup_distances": seq.successive_sup_distances,
            "origin_offsets": seq.origin_offsets,
            "truncated": seq.truncated,
            "all_converged": seq.all_converged,
        }),
    ))
}
