//! Regression values. Closed-form oracles where one exists, otherwise
//! numbers frozen from a reviewed run.

use std::f64::consts::PI;

use cavitation_core::analysis::{canonical_point, extract_free_boundary, holder_modulus};
use cavitation_core::blowup::{axis_crossing, calibrate_half_plane};
use cavitation_core::grid::{poincare_ratio, sample_face_weights, BoundaryData, Domain, Grid, ScalarField};
use cavitation_core::scenario::{find_preset, perturbed_point_weight, BoundaryScenario};
use cavitation_core::solver::{minimize_cavitation, multi_start};
use cavitation_core::weights::{a2_constant, homogenized_limit, singularity_bounds, BallFamily};
use cavitation_core::{JumpProfile, SolveConfig, WeightSpec};

fn square(n: usize) -> Grid {
    Grid::cube(2, -1.0, 1.0, n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Midpoint quadrature of an integrable power singularity converges like
// N^{-(1+α)}; Richardson extrapolation of two levels recovers the limit.

#[test]
fn a2_product_of_a_one_dimensional_power() {
    // avg |x|^α · avg |x|^{-α} over a ball centred at 0 is 1 / (1 − α²)
    let alpha = -0.5;
    let spec = WeightSpec::power_subspace(1, alpha, 1).unwrap();
    let product = |resolution| {
        let family = BallFamily {
            centers_per_axis: 3,
            radii: vec![0.5],
            resolution,
            extra_centers: vec![],
        };
        a2_constant(&spec, &Domain::cube(1, -1.0, 1.0), &family)
            .unwrap()
            .c1_estimate
    };
    let (coarse, fine) = (product(1024), product(4096));
    let exact = 1.0 / (1.0 - alpha * alpha);
    assert!(coarse < fine && fine < exact);
    // four times the points halve the error
    assert!(rel(2.0 * fine - coarse, exact) < 1e-4, "{coarse} {fine}");
}

#[test]
fn ball_average_of_the_line_weight() {
    // (2/π) B(1/4, 3/2) for |x₁|^{-1/2} over the unit disc
    let spec = WeightSpec::power_subspace(2, -0.5, 1).unwrap();
    let average = |resolution| {
        let b = singularity_bounds(&spec, &[0.0, 0.0], &[0.5, 0.25], resolution).unwrap();
        assert!(rel(b.l_bound, b.tau_star) < 1e-9);
        b.l_bound
    };
    let (coarse, fine) = (average(256), average(512));
    let exact = 2.225_7;
    assert!(coarse < fine && fine < exact);
    let s = 2f64.sqrt();
    assert!(rel((s * fine - coarse) / (s - 1.0), exact) < 1e-3, "{coarse} {fine}");
}

#[test]
fn perturbation_residual_decays_like_lambda_to_a_quarter() {
    // ∫_{B_1} λ^{1/4} |x|^{-1/4} dx = 8π/7 · λ^{1/4}
    let lambdas = [0.1, 1e-2, 1e-3];
    let limit = homogenized_limit(&perturbed_point_weight(), &lambdas, 64).unwrap();
    assert!(limit.converging);
    for (res, l) in limit.l1_residuals.iter().zip(lambdas) {
        let exact = 8.0 * PI / 7.0 * l.powf(0.25);
        assert!(rel(*res, exact) < 5e-3, "{res} vs {exact}");
    }
}

#[test]
fn poincare_ratios_of_the_bump() {
    for (spec, expected) in [
        (WeightSpec::constant(2, 1.0).unwrap(), 0.169_703),
        (
            WeightSpec {
                tau0: 1e-6,
                ..WeightSpec::power_subspace(2, -0.5, 1).unwrap()
            },
            0.216_169,
        ),
    ] {
        let g = Grid::cube(2, -1.0, 1.0, 65).unwrap();
        let w = sample_face_weights(&spec, &g).unwrap();
        let bump = ScalarField::from_fn(&g, |x| (1.0 - (x[0] * x[0] + x[1] * x[1]).sqrt() / 0.5).max(0.0));
        let ratio = poincare_ratio(&bump, &w, &[0.0, 0.0], 0.5).unwrap();
        assert!((ratio - expected).abs() < 1e-6, "{ratio}");
    }
}

#[test]
fn classical_layer_and_multi_start() {
    // with ω ≡ 1 and ε = 1 the positive layer along each side has slope 1,
    // so it is as thick as the data level 0.1
    let g = square(65);
    let w = sample_face_weights(&WeightSpec::constant(2, 1.0).unwrap(), &g).unwrap();
    let f = BoundaryData::constant(&g, 0.1).unwrap();
    let cfg = SolveConfig::default();
    let (r, report) = multi_start(&g, &w, &f, &JumpProfile::indicator(), &cfg, 4, 11, 1e-6).unwrap();
    assert!(r.converged && report.converged.iter().all(|c| *c));
    assert!(!report.flagged, "{report:?}");
    let zero_area = r.field.values.iter().filter(|v| **v == 0.0).count() as f64 * g.cell_volume();
    assert!(rel(zero_area, 1.8 * 1.8) < 0.05, "{zero_area}");
    // 1/16 inside the bottom side, where a unit slope leaves 0.0375
    let mid = g.nearest_node(&[0.0, -0.9375]);
    assert!((r.field.values[mid] - 0.0375).abs() < 0.005, "{}", r.field.values[mid]);
}

#[test]
fn half_plane_front_is_exact_for_the_unit_weight() {
    // data x₁⁺ with ε = 1 is the minimizer itself; the front moves find it
    let g = square(129);
    let w = sample_face_weights(&WeightSpec::constant(2, 1.0).unwrap(), &g).unwrap();
    let f = BoundaryScenario::HalfPlane { amplitude: 1.0 }
        .boundary_data(&g)
        .unwrap();
    let r = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &SolveConfig::default()).unwrap();
    assert!(r.converged && r.front_moves > 0);
    for (i, v) in r.field.values.iter().enumerate() {
        assert!((v - g.point(i)[0].max(0.0)).abs() < 1e-10);
    }
    assert!((r.final_energy() - 4.031_25).abs() < 1e-9, "{}", r.final_energy());
    assert_eq!(axis_crossing(&r.field), Some(0.0));
}

#[test]
fn front_moves_lower_the_energy() {
    let g = square(129);
    let w = sample_face_weights(&WeightSpec::power_subspace(2, -0.5, 1).unwrap(), &g).unwrap();
    let f = BoundaryData::constant(&g, 0.1).unwrap();
    let with = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &SolveConfig::default()).unwrap();
    let without = minimize_cavitation(
        &g,
        &w,
        &f,
        &JumpProfile::indicator(),
        &SolveConfig {
            front_moves: false,
            ..SolveConfig::default()
        },
    )
    .unwrap();
    assert!(with.front_moves > 0);
    assert!(with.final_energy() < without.final_energy());
}

#[test]
fn axis_crossing_extrapolates_linearly() {
    let g = square(65);
    let u = ScalarField::from_fn(&g, |x| 2.0 * (x[0] - 0.3).max(0.0));
    assert!((axis_crossing(&u).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(axis_crossing(&ScalarField::zeros(&g)), None);
}

#[test]
fn calibration_of_the_unit_weight() {
    // the one-dimensional front sits at 1 − a, so a = 1 puts it at the origin
    let g = square(65);
    let cal = calibrate_half_plane(
        &WeightSpec::constant(2, 1.0).unwrap(),
        &g,
        &JumpProfile::indicator(),
        &SolveConfig::default(),
        (0.8, 1.2),
        8,
    )
    .unwrap();
    assert!((cal.amplitude - 1.0).abs() <= 2.0 * g.h(), "{cal:?}");
    assert!(cal.crossing <= 0.0 && cal.crossing > -2.0 * g.h());
    assert_eq!(cal.solves, 10);
    let narrow = calibrate_half_plane(
        &WeightSpec::constant(2, 1.0).unwrap(),
        &g,
        &JumpProfile::indicator(),
        &SolveConfig::default(),
        (0.5, 0.6),
        2,
    );
    assert!(narrow.is_err());
}

#[test]
fn singular_line_solution_at_129() {
    let preset = find_preset("singular-line").unwrap();
    let g = square(129);
    let w = sample_face_weights(&preset.weight, &g).unwrap();
    let f = preset.boundary.boundary_data(&g).unwrap();
    let r = minimize_cavitation(&g, &w, &f, &preset.profile(), &preset.solve_config()).unwrap();
    assert!(r.converged);
    let fb = extract_free_boundary(&r.field);
    assert_eq!(fb.cells.len(), 484);
    let z0 = canonical_point(&r.field, &preset.weight).unwrap();
    assert_eq!(g.point(z0), vec![0.0, -0.765_625]);
    let holder = holder_modulus(&r.field, &[0.0, -0.6], 0.3).unwrap();
    assert!(holder.exponent.unwrap() >= 0.2, "{holder:?}");
}

#[test]
fn saddle_data() {
    let s = BoundaryScenario::Saddle { amplitude: 2.0 };
    assert_eq!(s.eval(&[1.0, 0.5]), 1.5);
    assert_eq!(s.eval(&[0.5, 1.0]), 0.0);
    assert_eq!(s.name(), "saddle");
}
