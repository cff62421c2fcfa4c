use proptest::prelude::*;

use cavitation_core::analysis::{fit_growth_exponent, growth_function, nondegeneracy_constant, positive_density};
use cavitation_core::blowup::{blowup_exponent, rescale_minimizer};
use cavitation_core::grid::{
    discrete_flux_divergence, energy, sample_face_weights, BoundaryData, FaceWeightField, Grid, ScalarField,
};
use cavitation_core::solver::{harmonic_replacement, minimize_cavitation};
use cavitation_core::{JumpProfile, SolveConfig, WeightSpec};

fn weights() -> impl Strategy<Value = WeightSpec> {
    prop_oneof![
        Just(WeightSpec::constant(2, 1.0).unwrap()),
        (-0.9f64..=0.0).prop_map(|a| WeightSpec::power_subspace(2, a, 1).unwrap()),
        (-1.5f64..=0.0).prop_map(|a| WeightSpec::power_subspace(2, a, 2).unwrap()),
    ]
}

fn field(g: &Grid, values: &[f64]) -> ScalarField {
    ScalarField::new(g.clone(), values.to_vec()).unwrap()
}

fn small_solve(spec: &WeightSpec, level: f64) -> (Grid, FaceWeightField, BoundaryData) {
    let g = Grid::cube(2, -1.0, 1.0, 17).unwrap();
    let w = sample_face_weights(spec, &g).unwrap();
    let f = BoundaryData::from_fn(&g, |x| level * (1.0 + 0.5 * x[0] * x[1])).unwrap();
    (g, w, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_is_minus_half_the_gradient(
        spec in weights(),
        u in prop::collection::vec(0.0f64..1.0, 49),
        phi in prop::collection::vec(-1.0f64..1.0, 49),
    ) {
        let g = Grid::cube(2, -1.0, 1.0, 7).unwrap();
        let w = sample_face_weights(&spec, &g).unwrap();
        // φ vanishes on the boundary
        let phi: Vec<f64> = phi.iter().enumerate().map(|(i, p)| if g.is_boundary(i) { 0.0 } else { *p }).collect();
        let dirichlet = |t: f64| {
            let v: Vec<f64> = u.iter().zip(&phi).map(|(a, b)| a + t * b).collect();
            energy(&field(&g, &v), &w, 0.0).unwrap().dirichlet
        };
        let t = 1e-4;
        let derivative = (dirichlet(t) - dirichlet(-t)) / (2.0 * t);
        let div = discrete_flux_divergence(&field(&g, &u), &w).unwrap();
        let vol = g.cell_volume();
        let pairing: f64 = phi.iter().zip(&div.values).map(|(p, d)| p * d).sum::<f64>() * vol;
        let scale = derivative.abs().max(pairing.abs()).max(1e-12);
        prop_assert!((derivative + 2.0 * pairing).abs() <= 1e-8 * scale, "{} vs {}", derivative, -2.0 * pairing);
    }

    #[test]
    fn energy_is_affine_in_epsilon(
        u in prop::collection::vec(-0.5f64..1.0, 64),
        e1 in 0.0f64..3.0,
        e2 in 0.0f64..3.0,
    ) {
        let g = Grid::cube(2, 0.0, 1.0, 8).unwrap();
        let w = sample_face_weights(&WeightSpec::power_subspace(2, -0.5, 1).unwrap(), &g).unwrap();
        let v: Vec<f64> = u.iter().map(|x| x.max(0.0)).collect();
        let f = field(&g, &v);
        let slope = g.cell_volume() * f.positive_count() as f64;
        let (a, b) = (energy(&f, &w, e1).unwrap().total, energy(&f, &w, e2).unwrap().total);
        prop_assert!(((b - a) - slope * (e2 - e1)).abs() <= 1e-12 * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn growth_is_monotone_and_densities_are_fractions(p in 1.0f64..2.0) {
        let g = Grid::cube(2, -1.0, 1.0, 65).unwrap();
        let u = ScalarField::from_fn(&g, |x| x[0].max(0.0).powf(p));
        let z0 = g.nearest_node(&[0.0, 0.0]);
        let radii = [0.5, 0.25, 0.125, 0.0625];
        let report = growth_function(&u, z0, &radii).unwrap();
        prop_assert!(report.s_values.windows(2).all(|s| s[1] <= s[0]));
        let fit = fit_growth_exponent(&growth_function(&u, z0, &[0.25, 0.125, 0.0625, 0.03125]).unwrap());
        if let Ok(fit) = fit {
            prop_assert!((fit.exponent - p).abs() < 1e-6, "{} vs {}", fit.exponent, p);
        }
        let density = positive_density(&u, z0, &radii).unwrap();
        prop_assert!(density.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn rescalings_compose(l1 in 0.3f64..0.9, l2 in 0.3f64..0.9, alpha in -1.0f64..0.5) {
        let g = Grid::cube(2, -1.0, 1.0, 129).unwrap();
        let u = ScalarField::from_fn(&g, |x| 1.0 + (1.3 * x[0]).sin() * (0.7 * x[1]).cos() + 0.2 * x[1]);
        let twice = rescale_minimizer(&rescale_minimizer(&u, l1, alpha, &g).unwrap(), l2, alpha, &g).unwrap();
        let once = rescale_minimizer(&u, l1 * l2, alpha, &g).unwrap();
        let scale = once.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = twice.values.iter().zip(&once.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-3 * scale, "{}", gap);
    }

    #[test]
    fn blowup_exponent_reads_alpha(alpha in -1.9f64..1.9) {
        prop_assert_eq!(blowup_exponent(alpha), 1.0 - alpha / 2.0);
    }

    #[test]
    fn nondegeneracy_constant_formula(d in 2usize..=3, l in prop::sample::select(vec![1.0, 4.0])) {
        let df = d as f64;
        let direct = 2.0 * ((1.0 / l) * df.powi(d as i32) / (df + 2.0).powi(d as i32 + 2)).sqrt();
        prop_assert!((nondegeneracy_constant(d, l) - direct).abs() <= 1e-12 * direct);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn minimizers_satisfy_the_structure_properties(spec in weights(), level in 0.02f64..0.5, eps in 0.05f64..2.0) {
        let (g, w, f) = small_solve(&spec, level);
        let cfg = SolveConfig { epsilon: eps, ..SolveConfig::default() };
        let r = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &cfg).unwrap();
        prop_assert!(r.converged);
        let totals = r.totals();
        prop_assert!(totals.windows(2).all(|t| t[1] <= t[0] + 1e-12 * t[0].abs().max(1.0)));
        let sup = f.sup_norm();
        prop_assert!(r.field.values.iter().all(|v| *v >= 0.0 && *v <= sup));
        let div = discrete_flux_divergence(&r.field, &w).unwrap();
        let scale = w.cap * sup / (g.h() * g.h());
        for i in (0..g.len()).filter(|&i| !g.is_boundary(i)) {
            prop_assert!(div.values[i] >= -1e-8 * scale.max(1.0));
        }
        // the replacement competes with u
        let h = harmonic_replacement(&r.field, &w, &[0.0, 0.0], 0.5, 1e-13).unwrap();
        let e_u = energy(&r.field, &w, eps).unwrap().total;
        let e_h = energy(&h, &w, eps).unwrap().total;
        prop_assert!(e_u <= e_h + 1e-10 * e_h.abs().max(1.0), "{} > {}", e_u, e_h);
        // identical inputs, identical bits
        let again = minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &cfg).unwrap();
        prop_assert!(again.field.values.iter().zip(&r.field.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
