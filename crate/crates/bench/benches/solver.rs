use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cavitation_core::analysis::{canonical_point, growth_function, usable_radii};
use cavitation_core::grid::{discrete_flux_divergence, energy, sample_face_weights, BoundaryData, Grid, ScalarField};
use cavitation_core::scenario::find_preset;
use cavitation_core::solver::{harmonic_replacement, minimize_cavitation};
use cavitation_core::{JumpProfile, SolveConfig, WeightSpec};

fn line_weight() -> WeightSpec {
    WeightSpec::power_subspace(2, -0.5, 1).unwrap()
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("minimize_cavitation");
    group.sample_size(10);
    let cfg = SolveConfig::default();
    for n in [33, 65, 129] {
        let g = Grid::cube(2, -1.0, 1.0, n).unwrap();
        let w = sample_face_weights(&line_weight(), &g).unwrap();
        let f = BoundaryData::constant(&g, 0.1).unwrap();
        group.bench_with_input(BenchmarkId::new("singular-line", n), &n, |b, _| {
            b.iter(|| minimize_cavitation(&g, &w, &f, &JumpProfile::indicator(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let g = Grid::cube(2, -1.0, 1.0, 257).unwrap();
    let w = sample_face_weights(&line_weight(), &g).unwrap();
    let u = ScalarField::from_fn(&g, |x| (x[0] * x[0] + x[1] - 0.2).max(0.0));
    c.bench_function("energy 257^2", |b| b.iter(|| energy(black_box(&u), &w, 1.0).unwrap()));
    c.bench_function("flux divergence 257^2", |b| {
        b.iter(|| discrete_flux_divergence(black_box(&u), &w).unwrap())
    });
    c.bench_function("face weights 257^2", |b| {
        b.iter(|| sample_face_weights(black_box(&line_weight()), &g).unwrap())
    });
    let mut group = c.benchmark_group("harmonic_replacement");
    group.sample_size(10);
    group.bench_function("R = 0.5 on 129^2", |b| {
        let g = Grid::cube(2, -1.0, 1.0, 129).unwrap();
        let w = sample_face_weights(&line_weight(), &g).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x[0] + x[1]).max(0.0));
        b.iter(|| harmonic_replacement(&u, &w, &[0.0, 0.0], 0.5, 1e-10).unwrap())
    });
    group.finish();
}

fn analysis(c: &mut Criterion) {
    let preset = find_preset("singular-line").unwrap();
    let g = Grid::on_domain(&preset.domain, 129).unwrap();
    let w = sample_face_weights(&preset.weight, &g).unwrap();
    let f = preset.boundary.boundary_data(&g).unwrap();
    let u = minimize_cavitation(&g, &w, &f, &preset.profile(), &preset.solve_config())
        .unwrap()
        .field;
    c.bench_function("growth function 129^2", |b| {
        b.iter(|| {
            let z0 = canonical_point(&u, &preset.weight).unwrap();
            growth_function(&u, z0, &usable_radii(&g)).unwrap()
        })
    });
}

criterion_group!(benches, solve, kernels, analysis);
criterion_main!(benches);
