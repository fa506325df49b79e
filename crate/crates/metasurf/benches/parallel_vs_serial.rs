//! Serial vs parallel execution of the embarrassingly parallel loops: a
//! short frequency sweep and a batch of independent cell solves.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metasurf::cell::{compute_coefficients, MaterialPair};
use metasurf::levelset::{shape_cell_mesh, Shape};
use metasurf::macroscale::{MacroConfig, MacroGeometry};
use metasurf::mesh::ConformOptions;
use metasurf::par::{self, Exec};
use metasurf::reference::{build_comparison, frequency_sweep, k0_grid};
use std::sync::Arc;

fn sweep(c: &mut Criterion) {
    let mut g = MacroGeometry::validation();
    g.width = 0.1;
    g.outlet1 = (0.0, 0.1);
    let cfg = MacroConfig::from_k0(25.0, g);
    let cell = shape_cell_mesh(&Shape::validation_parallelogram(), 20, &ConformOptions::default()).unwrap();
    let cmp = build_comparison(cell, &MaterialPair::air_aluminum(), &cfg, 10, 10).unwrap();
    let ks = k0_grid(10.0, 40.0, 5.0).unwrap();
    let mut group = c.benchmark_group("sweep_7_frequencies");
    group.sample_size(10);
    for exec in [Exec::Serial, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| b.iter(|| frequency_sweep(&cmp, &ks, e)));
    }
    group.finish();
}

fn cells(c: &mut Criterion) {
    let meshes: Vec<_> = (0..8)
        .map(|i| {
            let s = Shape::Circle { center: [0.5, 0.5], radius: 0.1 + 0.03 * i as f64 };
            Arc::new(shape_cell_mesh(&s, 20, &ConformOptions::default()).unwrap())
        })
        .collect();
    let mat = MaterialPair::air_aluminum();
    let mut group = c.benchmark_group("cell_batch_8");
    group.sample_size(10);
    for exec in [Exec::Serial, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| par::map(e, &meshes, |m| compute_coefficients(m.clone(), &mat).unwrap().1))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, cells);
criterion_main!(benches);
