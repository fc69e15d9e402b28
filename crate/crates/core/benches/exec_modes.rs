//! Sequential versus parallel execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxfield_core::ann::{loss_and_grad_with, sample_volume_with, train_surrogate, NetParams, Sample, TrainParams};
use voxfield_core::boundary::{assemble_boundary_with, BoundaryField, BoundaryMethod};
use voxfield_core::field::{CornerSet, FieldKind, PlacementScheme};
use voxfield_core::solver::{solve_many, Provenance, SolverParams, VolumeGrid};
use voxfield_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];
const CORNERS: [f64; 8] = [19.0, 20.0, 26.0, 27.0, 20.0, 21.0, 25.0, 26.0];

fn corners() -> CornerSet {
    CornerSet::new(PlacementScheme::S1Corners8, CORNERS.to_vec(), FieldKind::temperature(), 0).unwrap()
}

fn bench_sampling(c: &mut Criterion) {
    let vol = VolumeGrid::from_fn(6, FieldKind::temperature(), Provenance::Predefined, |p| p[0] + p[1] * p[2]).unwrap();
    let hyper = TrainParams { max_epochs: 50, ..Default::default() };
    let model = train_surrogate(&vol, 32, &hyper, 1).unwrap();
    let mut group = c.benchmark_group("sample_volume_64");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| sample_volume_with(black_box(&model), 64, exec).unwrap()));
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let flat: Vec<f64> = (0..5 * 32 + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let params = NetParams::from_flat(32, &flat).unwrap();
    let mut group = c.benchmark_group("loss_and_grad");
    for n in [8usize, 16] {
        let samples: Vec<Sample> = (0..n * n * n)
            .map(|_| Sample { point: [rng.random(), rng.random(), rng.random()], target: rng.random_range(-1.0..1.0) })
            .collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n * n * n), &samples, |b, s| {
                b.iter(|| loss_and_grad_with(black_box(&params), s, exec))
            });
        }
    }
    group.finish();
}

fn bench_solves(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 16;
    let boundaries: Vec<BoundaryField> = (0..8)
        .map(|_| {
            let values = (0..n * n * n).map(|_| rng.random_range(15.0..30.0)).collect();
            let vol = VolumeGrid::new(n, values, FieldKind::temperature(), Provenance::Predefined).unwrap();
            BoundaryField::from_volume(&vol, BoundaryMethod::Bilinear)
        })
        .collect();
    let params = SolverParams::default();
    let mut group = c.benchmark_group("solve_many_8x16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| solve_many(black_box(&boundaries), &params, exec)));
    }
    group.finish();
}

fn bench_boundary(c: &mut Criterion) {
    let cs = corners();
    let params = SolverParams::default();
    let mut group = c.benchmark_group("assemble_boundary_fd2d_32");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| assemble_boundary_with(black_box(&cs), BoundaryMethod::Fd2d, 32, &params, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sampling, bench_gradient, bench_solves, bench_boundary);
criterion_main!(benches);
