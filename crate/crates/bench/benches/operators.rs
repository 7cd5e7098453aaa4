//! Operator-level benchmarks: the forward model, the two backward routes
//! (the end-to-end crop form vs the two-stage wide-product form), and the
//! adjoint, at the dimensions used in the runtime comparison.

use cassi_bench::{benchmark_scene, benchmark_system};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

fn backward_routes(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward_routes");
    for &(h, w, l, s) in &[(256usize, 256usize, 28usize, 2usize), (128, 128, 16, 2)] {
        let model = benchmark_system(h, w, l, s);
        let scene = benchmark_scene(h, w, l);
        let y = model.forward(&scene).unwrap();
        group.throughput(Throughput::Elements((h * w * l) as u64));
        group.bench_with_input(
            BenchmarkId::new("end_to_end", format!("{h}x{w}x{l}_s{s}")),
            &y,
            |b, y| b.iter(|| black_box(model.backward(y).unwrap())),
        );
        group.bench_with_input(
            BenchmarkId::new("two_stage", format!("{h}x{w}x{l}_s{s}")),
            &y,
            |b, y| b.iter(|| black_box(model.two_stage_backward(y).unwrap())),
        );
    }
    group.finish();
}

fn forward_and_adjoint(c: &mut Criterion) {
    let (h, w, l, s) = (256usize, 256usize, 28usize, 2usize);
    let model = benchmark_system(h, w, l, s);
    let scene = benchmark_scene(h, w, l);
    let y = model.forward(&scene).unwrap();
    let mut group = c.benchmark_group("sensing_operator");
    group.throughput(Throughput::Elements((h * w * l) as u64));
    group.bench_function("forward_256x256x28", |b| {
        b.iter(|| black_box(model.forward(&scene).unwrap()))
    });
    group.bench_function("adjoint_256x256x28", |b| {
        b.iter(|| black_box(model.adjoint(&y).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, backward_routes, forward_and_adjoint);
criterion_main!(benches);
