//! Solver-level benchmarks: fixed-point fusion sweeps and full ADMM stages
//! at desk scale.

use cassi_bench::{benchmark_scene, benchmark_system};
use cassi_core::*;
use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::hint::black_box;

fn fusion_sweeps(c: &mut Criterion) {
    let (h, w, l) = (64usize, 64usize, 8usize);
    let z = benchmark_scene(h, w, l);
    let reference = synth::piecewise_scene(h, w, l, 99).0;
    let p_ref = dual_field(&reference);
    let params = FusionParams::new(0.5, 0.125, 30).unwrap();
    let mut group = c.benchmark_group("fusion");
    group.throughput(Throughput::Elements((h * w * l * params.max_iters) as u64));
    group.bench_function("fuse_64x64x8_k30", |b| {
        b.iter(|| black_box(fuse(&z, Some(&p_ref), &params, None).unwrap()))
    });
    group.finish();
}

fn admm_stage(c: &mut Criterion) {
    let (h, w, l, s) = (64usize, 64usize, 8usize, 1usize);
    let model = benchmark_system(h, w, l, s);
    let scene = benchmark_scene(h, w, l);
    let y = model.forward(&scene).unwrap();
    let params = AdmmParams {
        num_stages: 1,
        ..AdmmParams::default()
    };
    let opts = ReconstructOptions {
        reference: ReferenceSource::Fixed(&scene),
        ..ReconstructOptions::default()
    };
    let mut group = c.benchmark_group("admm");
    group.sample_size(10);
    group.bench_function("one_stage_64x64x8", |b| {
        b.iter(|| black_box(reconstruct(&model, &y, &params, &opts).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, fusion_sweeps, admm_stage);
criterion_main!(benches);
