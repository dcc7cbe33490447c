use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use grfkit::metrics::{confusion, iou};
use grfkit::{average_merge, distance_transform, synthesize_field, FusionMode, GrfParams};
use grfkit_bench::{disc_mask, random_mask};

fn synthesis(c: &mut Criterion) {
    let mut group = c.benchmark_group("synthesize_field");
    group.sample_size(10);
    for (w, h) in [(256, 256), (640, 480)] {
        let params = GrfParams::new(76539635, 2, 0.37, w, h).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{w}x{h}")), &params, |b, p| {
            b.iter(|| synthesize_field(black_box(p)))
        });
    }
    group.finish();
}

fn edt(c: &mut Criterion) {
    let mask = random_mask(7, 640, 480, 0.02);
    c.bench_function("distance_transform/640x480", |b| b.iter(|| distance_transform(black_box(&mask))));
}

fn merge(c: &mut Criterion) {
    let masks: Vec<_> = (0..3).map(|k| disc_mask(640, 480, 300.0 + 10.0 * k as f64, 240.0, 120.0)).collect();
    let mut group = c.benchmark_group("average_merge");
    group.sample_size(10);
    for mode in [FusionMode::SdfMean, FusionMode::PixelMean] {
        group.bench_with_input(BenchmarkId::from_parameter(mode), &masks, |b, m| {
            b.iter(|| average_merge(black_box(m), mode).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let pred = disc_mask(640, 480, 320.0, 240.0, 100.0);
    let gt = disc_mask(640, 480, 330.0, 235.0, 105.0);
    c.bench_function("confusion+iou/640x480", |b| {
        b.iter(|| iou(&confusion(black_box(&pred), black_box(&gt)).unwrap()))
    });
}

criterion_group!(benches, synthesis, edt, merge, metrics);
criterion_main!(benches);
