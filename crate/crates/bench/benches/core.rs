//! Benchmarks of the hot paths: map iteration, linear-block powers,
//! exponent estimation, and chart construction/evaluation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lorenzlab_core::{
    lyapunov_spectrum, BelyakovBlock, HenonParams, ModelFamily, MuVector, RescalingChart,
    ReturnMapConfig,
};
use nalgebra::Vector3;

fn bench_map_step(c: &mut Criterion) {
    let p = HenonParams::new(0.0, 0.85, 0.7);
    c.bench_function("map_step_x1000", |b| {
        b.iter(|| {
            let mut x = Vector3::new(0.1, 0.1, 0.1);
            for _ in 0..1000 {
                x = p.step(black_box(x));
            }
            x
        })
    });
}

fn bench_block_powers(c: &mut Criterion) {
    let block = BelyakovBlock::new(0.7, -0.3).unwrap();
    c.bench_function("block_power_closed_form_k500", |b| {
        b.iter(|| block.a1_pow_closed_form(black_box(500)).unwrap())
    });
    c.bench_function("block_power_naive_k500", |b| {
        b.iter(|| block.a1_pow_naive(black_box(500)).unwrap())
    });
}

fn bench_lyapunov(c: &mut Criterion) {
    let p = HenonParams::new(0.0, 0.85, 0.7);
    c.bench_function("lyapunov_spectrum_n2000", |b| {
        b.iter(|| lyapunov_spectrum(black_box(p), Vector3::new(0.1, 0.1, 0.1), 2000).unwrap())
    });
}

fn bench_chart(c: &mut Criterion) {
    let base = ModelFamily::case_i();
    let mu = MuVector::new(1e-4, -0.05, 0.0);
    c.bench_function("chart_build_k16", |b| {
        b.iter(|| {
            let cfg = ReturnMapConfig::new(base.clone(), 16, None, black_box(mu)).unwrap();
            RescalingChart::build(&cfg).unwrap()
        })
    });
    let cfg = ReturnMapConfig::new(base.clone(), 16, None, mu).unwrap();
    let chart = RescalingChart::build(&cfg).unwrap();
    c.bench_function("chart_apply", |b| {
        b.iter(|| {
            RescalingChart::apply(&chart, black_box(Vector3::new(0.3, -0.2, 0.4))).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_map_step,
    bench_block_powers,
    bench_lyapunov,
    bench_chart
);
criterion_main!(benches);
