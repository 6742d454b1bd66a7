//! Kernel benchmarks for the processing pipeline. Run twice to compare the
//! two execution modes behind the `parallel` feature:
//!
//! ```text
//! cargo bench -p zipa-core                          # rayon fan-out
//! cargo bench -p zipa-core --no-default-features    # sequential fallback
//! ```
//!
//! Criterion writes each kernel's numbers under target/criterion/ by name,
//! so the two runs diff directly. `energy_matrix` and `map_indexed` are the
//! kernels the feature actually changes; the rest pin the cost of the other
//! pipeline stages at experiment scale.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use zipa_core::attack::{checkerboard_plan, synthesize, InjectionSpec};
use zipa_core::buffer::SampleBuffer;
use zipa_core::channel::{convolve, synth_context, synthetic_room_ir, ContextKind};
use zipa_core::exec::map_indexed;
use zipa_core::mitigation::deconvolve;
use zipa_core::protocol::synchronize;
use zipa_core::quantize::quantize;
use zipa_core::spectral::{energy_matrix, GridParams};

const RATE: u32 = 48_000;

fn speech(duration_s: f64, seed: u64) -> SampleBuffer {
    synth_context(&ContextKind::SpeechLike { rms: 0.1 }, duration_s, RATE, seed)
        .expect("context synthesis")
}

/// Per-frame spectral analysis — the batch stage that fans out over the
/// thread pool when `parallel` is on.
fn bench_energy_matrix(c: &mut Criterion) {
    let grid = GridParams::default_48k();
    let mut group = c.benchmark_group("energy_matrix");
    group.sample_size(10);
    for secs in [10u64, 60] {
        let buffer = speech(secs as f64, 7);
        group.bench_function(BenchmarkId::from_parameter(format!("{secs}s")), |b| {
            b.iter(|| energy_matrix(black_box(&buffer), &grid).expect("energy matrix"));
        });
    }
    group.finish();
}

/// The bare fan-out helper with a fixed per-item workload, isolating
/// dispatch overhead from any real kernel.
fn bench_dispatch(c: &mut Criterion) {
    c.bench_function("map_indexed/4096_items", |b| {
        b.iter(|| {
            map_indexed(black_box(4096), |i| {
                let x = i as f64 * 1e-3;
                (1..=256).map(|k| (x * k as f64).sin()).sum::<f64>()
            })
        });
    });
}

/// The remaining pipeline stages at the shapes the experiments use.
fn bench_pipeline_stages(c: &mut Criterion) {
    let grid = GridParams::default_48k();

    let plan = checkerboard_plan(64, 16).expect("plan");
    let spec = InjectionSpec::new(grid.clone(), plan, 0.5, 0.0).expect("spec");
    c.bench_function("synthesize/64x16", |b| {
        b.iter(|| synthesize(black_box(&spec), RATE).expect("synthesize"));
    });

    let minute = speech(60.0, 11);
    let matrix = energy_matrix(&minute, &grid).expect("energy matrix");
    c.bench_function("quantize/60s_grid", |b| {
        b.iter(|| quantize(black_box(&matrix)).expect("quantize"));
    });

    let snippet_len = 4 * RATE as usize;
    let max_lag = RATE as usize / 4;
    let planted = 1234usize;
    let snippet = SampleBuffer::new(
        minute.samples()[planted..planted + snippet_len].to_vec(),
        RATE,
    )
    .expect("snippet");
    let mut group = c.benchmark_group("synchronize");
    group.sample_size(20);
    group.bench_function("60s_local_4s_snippet", |b| {
        b.iter(|| synchronize(black_box(&minute), &snippet, max_lag).expect("synchronize"));
    });
    group.finish();

    let scene = speech(6.0, 13);
    let room = synthetic_room_ir(RATE, 2048, -8.0, 101).expect("room ir");
    c.bench_function("convolve/6s_2048_taps", |b| {
        b.iter(|| convolve(black_box(&scene), &room).expect("convolve"));
    });

    let wet = convolve(&scene, &room).expect("convolve");
    c.bench_function("deconvolve/6s_2048_taps", |b| {
        b.iter(|| deconvolve(black_box(&wet), &room, 1e-6).expect("deconvolve"));
    });
}

criterion_group!(
    benches,
    bench_energy_matrix,
    bench_dispatch,
    bench_pipeline_stages
);
criterion_main!(benches);
