use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hybridloc_core::channel::realize_channel;
use hybridloc_core::imu::initial_state_from_truth;
use hybridloc_core::*;

fn min_max_bench(c: &mut Criterion) {
    let ranges: Vec<(Anchor, f64)> = ScenarioSpec::replication()
        .anchors
        .into_iter()
        .map(|a| (a, a.distance_to(6.0, 1.0) + 0.3))
        .collect();
    c.bench_function("min_max/10_anchors", |b| b.iter(|| min_max(black_box(&ranges))));
}

fn channel_bench(c: &mut Criterion) {
    let params = ChannelParams::default();
    let mut seed = 0u64;
    c.bench_function("channel/realize_nlos", |b| {
        b.iter(|| {
            seed += 1;
            realize_channel(black_box(8.0), false, &params, seed)
        })
    });
}

fn pipeline_bench(c: &mut Criterion) {
    let spec = ScenarioSpec::replication();
    let truth = spec.generate_path().unwrap();
    let data = spec.simulate(&truth, 1).unwrap();
    let init = initial_state_from_truth(&truth).unwrap();
    let gain = Estimator::SteadyState(FilterGain::uniform(0.01).unwrap());

    c.bench_function("dead_reckon/replication", |b| {
        b.iter(|| dead_reckon(&init, black_box(&data.imu)))
    });
    c.bench_function("run_fusion/steady_state", |b| {
        b.iter(|| run_fusion(&init, black_box(&data.imu), &data.ranges, &spec.anchors, &gain, 0.1))
    });
    c.bench_function("scenario/simulate_run", |b| {
        b.iter(|| spec.simulate(&truth, black_box(2)))
    });
}

criterion_group!(benches, min_max_bench, channel_bench, pipeline_bench);
criterion_main!(benches);
