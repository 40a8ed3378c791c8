//! Monte Carlo throughput: pair generation alone and the full desk-scale
//! detection pipeline.

use criterion::{criterion_group, criterion_main, Criterion};

use franson_core::{generate_pairs, simulate_scenario, ScenarioConfig};

fn bench_simulation(c: &mut Criterion) {
    let cfg = ScenarioConfig::default();

    c.bench_function("generate_pairs_1e5_cps_1s", |bench| {
        bench.iter(|| generate_pairs(&cfg.source, &cfg.franson, 1.0, 7).unwrap());
    });

    let mut quick = cfg.clone();
    quick.duration_s = 1.0;
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(20);
    group.bench_function("simulate_desk_1s", |bench| {
        bench.iter(|| simulate_scenario(&quick).unwrap());
    });
    group.finish();
}

criterion_group!(benches, bench_simulation);
criterion_main!(benches);
