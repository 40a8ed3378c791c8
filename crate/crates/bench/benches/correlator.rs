//! Timestamp correlation and histogram analysis throughput.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use franson_core::{build_histogram, cross_correlate, fit_gaussian};

/// Uniform sorted timestamps over one second, integer picoseconds.
fn sorted_times(n: usize, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let mut t: Vec<i64> = (0..n).map(|_| rng.random_range(0..1_000_000_000_000i64)).collect();
    t.sort_unstable();
    t
}

fn bench_correlate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("cross_correlate");
    for n in [10_000usize, 100_000, 1_000_000] {
        let a = sorted_times(n, &mut rng);
        let b = sorted_times(n, &mut rng);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| cross_correlate(&a, &b, 2_000).unwrap());
        });
    }
    group.finish();
}

fn bench_histogram_and_fit(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // A realistic delay set: a 30 ps-wide peak over a flat accidental floor.
    let mut diffs: Vec<i64> = (0..200_000)
        .map(|i| {
            if i % 10 == 0 {
                rng.random_range(-2_000..=2_000)
            } else {
                let (u1, u2): (f64, f64) = (rng.random(), rng.random());
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                (30.0 * z).round() as i64
            }
        })
        .collect();
    diffs.sort_unstable();

    c.bench_function("build_histogram_200k", |bench| {
        bench.iter(|| build_histogram(&diffs, -2_000, 2_000, 2).unwrap());
    });

    let hist = build_histogram(&diffs, -2_000, 2_000, 2).unwrap();
    c.bench_function("fit_gaussian_2000_bins", |bench| {
        bench.iter(|| fit_gaussian(&hist).unwrap());
    });
}

criterion_group!(benches, bench_correlate, bench_histogram_and_fit);
criterion_main!(benches);
