use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use guidance_bench::poisson_data;
use guidance_core::analysis::{fit_poisson, fit_poisson_robust};

fn fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("poisson");
    group.sample_size(20);
    for n in [10_000, 100_000] {
        let (y, design) = poisson_data(n, 7);
        group.bench_with_input(BenchmarkId::new("irls", n), &n, |b, _| b.iter(|| fit_poisson(&y, &design).unwrap()));
        group.bench_with_input(BenchmarkId::new("irls+hc0", n), &n, |b, _| {
            b.iter(|| fit_poisson_robust(&y, &design).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fit);
criterion_main!(benches);
