use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qfolio_bench::{daily_factors, sample_series, two_asset_model};
use qfolio_core::estimation::fit_mle;
use qfolio_core::optimizer::{optimal_portfolio, GrowthObjective};
use qfolio_core::qalgebra::q_product_fold;
use qfolio_core::qgaussian::{c_dq, NormalizationMethod};
use qfolio_core::{DeConfig, Deformation, FitConfig, IntegratorSpec, Portfolio};

fn qalgebra(c: &mut Criterion) {
    let q = Deformation::new(1.5).unwrap();
    let mut group = c.benchmark_group("q_product_fold");
    for n in [100, 10_000] {
        let xs = daily_factors(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &xs, |b, xs| b.iter(|| q_product_fold(q, black_box(xs))));
    }
    group.finish();
}

fn normalization(c: &mut Criterion) {
    let q = Deformation::new(1.2).unwrap();
    c.bench_function("c_dq recursion d=4", |b| b.iter(|| c_dq(black_box(4), q, NormalizationMethod::Recursion)));
    c.bench_function("c_dq radial d=4", |b| b.iter(|| c_dq(black_box(4), q, NormalizationMethod::Radial)));
}

fn growth_rate(c: &mut Criterion) {
    let model = two_asset_model();
    let b = Portfolio::new(vec![0.4, 0.6]).unwrap();
    let mc = GrowthObjective::new(&model, &IntegratorSpec::monte_carlo(200_000, 1)).unwrap();
    c.bench_function("growth rate monte carlo 2e5", |bch| bch.iter(|| mc.evaluate(black_box(&b))));
    let cub = GrowthObjective::new(&model, &IntegratorSpec::cubature(1e-6, 1e-9)).unwrap();
    c.bench_function("growth rate cubature", |bch| bch.iter(|| cub.evaluate(black_box(&b))));
}

fn optimizers(c: &mut Criterion) {
    let model = two_asset_model();
    let mut group = c.benchmark_group("optimizers");
    group.sample_size(10);
    let spec = IntegratorSpec::monte_carlo(20_000, 2);
    let de = DeConfig { seed: 2, ..Default::default() };
    group.bench_function("optimal portfolio d=2", |b| b.iter(|| optimal_portfolio(&model, &spec, &de)));
    let data = sample_series(&model, 1000, 3);
    group.bench_function("fit d=2 n=1000", |b| b.iter(|| fit_mle(&data, &FitConfig::default())));
    group.finish();
}

criterion_group!(benches, qalgebra, normalization, growth_rate, optimizers);
criterion_main!(benches);
