//! Shared inputs for the kernel benchmarks.

use qfolio_core::data::PriceRelativeSeries;
use qfolio_core::qgaussian::NdSampler;
use qfolio_core::rng::seeded;
use qfolio_core::{Deformation, MultivariateQGaussian};

/// Two-asset market with daily-scale parameters.
pub fn two_asset_model() -> MultivariateQGaussian {
    MultivariateQGaussian::new(Deformation::new(1.5).unwrap(), vec![1.0005, 1.0], vec![0.03, 0.02]).unwrap()
}

/// `n` daily relatives near 1.
pub fn daily_factors(n: usize) -> Vec<f64> {
    (0..n).map(|i| 1.0 + 0.01 * ((i as f64) * 0.7).sin()).collect()
}

/// `n` positive draws from `model`.
pub fn sample_series(model: &MultivariateQGaussian, n: usize, seed: u64) -> PriceRelativeSeries {
    let sampler = NdSampler::new(model).unwrap();
    let mut rng = seeded(seed);
    let rows = (0..n)
        .map(|_| {
            let mut x = vec![0.0; model.dim()];
            sampler.draw_nonnegative_into(&mut rng, &mut x);
            x
        })
        .collect();
    let tickers = (0..model.dim()).map(|i| format!("A{i}")).collect();
    PriceRelativeSeries::undated(tickers, rows).unwrap()
}
