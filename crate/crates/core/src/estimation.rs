//! Maximum-likelihood fit of a multivariate q-Gaussian to daily price relatives.

use serde::{Deserialize, Serialize};

use crate::data::PriceRelativeSeries;
use crate::error::{Error, Result};
use crate::numerics::{differential_evolution, DeConfig};
use crate::qalgebra::Deformation;
use crate::qgaussian::{log_likelihood, MultivariateQGaussian};

/// Fewest observations accepted by [`fit_mle`].
pub const MIN_OBSERVATIONS: usize = 30;

/// Gap kept below the `d < 2/(q-1)` limit when capping `q`.
const Q_LIMIT_MARGIN: f64 = 1e-6;

/// Search box for the fit. `mu_bounds` and `sigma_bounds` hold either one pair
/// per axis or a single pair applied to every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub q_bounds: (f64, f64),
    pub mu_bounds: Vec<(f64, f64)>,
    pub sigma_bounds: Vec<(f64, f64)>,
    pub de: DeConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            q_bounds: (1.01, 2.2),
            mu_bounds: vec![(0.8, 1.2)],
            sigma_bounds: vec![(1e-4, 0.5)],
            de: DeConfig::default(),
        }
    }
}

/// Per-axis search box resolved for a given dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedBounds {
    pub q: (f64, f64),
    pub mu: Vec<(f64, f64)>,
    pub sigma: Vec<(f64, f64)>,
}

fn per_axis(name: &str, pairs: &[(f64, f64)], d: usize) -> Result<Vec<(f64, f64)>> {
    let out = match pairs.len() {
        1 => vec![pairs[0]; d],
        n if n == d => pairs.to_vec(),
        n => return Err(Error::domain(format!("{name}: expected 1 or {d} pairs, got {n}"))),
    };
    if let Some((lo, hi)) = out.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::domain(format!("{name}: invalid interval [{lo}, {hi}]")));
    }
    Ok(out)
}

impl FitConfig {
    /// Checks the box and caps the upper `q` bound below `1 + 2/d`.
    pub fn resolve(&self, d: usize) -> Result<ResolvedBounds> {
        self.de.validate()?;
        let (qlo, qhi) = self.q_bounds;
        if !(qlo > 1.0 && qhi < 3.0 && qlo <= qhi) {
            return Err(Error::domain(format!("q_bounds must lie within (1, 3), got [{qlo}, {qhi}]")));
        }
        let cap = 1.0 + 2.0 / d as f64 - Q_LIMIT_MARGIN;
        let qhi = qhi.min(cap);
        if qhi < qlo {
            return Err(Error::NonNormalizable {
                d,
                q: qlo,
                bound: format!("d < 2/(q-1), so q < {}", 1.0 + 2.0 / d as f64),
            });
        }
        let mu = per_axis("mu_bounds", &self.mu_bounds, d)?;
        let sigma = per_axis("sigma_bounds", &self.sigma_bounds, d)?;
        if sigma.iter().any(|(lo, _)| !(*lo > 0.0)) {
            return Err(Error::domain("sigma_bounds lower ends must be positive"));
        }
        Ok(ResolvedBounds { q: (qlo, qhi), mu, sigma })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: MultivariateQGaussian,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Best log-likelihood per optimizer generation.
    pub trace: Vec<f64>,
}

/// Parameter vector layout: `[q, mu_1..mu_d, ln sigma_1..ln sigma_d]`.
fn unpack(theta: &[f64], d: usize) -> Result<MultivariateQGaussian> {
    let q = Deformation::new(theta[0])?;
    let mu = theta[1..=d].to_vec();
    let sigma = theta[d + 1..].iter().map(|s| s.exp()).collect();
    MultivariateQGaussian::new(q, mu, sigma)
}

fn check_data(data: &PriceRelativeSeries) -> Result<()> {
    if data.len() < MIN_OBSERVATIONS {
        return Err(Error::Data(format!(
            "fit needs at least {MIN_OBSERVATIONS} observations, got {}",
            data.len()
        )));
    }
    for (i, ticker) in data.tickers().iter().enumerate() {
        let first = data.relatives()[0][i];
        if data.relatives().iter().all(|r| r[i] == first) {
            return Err(Error::DegenerateData { ticker: ticker.clone() });
        }
    }
    Ok(())
}

/// Jointly fits `(q, mu, sigma)` by maximizing the log-likelihood with
/// differential evolution; `sigma` is searched on a log scale.
pub fn fit_mle(data: &PriceRelativeSeries, config: &FitConfig) -> Result<FitResult> {
    check_data(data)?;
    let d = data.dim();
    let bounds = config.resolve(d)?;
    let rows = data.relatives();

    let mut boxes = Vec::with_capacity(2 * d + 1);
    boxes.push(bounds.q);
    boxes.extend(bounds.mu.iter().copied());
    boxes.extend(bounds.sigma.iter().map(|(lo, hi)| (lo.ln(), hi.ln())));

    let objective = |theta: &[f64]| match unpack(theta, d) {
        Ok(model) => log_likelihood(&model, rows).unwrap_or(f64::NEG_INFINITY),
        Err(_) => f64::NEG_INFINITY,
    };
    let result = differential_evolution(objective, &boxes, &config.de)?;
    let model = unpack(&result.argmax, d)?;
    Ok(FitResult {
        model,
        log_likelihood: result.value,
        converged: result.converged,
        trace: result.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qgaussian::{sample_1d, UnivariateQGaussian};
    use crate::rng;
    use rand_distr::{Distribution, Normal};

    fn series(cols: Vec<Vec<f64>>) -> PriceRelativeSeries {
        let n = cols[0].len();
        let tickers = (0..cols.len()).map(|i| format!("T{i}")).collect();
        let rows = (0..n).map(|t| cols.iter().map(|c| c[t]).collect()).collect();
        PriceRelativeSeries::undated(tickers, rows).unwrap()
    }

    fn q_sample(q: f64, mu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let m = UnivariateQGaussian::new(Deformation::new(q).unwrap(), mu, sigma).unwrap();
        let mut r = rng::seeded(seed);
        (0..n).map(|_| sample_1d(&m, &mut r).unwrap()).collect()
    }

    #[test]
    fn recovers_univariate_parameters() {
        let data = series(vec![q_sample(1.5, 1.0, 0.02, 5000, 42)]);
        let fit = fit_mle(&data, &FitConfig::default()).unwrap();
        let m = &fit.model;
        assert!((m.q().q() - 1.5).abs() < 0.1, "{m:?}");
        assert!((m.mu()[0] - 1.0).abs() < 0.002, "{m:?}");
        assert!((m.sigma()[0] / 0.02 - 1.0).abs() < 0.1, "{m:?}");
    }

    #[test]
    fn gaussian_data_gives_small_q() {
        let normal = Normal::new(1.0, 0.02).unwrap();
        let mut r = rng::seeded(8);
        let data = series(vec![(0..5000).map(|_| normal.sample(&mut r)).collect()]);
        let fit = fit_mle(&data, &FitConfig::default()).unwrap();
        assert!(fit.model.q().q() <= 1.15, "{:?}", fit.model);
    }

    #[test]
    fn beats_moment_matched_gaussian() {
        let x = q_sample(1.4, 1.0, 0.03, 500, 3);
        let data = series(vec![x.clone()]);
        let fit = fit_mle(&data, &FitConfig::default()).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let baseline = MultivariateQGaussian::new(Deformation::new(1.01).unwrap(), vec![mean], vec![(2.0 * var).sqrt()]).unwrap();
        let ll0 = log_likelihood(&baseline, data.relatives()).unwrap();
        assert!(fit.log_likelihood >= ll0 - 1e-6);
    }

    #[test]
    fn observation_order_is_irrelevant() {
        let x = q_sample(1.5, 1.0, 0.02, 200, 4);
        let mut rev = x.clone();
        rev.reverse();
        let a = fit_mle(&series(vec![x]), &FitConfig::default()).unwrap();
        let b = fit_mle(&series(vec![rev]), &FitConfig::default()).unwrap();
        assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-6);
        assert!((a.model.q().q() - b.model.q().q()).abs() < 1e-3);
    }

    #[test]
    fn scaling_an_axis_scales_sigma() {
        let x = q_sample(1.5, 1.0, 0.02, 1000, 6);
        let c = 1.1;
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = fit_mle(&series(vec![x]), &FitConfig::default()).unwrap().model;
        let b = fit_mle(&series(vec![scaled]), &FitConfig::default()).unwrap().model;
        assert!((a.q().q() - b.q().q()).abs() < 0.02);
        assert!((b.sigma()[0] / (c * a.sigma()[0]) - 1.0).abs() < 0.02);
        assert!((b.mu()[0] - c * a.mu()[0]).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        let x = q_sample(1.5, 1.0, 0.02, 100, 1);
        let flat = vec![1.0; 100];
        match fit_mle(&series(vec![x.clone(), flat]), &FitConfig::default()) {
            Err(Error::DegenerateData { ticker }) => assert_eq!(ticker, "T1"),
            r => panic!("{r:?}"),
        }
        assert!(matches!(fit_mle(&series(vec![x[..29].to_vec()]), &FitConfig::default()), Err(Error::Data(_))));
    }

    #[test]
    fn bounds_resolution() {
        let cfg = FitConfig::default();
        let r = cfg.resolve(4).unwrap();
        assert!(r.q.1 < 1.5 && r.q.1 > 1.49);
        assert_eq!(r.mu.len(), 4);
        assert_eq!(cfg.resolve(1).unwrap().q, (1.01, 2.2));
        let bad = FitConfig { q_bounds: (0.9, 2.0), ..FitConfig::default() };
        assert!(bad.resolve(1).is_err());
        let narrow = FitConfig { q_bounds: (1.8, 2.0), ..FitConfig::default() };
        assert!(matches!(narrow.resolve(4), Err(Error::NonNormalizable { .. })));
        let wrong = FitConfig { mu_bounds: vec![(0.9, 1.1); 3], ..FitConfig::default() };
        assert!(wrong.resolve(2).is_err());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<FitConfig>(&json).unwrap(), cfg);
    }
}
