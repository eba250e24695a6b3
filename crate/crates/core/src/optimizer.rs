//! Growth q-rate `W_q(b) = E[ln_q(b.X)]` and its maximization over the simplex.
//!
//! Price relatives are non-negative, so the model is used truncated to
//! `[0, inf)^d`: Monte Carlo redraws any sample with a negative coordinate and
//! quadrature integrates over the positive orthant, renormalized by its mass.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{differential_evolution, mean_and_standard_error, integrate, DeConfig, IntegrationMethod, IntegratorSpec, Region};
use crate::qalgebra::{q_exp, q_log_unchecked};
use crate::qgaussian::{MultivariateQGaussian, NdSampler};
use crate::rng;

/// Long-only, fully invested weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPortfolio", into = "RawPortfolio")]
pub struct Portfolio {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPortfolio {
    weights: Vec<f64>,
}

impl TryFrom<RawPortfolio> for Portfolio {
    type Error = Error;
    fn try_from(r: RawPortfolio) -> Result<Self> {
        Portfolio::new(r.weights)
    }
}

impl From<Portfolio> for RawPortfolio {
    fn from(p: Portfolio) -> Self {
        RawPortfolio { weights: p.weights }
    }
}

impl Portfolio {
    /// Weights must be non-negative and sum to 1 within 1e-10.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("portfolio needs at least one weight"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain(format!("portfolio weights must be non-negative, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("portfolio weights sum to {total}, not 1")));
        }
        Ok(Portfolio { weights })
    }

    pub fn uniform(d: usize) -> Self {
        Portfolio { weights: vec![1.0 / d as f64; d] }
    }

    /// `u / sum(u)` for `u` in `[0, 1]^d`; uniform when `sum(u) = 0`.
    pub fn from_box(u: &[f64]) -> Self {
        let total: f64 = u.iter().sum();
        if total > 0.0 {
            Portfolio { weights: u.iter().map(|v| v / total).collect() }
        } else {
            Portfolio::uniform(u.len())
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `b . x`, evaluated as `1 + b . (x - 1)` so a flat day gives exactly 1.
    #[inline]
    pub fn factor(&self, x: &[f64]) -> f64 {
        1.0 + self.weights.iter().zip(x).map(|(b, x)| b * (x - 1.0)).sum::<f64>()
    }

    /// Axis `i` of the result is axis `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Portfolio { weights: order.iter().map(|&i| self.weights[i]).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRateEstimate {
    /// q-nats per day.
    pub value: f64,
    /// Monte Carlo standard error; 0 for quadrature.
    pub std_error: f64,
    pub method: IntegratorSpec,
    /// Share of Monte Carlo draws redrawn for a negative coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_fraction: Option<f64>,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

const MAX_QUADRATURE_DIM: usize = 16;

/// Prepared `W_q(., model)`: a fixed Monte Carlo sample, or the quadrature setup.
#[derive(Debug, Clone)]
pub struct GrowthObjective {
    model: MultivariateQGaussian,
    spec: IntegratorSpec,
    sample: Vec<f64>,
    rejection_fraction: f64,
    orthant_mass: f64,
}

impl GrowthObjective {
    pub fn new(model: &MultivariateQGaussian, spec: &IntegratorSpec) -> Result<Self> {
        spec.validate()?;
        let d = model.dim();
        let mut objective = GrowthObjective {
            model: model.clone(),
            spec: spec.clone(),
            sample: Vec::new(),
            rejection_fraction: 0.0,
            orthant_mass: 1.0,
        };
        match spec.method {
            IntegrationMethod::MonteCarlo => {
                let (sample, rejected) = nonnegative_sample(model, spec.mc_samples, spec.seed)?;
                objective.sample = sample;
                objective.rejection_fraction = rejected as f64 / (rejected + spec.mc_samples as u64) as f64;
            }
            IntegrationMethod::AdaptiveQuadrature1d if d != 1 => {
                return Err(Error::DimensionMismatch { expected: 1, got: d });
            }
            _ if d > MAX_QUADRATURE_DIM => {
                return Err(Error::Unsupported(format!("quadrature growth rate supports d <= {MAX_QUADRATURE_DIM}")));
            }
            _ => {
                let r = objective.orthant_integral(|_| 1.0)?;
                if !(r.0 > 0.0) {
                    return Err(Error::domain("model puts no mass on the positive orthant"));
                }
                objective.orthant_mass = r.0;
            }
        }
        Ok(objective)
    }

    pub fn model(&self) -> &MultivariateQGaussian {
        &self.model
    }

    /// `int_{x >= 0} g(x) f(x) dx` in standardized coordinates.
    fn orthant_integral(&self, g: impl Fn(&[f64]) -> f64) -> Result<(f64, bool)> {
        let m = &self.model;
        let q = m.q();
        let bounds = m.mu().iter().zip(m.sigma()).map(|(mu, s)| (-mu / s, f64::INFINITY)).collect();
        let region = Region::new(bounds)?;
        let peak = m.peak_density() * m.sigma().iter().product::<f64>();
        let r = integrate(
            |z| {
                let mut buf = [0.0; MAX_QUADRATURE_DIM];
                let x = &mut buf[..z.len()];
                let mut r2 = 0.0;
                for (i, zi) in z.iter().enumerate() {
                    x[i] = (m.mu()[i] + m.sigma()[i] * zi).max(0.0);
                    r2 += zi * zi;
                }
                let w = q_exp(q, -r2);
                if w == 0.0 {
                    0.0
                } else {
                    peak * w * g(x)
                }
            },
            &region,
            &self.spec,
        )?;
        Ok((r.value, r.converged))
    }

    pub fn evaluate(&self, b: &Portfolio) -> Result<GrowthRateEstimate> {
        if b.dim() != self.model.dim() {
            return Err(Error::DimensionMismatch { expected: self.model.dim(), got: b.dim() });
        }
        let q = self.model.q();
        if self.spec.method == IntegrationMethod::MonteCarlo {
            let (mean, se) = mean_and_standard_error(
                self.sample.chunks_exact(b.dim()).map(|x| q_log_unchecked(q, b.factor(x))),
            );
            return Ok(GrowthRateEstimate {
                value: mean,
                std_error: se,
                method: self.spec.clone(),
                rejection_fraction: Some(self.rejection_fraction),
                converged: true,
            });
        }
        let (v, converged) = self.orthant_integral(|x| q_log_unchecked(q, b.factor(x)))?;
        Ok(GrowthRateEstimate {
            value: v / self.orthant_mass,
            std_error: 0.0,
            method: self.spec.clone(),
            rejection_fraction: None,
            converged,
        })
    }

    /// Point value only; NaN on error.
    pub fn value(&self, b: &Portfolio) -> f64 {
        self.evaluate(b).map_or(f64::NAN, |e| e.value)
    }
}

/// `n` draws (row-major, `n * d`) with every coordinate non-negative, and the
/// number of rejected draws.
pub fn nonnegative_sample(model: &MultivariateQGaussian, n: usize, seed: u64) -> Result<(Vec<f64>, u64)> {
    let sampler = NdSampler::new(model)?;
    let d = model.dim();
    let mut rng = rng::seeded(seed);
    let mut out = vec![0.0; n * d];
    let mut rejected = 0;
    for row in out.chunks_exact_mut(d) {
        rejected += sampler.draw_nonnegative_into(&mut rng, row);
    }
    Ok((out, rejected))
}

/// Growth q-rate of `b` under `model`.
pub fn growth_q_rate(b: &Portfolio, model: &MultivariateQGaussian, spec: &IntegratorSpec) -> Result<GrowthRateEstimate> {
    if b.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: b.dim() });
    }
    GrowthObjective::new(model, spec)?.evaluate(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPortfolio {
    pub portfolio: Portfolio,
    pub growth: GrowthRateEstimate,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Axis order sorting assets by `(mu, sigma)`, ties by index.
fn canonical_order(model: &MultivariateQGaussian) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.dim()).collect();
    order.sort_by(|&a, &b| {
        model.mu()[a]
            .total_cmp(&model.mu()[b])
            .then(model.sigma()[a].total_cmp(&model.sigma()[b]))
            .then(a.cmp(&b))
    });
    order
}

/// Growth-optimal portfolio: maximizes [`growth_q_rate`] over the simplex by
/// differential evolution on `[0, 1]^d` mapped through [`Portfolio::from_box`].
///
/// Assets are optimized in `(mu, sigma)` order and mapped back, so relabeling
/// the model relabels the result.
pub fn optimal_portfolio(model: &MultivariateQGaussian, spec: &IntegratorSpec, de: &DeConfig) -> Result<OptimalPortfolio> {
    let d = model.dim();
    let order = canonical_order(model);
    let canonical = model.permuted(&order)?;
    let objective = GrowthObjective::new(&canonical, spec)?;

    if d == 1 {
        let portfolio = Portfolio::uniform(1);
        let growth = objective.evaluate(&portfolio)?;
        return Ok(OptimalPortfolio { trace: vec![growth.value], portfolio, growth, converged: true });
    }

    let result = differential_evolution(|u| objective.value(&Portfolio::from_box(u)), &vec![(0.0, 1.0); d], de)?;
    let best = Portfolio::from_box(&result.argmax);
    let growth = objective.evaluate(&best)?;
    let mut weights = vec![0.0; d];
    for (k, &i) in order.iter().enumerate() {
        weights[i] = best.weights[k];
    }
    Ok(OptimalPortfolio {
        portfolio: Portfolio { weights },
        growth,
        trace: result.trace,
        converged: result.converged,
    })
}

/// `n` uniformly distributed simplex points (normalized exponentials).
pub fn random_simplex_points(d: usize, n: usize, seed: u64) -> Vec<Portfolio> {
    let mut rng = rng::seeded(seed);
    (0..n)
        .map(|_| {
            let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            Portfolio::from_box(&e)
        })
        .collect()
}
