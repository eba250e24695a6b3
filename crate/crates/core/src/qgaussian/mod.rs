//! Univariate and multivariate (diagonal-scale, elliptical) q-Gaussian densities.
//!
//! Densities use `exp_q(-(x - mu)^2 / sigma^2)` with no factor 2, so `sigma` is a
//! scale, not the standard deviation. At q = 1 the variance is `sigma^2 / 2`;
//! for `q < 5/3` it is `sigma^2 / (5 - 3q)` per axis in one dimension.

mod normalization;
mod sampling;

pub use normalization::{c_dq, c_q, marginal_index, radial_integral, unit_sphere_area, NormalizationMethod};
pub use sampling::{sample_1d, sample_nd, NdSampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qalgebra::{ln_q_exp, q_exp, Deformation};
use normalization::{ln_c_dq_recursion, ln_c_q};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUnivariate")]
pub struct UnivariateQGaussian {
    q: Deformation,
    mu: f64,
    sigma: f64,
}

#[derive(Deserialize)]
struct RawUnivariate {
    q: Deformation,
    mu: f64,
    sigma: f64,
}

impl TryFrom<RawUnivariate> for UnivariateQGaussian {
    type Error = Error;
    fn try_from(r: RawUnivariate) -> Result<Self> {
        UnivariateQGaussian::new(r.q, r.mu, r.sigma)
    }
}

impl UnivariateQGaussian {
    pub fn new(q: Deformation, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::domain("mu must be finite"));
        }
        if q.q() >= 3.0 {
            return Err(Error::NonNormalizable { d: 1, q: q.q(), bound: "q < 3".into() });
        }
        Ok(UnivariateQGaussian { q, mu, sigma })
    }

    pub fn q(&self) -> Deformation {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `exp_q(-(x-mu)^2/sigma^2) / (c_q sigma)`.
pub fn density_1d(model: &UnivariateQGaussian, x: f64) -> f64 {
    let z = (x - model.mu) / model.sigma;
    let c = ln_c_q(model.q).expect("validated at construction").exp();
    q_exp(model.q, -z * z) / (c * model.sigma)
}

/// Multivariate q-Gaussian with per-axis location and scale:
/// `C_{d,q} / prod(sigma) * exp_q(-sum (x_i - mu_i)^2 / sigma_i^2)`.
///
/// Construction requires the density to be normalizable (`q < 3`, and
/// `d < 2/(q-1)` when q > 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMultivariate", into = "RawMultivariate")]
pub struct MultivariateQGaussian {
    q: Deformation,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    ln_peak: f64,
}

/// Persisted form: `{q, mu[], sigma[], d}`.
#[derive(Serialize, Deserialize)]
struct RawMultivariate {
    q: Deformation,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    d: usize,
}

impl TryFrom<RawMultivariate> for MultivariateQGaussian {
    type Error = Error;
    fn try_from(r: RawMultivariate) -> Result<Self> {
        if r.d != r.mu.len() {
            return Err(Error::DimensionMismatch { expected: r.d, got: r.mu.len() });
        }
        MultivariateQGaussian::new(r.q, r.mu, r.sigma)
    }
}

impl From<MultivariateQGaussian> for RawMultivariate {
    fn from(m: MultivariateQGaussian) -> Self {
        let d = m.mu.len();
        RawMultivariate { q: m.q, mu: m.mu, sigma: m.sigma, d }
    }
}

impl MultivariateQGaussian {
    pub fn new(q: Deformation, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if sigma.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.len() });
        }
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {s}")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("mu must be finite"));
        }
        let ln_peak = ln_c_dq_recursion(d, q)? - sigma.iter().map(|s| s.ln()).sum::<f64>();
        Ok(MultivariateQGaussian { q, mu, sigma, ln_peak })
    }

    pub fn q(&self) -> Deformation {
        self.q
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Density at `x = mu`.
    pub fn peak_density(&self) -> f64 {
        self.ln_peak.exp()
    }

    /// Same model with axes reordered: axis `i` of the result is axis `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mu = order.iter().map(|&i| self.mu[i]).collect();
        let sigma = order.iter().map(|&i| self.sigma[i]).collect();
        MultivariateQGaussian::new(self.q, mu, sigma)
    }

    /// `sum_i ((x_i - mu_i)/sigma_i)^2`
    #[inline]
    pub fn standardized_norm_sq(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((x, m), s)| {
                let z = (x - m) / s;
                z * z
            })
            .sum()
    }

    /// `ln density_nd(x)`; `-inf` outside the support (q < 1). No dimension check.
    #[inline]
    pub(crate) fn ln_density_unchecked(&self, x: &[f64]) -> f64 {
        self.ln_peak + ln_q_exp(self.q, -self.standardized_norm_sq(x))
    }

    pub fn to_univariate(&self) -> Option<UnivariateQGaussian> {
        (self.dim() == 1).then(|| UnivariateQGaussian { q: self.q, mu: self.mu[0], sigma: self.sigma[0] })
    }
}

fn check_dim(model: &MultivariateQGaussian, got: usize) -> Result<()> {
    if got != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got });
    }
    Ok(())
}

pub fn density_nd(model: &MultivariateQGaussian, x: &[f64]) -> Result<f64> {
    check_dim(model, x.len())?;
    Ok(model.ln_density_unchecked(x).exp())
}

/// Sum of log-densities over `data`; `-inf` if any point has zero density.
pub fn log_likelihood<R: AsRef<[f64]>>(model: &MultivariateQGaussian, data: &[R]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::domain("log_likelihood of empty data"));
    }
    let mut total = 0.0;
    for row in data {
        let x = row.as_ref();
        check_dim(model, x.len())?;
        total += model.ln_density_unchecked(x);
    }
    Ok(total)
}
