//! Sampling for `1 < q < 3` through the Student-t representation.
//!
//! The standardized density `(1 + (q-1)|z|^2)^(-1/(q-1))` in `d` dimensions is a
//! multivariate t with `nu = 2/(q-1) - d` degrees of freedom, rescaled:
//! `z = Y / sqrt((q-1) W)` with `Y ~ N(0, I_d)` and `W ~ chi^2_nu`. All axes
//! share the same `W`, so draws are elliptical, not independent per axis.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::{MultivariateQGaussian, UnivariateQGaussian};
use crate::error::{Error, Result};
use crate::numerics::Proposal;
use crate::rng::RngStream;

fn check_samplable(q: f64, d: usize) -> Result<()> {
    if !(q > 1.0 && q < 3.0) {
        return Err(Error::Unsupported(format!("sampling requires 1 < q < 3, got q = {q}")));
    }
    if (d as f64) * (q - 1.0) >= 2.0 {
        return Err(Error::Unsupported(format!("sampling requires d < 2/(q-1), got d = {d}, q = {q}")));
    }
    Ok(())
}

/// Reusable sampler for one multivariate model.
#[derive(Debug, Clone)]
pub struct NdSampler {
    model: MultivariateQGaussian,
    chi2: ChiSquared<f64>,
    q_minus_one: f64,
}

impl NdSampler {
    pub fn new(model: &MultivariateQGaussian) -> Result<Self> {
        let q = model.q().q();
        check_samplable(q, model.dim())?;
        let nu = 2.0 / (q - 1.0) - model.dim() as f64;
        let chi2 = ChiSquared::new(nu).map_err(|e| Error::Unsupported(format!("chi-squared({nu}): {e}")))?;
        Ok(NdSampler { model: model.clone(), chi2, q_minus_one: q - 1.0 })
    }

    pub fn model(&self) -> &MultivariateQGaussian {
        &self.model
    }

    /// Writes one draw into `out` (length `d`).
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.model.dim());
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let w: f64 = self.chi2.sample(rng);
        let scale = 1.0 / (self.q_minus_one * w).sqrt();
        for ((v, m), s) in out.iter_mut().zip(self.model.mu()).zip(self.model.sigma()) {
            *v = m + s * scale * *v;
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.model.dim()];
        self.draw_into(rng, &mut out);
        out
    }

    /// Draw with every coordinate `>= 0`, redrawing as needed.
    /// Returns the number of rejected draws.
    pub fn draw_nonnegative_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> u64 {
        let mut rejected = 0;
        loop {
            self.draw_into(rng, out);
            if out.iter().all(|&v| v >= 0.0) {
                return rejected;
            }
            rejected += 1;
        }
    }
}

impl Proposal for NdSampler {
    fn draw(&self, rng: &mut RngStream) -> Vec<f64> {
        NdSampler::draw(self, rng)
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.model.ln_density_unchecked(x).exp()
    }
}

/// One draw from a univariate q-Gaussian (`1 < q < 3`).
pub fn sample_1d<R: Rng + ?Sized>(model: &UnivariateQGaussian, rng: &mut R) -> Result<f64> {
    let q = model.q().q();
    check_samplable(q, 1)?;
    // nu = (3-q)/(q-1)
    let nu = (3.0 - q) / (q - 1.0);
    let chi2 = ChiSquared::new(nu).map_err(|e| Error::Unsupported(e.to_string()))?;
    let y: f64 = rng.sample(StandardNormal);
    let w: f64 = chi2.sample(rng);
    Ok(model.mu() + model.sigma() * y / ((q - 1.0) * w).sqrt())
}

/// One draw from a multivariate q-Gaussian (`1 < q < 3`, `d < 2/(q-1)`).
pub fn sample_nd<R: Rng + ?Sized>(model: &MultivariateQGaussian, rng: &mut R) -> Result<Vec<f64>> {
    Ok(NdSampler::new(model)?.draw(rng))
}
