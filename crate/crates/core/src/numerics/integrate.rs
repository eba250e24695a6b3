use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cubature::adaptive_genz_malik;
use super::quadrature::adaptive_gk;
use crate::error::{Error, Result};
use crate::rng::{self, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMethod {
    AdaptiveQuadrature1d,
    CubatureNd,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: IntegrationMethod,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            method: IntegrationMethod::MonteCarlo,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_evals: 5_000_000,
            mc_samples: 200_000,
            seed: 0,
        }
    }
}

impl IntegratorSpec {
    pub fn quadrature(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorSpec { method: IntegrationMethod::AdaptiveQuadrature1d, rel_tol, abs_tol, ..Default::default() }
    }

    pub fn cubature(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorSpec { method: IntegrationMethod::CubatureNd, rel_tol, abs_tol, ..Default::default() }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        IntegratorSpec { method: IntegrationMethod::MonteCarlo, mc_samples: samples, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::domain("integration tolerances must be positive"));
        }
        if self.max_evals == 0 {
            return Err(Error::domain("max_evals must be positive"));
        }
        if self.method == IntegrationMethod::MonteCarlo && self.mc_samples < 1000 {
            return Err(Error::domain("monte_carlo requires mc_samples >= 1000"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    /// False when the requested tolerance was not met within `max_evals`.
    pub converged: bool,
    pub evaluations: usize,
}

/// Integration region: one `(lo, hi)` pair per axis, either end may be infinite.
///
/// Axes with an infinite end are integrated in `u` with `x = t + t^3`,
/// `t = tan(pi u / 2)`, Jacobian `(1 + 3t^2) pi/2 (1 + t^2)`. The cubic term keeps
/// the pulled-back integrand bounded for power-law tails down to `|x|^(-4/3)`.
/// Callers should standardize coordinates so the mass sits near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::domain("region must have at least one axis"));
        }
        for &(lo, hi) in &bounds {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::domain(format!("invalid axis bounds [{lo}, {hi}]")));
            }
        }
        Ok(Region { bounds })
    }

    pub fn full_space(d: usize) -> Self {
        Region { bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); d] }
    }

    pub fn unit_box(d: usize) -> Self {
        Region { bounds: vec![(0.0, 1.0); d] }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn mapped(&self) -> Vec<Axis> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                if lo.is_finite() && hi.is_finite() {
                    Axis::Finite(lo, hi)
                } else {
                    Axis::Tangent(inverse_cubic(lo).atan() / FRAC_PI_2, inverse_cubic(hi).atan() / FRAC_PI_2)
                }
            })
            .collect()
    }
}

/// Real root of `t^3 + t = x`.
fn inverse_cubic(x: f64) -> f64 {
    if x.is_infinite() || x == 0.0 {
        return x;
    }
    let a = x.abs();
    let r = (0.25 * a * a + 1.0 / 27.0).sqrt();
    let p = 0.5 * a + r;
    let mut t = p.cbrt() - (1.0 / 27.0 / p).cbrt();
    for _ in 0..2 {
        t -= (t * t * t + t - a) / (3.0 * t * t + 1.0);
    }
    t.copysign(x)
}

#[derive(Debug, Clone, Copy)]
enum Axis {
    Finite(f64, f64),
    Tangent(f64, f64),
}

impl Axis {
    fn u_range(self) -> (f64, f64) {
        match self {
            Axis::Finite(a, b) | Axis::Tangent(a, b) => (a, b),
        }
    }

    /// Maps `u` to `(x, dx/du)`.
    #[inline]
    fn map(self, u: f64) -> (f64, f64) {
        match self {
            Axis::Finite(..) => (u, 1.0),
            Axis::Tangent(..) => {
                let t = (FRAC_PI_2 * u).tan();
                let t2 = t * t;
                (t + t2 * t, (1.0 + 3.0 * t2) * FRAC_PI_2 * (1.0 + t2))
            }
        }
    }
}

/// `f` pulled back to the `u`-box. Points mapping to infinity contribute zero.
fn pulled_back<'a, F: Fn(&[f64]) -> f64>(f: &'a F, axes: &'a [Axis]) -> impl FnMut(&[f64]) -> f64 + 'a {
    let mut x = vec![0.0; axes.len()];
    move |u: &[f64]| {
        let mut jac = 1.0;
        for ((xi, &ui), ax) in x.iter_mut().zip(u).zip(axes) {
            let (v, j) = ax.map(ui);
            if !v.is_finite() {
                return 0.0;
            }
            *xi = v;
            jac *= j;
        }
        let fx = f(&x);
        if fx == 0.0 {
            0.0
        } else {
            fx * jac
        }
    }
}

/// Integrates `f` over `region` with the method in `spec`.
pub fn integrate<F>(f: F, region: &Region, spec: &IntegratorSpec) -> Result<IntegrationResult>
where
    F: Fn(&[f64]) -> f64,
{
    spec.validate()?;
    let axes = region.mapped();
    let (lo, hi): (Vec<f64>, Vec<f64>) = axes.iter().map(|a| a.u_range()).unzip();
    let d = axes.len();
    let mut g = pulled_back(&f, &axes);

    let result = match spec.method {
        IntegrationMethod::AdaptiveQuadrature1d if d != 1 => {
            return Err(Error::DimensionMismatch { expected: 1, got: d });
        }
        IntegrationMethod::AdaptiveQuadrature1d | IntegrationMethod::CubatureNd if d == 1 => {
            let mut u = [0.0];
            adaptive_gk(
                |t| {
                    u[0] = t;
                    g(&u)
                },
                lo[0],
                hi[0],
                spec.abs_tol,
                spec.rel_tol,
                spec.max_evals,
            )
        }
        IntegrationMethod::AdaptiveQuadrature1d | IntegrationMethod::CubatureNd => {
            adaptive_genz_malik(g, &lo, &hi, spec.abs_tol, spec.rel_tol, spec.max_evals)
        }
        IntegrationMethod::MonteCarlo => {
            let mut rng = rng::seeded(spec.seed);
            let volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let mut u = vec![0.0; d];
            let samples = (0..spec.mc_samples).map(|_| {
                for ((ui, a), b) in u.iter_mut().zip(&lo).zip(&hi) {
                    *ui = a + (b - a) * rng.random::<f64>();
                }
                g(&u)
            });
            let (mean, se) = mean_and_standard_error(samples);
            finish_mc(volume * mean, volume * se, spec)
        }
    };
    Ok(result)
}

/// Draws used for importance sampling.
pub trait Proposal {
    fn draw(&self, rng: &mut RngStream) -> Vec<f64>;
    fn density(&self, x: &[f64]) -> f64;
}

/// Monte Carlo estimate of `int f` by importance sampling from `proposal`:
/// the average of `f(X)/p(X)` over `spec.mc_samples` draws.
pub fn integrate_importance<F, P>(f: F, proposal: &P, spec: &IntegratorSpec) -> Result<IntegrationResult>
where
    F: Fn(&[f64]) -> f64,
    P: Proposal + ?Sized,
{
    spec.validate()?;
    if spec.method != IntegrationMethod::MonteCarlo {
        return Err(Error::domain("importance sampling requires the monte_carlo method"));
    }
    let mut rng = rng::seeded(spec.seed);
    let samples = (0..spec.mc_samples).map(|_| {
        let x = proposal.draw(&mut rng);
        let p = proposal.density(&x);
        if p > 0.0 {
            f(&x) / p
        } else {
            0.0
        }
    });
    let (mean, se) = mean_and_standard_error(samples);
    Ok(finish_mc(mean, se, spec))
}

fn finish_mc(value: f64, error: f64, spec: &IntegratorSpec) -> IntegrationResult {
    IntegrationResult {
        value,
        error_estimate: error,
        converged: error <= spec.abs_tol.max(spec.rel_tol * value.abs()),
        evaluations: spec.mc_samples,
    }
}

/// Welford mean and the standard error of the mean.
pub(crate) fn mean_and_standard_error(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut n = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in xs {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    if n < 2.0 {
        return (mean, f64::INFINITY);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}
