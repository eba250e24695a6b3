//! Normalization constants of the univariate and multivariate q-Gaussian.
//!
//! `c_q` is the one-dimensional constant: `int exp_q(-x^2) dx = c_q`.
//! `c_dq` is the reciprocal of `int_{R^d} exp_q(-|z|^2) dz`, computed either by
//! marginalization recursion or by radial quadrature.
//!
//! The recursion integrates out one coordinate at a time. Integrating `z_d` out of
//! `exp_q(-|z|^2)` leaves `c_q * exp_{q_1}(-b |z'|^2)` with `q_1 = (q+1)/(3-q)`
//! and `b = (3-q)/2`; repeating gives
//!
//! ```text
//! int_{R^d} exp_q(-|z|^2) dz = prod_{k=0}^{d-1} c_{q_k} * prod_{k=0}^{d-2} ((3 - q_k)/2)^{-(d-1-k)/2}
//! ```
//!
//! with `q_n = (2q + n(1-q))/(2 + n(1-q))` consumed in the direction n = 0, 1, 2, ...

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, IntegratorSpec, Region};
use crate::qalgebra::{q_exp, Deformation};
use crate::special::{ln_gamma, ln_gamma_ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    #[default]
    Recursion,
    Radial,
}

/// `ln c_q`.
pub(crate) fn ln_c_q(q: Deformation) -> Result<f64> {
    let qv = q.q();
    if qv >= 3.0 {
        return Err(Error::NonNormalizable { d: 1, q: qv, bound: "q < 3".into() });
    }
    let half_ln_pi = 0.5 * PI.ln();
    if q.is_classical() {
        return Ok(half_ln_pi);
    }
    if qv < 1.0 {
        // 2 sqrt(pi) Γ(t) / ((3-q) sqrt(1-q) Γ(t + 1/2)),  t = 1/(1-q)
        let t = 1.0 / (1.0 - qv);
        Ok(std::f64::consts::LN_2 + half_ln_pi - ln_gamma_ratio(t, 0.5) - (3.0 - qv).ln() - 0.5 * (1.0 - qv).ln())
    } else {
        // sqrt(pi) Γ(s - 1/2) / (sqrt(q-1) Γ(s)),  s = 1/(q-1)
        let s = 1.0 / (qv - 1.0);
        Ok(half_ln_pi - ln_gamma_ratio(s - 0.5, 0.5) - 0.5 * (qv - 1.0).ln())
    }
}

/// One-dimensional normalization constant `c_q`, defined for `q < 3`.
pub fn c_q(q: Deformation) -> Result<f64> {
    if q.is_classical() {
        return Ok(PI.sqrt());
    }
    ln_c_q(q).map(f64::exp)
}

/// Entropic index of the marginal after integrating out `n` coordinates.
pub fn marginal_index(q: Deformation, n: usize) -> f64 {
    let qv = q.q();
    let n = n as f64;
    (2.0 * qv + n * (1.0 - qv)) / (2.0 + n * (1.0 - qv))
}

pub(crate) fn check_normalizable(d: usize, q: Deformation) -> Result<()> {
    let qv = q.q();
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if qv >= 3.0 {
        return Err(Error::NonNormalizable { d, q: qv, bound: "q < 3".into() });
    }
    if qv > 1.0 && !q.is_classical() && (d as f64) * (qv - 1.0) >= 2.0 {
        return Err(Error::NonNormalizable { d, q: qv, bound: format!("d < 2/(q-1) = {}", 2.0 / (qv - 1.0)) });
    }
    Ok(())
}

/// `ln c_dq` by the marginalization recursion.
pub(crate) fn ln_c_dq_recursion(d: usize, q: Deformation) -> Result<f64> {
    check_normalizable(d, q)?;
    if q.is_classical() {
        return Ok(-0.5 * d as f64 * PI.ln());
    }
    let mut ln_z = 0.0;
    for k in 0..d {
        let qk = Deformation::new(marginal_index(q, k))?;
        ln_z += ln_c_q(qk)?;
        if k + 1 < d {
            ln_z -= 0.5 * (d - 1 - k) as f64 * ((3.0 - qk.q()) / 2.0).ln();
        }
    }
    Ok(-ln_z)
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// `I_{q,d} = int_0^inf r^(d-1) exp_q(-r^2) dr` by adaptive quadrature.
pub fn radial_integral(d: usize, q: Deformation) -> Result<f64> {
    check_normalizable(d, q)?;
    let upper = if q.q() < 1.0 && !q.is_classical() { (1.0 / (1.0 - q.q())).sqrt() } else { f64::INFINITY };
    let region = Region::new(vec![(0.0, upper)])?;
    let spec = IntegratorSpec { max_evals: 2_000_000, ..IntegratorSpec::quadrature(1e-13, 1e-300) };
    let r = integrate(|x| x[0].powi(d as i32 - 1) * q_exp(q, -x[0] * x[0]), &region, &spec)?;
    Ok(r.value)
}

/// Normalization constant of the `d`-variate q-Gaussian with unit scales.
///
/// Divide by `prod sigma_i` for general scales. Requires `q < 3` and, for
/// q > 1, `d < 2/(q-1)`.
pub fn c_dq(d: usize, q: Deformation, method: NormalizationMethod) -> Result<f64> {
    match method {
        NormalizationMethod::Recursion => ln_c_dq_recursion(d, q).map(f64::exp),
        NormalizationMethod::Radial => Ok(1.0 / (unit_sphere_area(d) * radial_integral(d, q)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dq(q: f64) -> Deformation {
        Deformation::new(q).unwrap()
    }

    #[test]
    fn c_q_reference_values() {
        assert_eq!(c_q(dq(1.0)).unwrap(), PI.sqrt());
        // q = 2 is the Cauchy kernel 1/(1+x^2), whose integral is pi
        assert!((c_q(dq(2.0)).unwrap() - PI).abs() < 1e-13);
        // q = 0 gives 1 - x^2 on [-1, 1]: 4/3
        assert!((c_q(dq(0.0)).unwrap() - 4.0 / 3.0).abs() < 1e-13);
        for q in [1.0 - 1e-4, 1.0 + 1e-4] {
            assert!((c_q(dq(q)).unwrap() - PI.sqrt()).abs() < 1e-3);
        }
        assert!(c_q(dq(3.0)).is_err());
    }

    #[test]
    fn c_q_is_continuous_through_the_switch() {
        let inside = c_q(dq(1.0 + 0.5e-8)).unwrap();
        let outside = c_q(dq(1.0 + 2e-8)).unwrap();
        assert!((inside - outside).abs() < 1e-7);
    }

    #[test]
    fn recursion_matches_independent_radial_values() {
        // 1/(w_d I_{q,d}) by 30-digit radial quadrature (mpmath), frozen.
        let frozen = [
            (2, 1.2, 0.254_647_908_947_032_55),
            (3, 1.2, 0.115_999_259_742_723_6),
            (4, 1.2, 0.048_634_168_148_322_14),
            (2, 1.5, 0.159_154_943_091_895_34),
            (3, 1.5, 0.035_822_448_015_672_266),
            (3, 0.5, 0.369_270_364_048_813_04),
        ];
        for (d, q, expected) in frozen {
            let got = c_dq(d, dq(q), NormalizationMethod::Recursion).unwrap();
            assert!((got / expected - 1.0).abs() < 1e-12, "d={d} q={q}: {got}");
        }
    }

    #[test]
    fn one_dimension_reduces_to_c_q() {
        for q in [0.3, 1.0, 1.5, 2.5] {
            let a = c_dq(1, dq(q), NormalizationMethod::Recursion).unwrap();
            assert!((a * c_q(dq(q)).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((c_dq(2, dq(1.0), NormalizationMethod::Recursion).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn non_normalizable_names_the_bound() {
        match c_dq(4, dq(1.5), NormalizationMethod::Recursion) {
            Err(Error::NonNormalizable { bound, .. }) => assert!(bound.contains("2/(q-1)")),
            r => panic!("unexpected {r:?}"),
        }
        assert!(c_dq(2, dq(3.0), NormalizationMethod::Radial).is_err());
        assert!(c_dq(0, dq(1.2), NormalizationMethod::Radial).is_err());
    }

    #[test]
    fn sphere_area() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
