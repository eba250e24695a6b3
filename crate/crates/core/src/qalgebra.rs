//! q-deformed logarithm, exponential and product, plus Tsallis entropy.
//!
//! Powers `x^(1-q)` are always formed as `exp((1-q) ln x)` and the `-1` offsets
//! go through `expm1`/`ln_1p`, so results stay accurate as `q` approaches 1.
//! Inside `|q - 1| < Q_SWITCH` the ordinary functions are used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band around `q = 1` where the classical limits are used.
pub const Q_SWITCH: f64 = 1e-8;

/// Entropic index `q`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Deformation(f64);

impl Deformation {
    /// The undeformed index, `q = 1`.
    pub const CLASSICAL: Deformation = Deformation(1.0);

    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::domain(format!("q must be finite, got {q}")));
        }
        Ok(Deformation(q))
    }

    /// Index admitting a normalizable q-Gaussian (`q < 3`).
    pub fn normalizable(q: f64) -> Result<Self> {
        let d = Self::new(q)?;
        if q >= 3.0 {
            return Err(Error::NonNormalizable { d: 1, q, bound: "q < 3".into() });
        }
        Ok(d)
    }

    /// Index admitting a finite-variance q-Gaussian (`q < 5/3`).
    pub fn finite_variance(q: f64) -> Result<Self> {
        let d = Self::new(q)?;
        if q >= 5.0 / 3.0 {
            return Err(Error::domain(format!("finite variance requires q < 5/3, got {q}")));
        }
        Ok(d)
    }

    #[inline]
    pub fn q(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn one_minus_q(self) -> f64 {
        1.0 - self.0
    }

    /// True inside the band where the classical limit formulas are used.
    #[inline]
    pub fn is_classical(self) -> bool {
        (self.0 - 1.0).abs() < Q_SWITCH
    }
}

impl TryFrom<f64> for Deformation {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        Deformation::new(q)
    }
}

impl From<Deformation> for f64 {
    fn from(d: Deformation) -> f64 {
        d.0
    }
}

impl std::fmt::Display for Deformation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `x^e - 1`, exact near `e ln x = 0`. `x = 0` yields `-1` (e > 0) or `+inf` (e < 0).
#[inline]
pub(crate) fn pow_m1(x: f64, e: f64) -> f64 {
    (e * x.ln()).exp_m1()
}

/// `[1 + s]_+^(1/(1-q))` for a non-classical `q`.
#[inline]
fn bracket_power(q: Deformation, s: f64) -> f64 {
    let omq = q.one_minus_q();
    if s.is_nan() {
        return f64::NAN;
    }
    if s <= -1.0 {
        // [A]_+ = 0; 0^(1/(1-q)) is 0 for q < 1 and saturates for q > 1.
        return if omq > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (s.ln_1p() / omq).exp()
}

/// q-logarithm `(x^(1-q) - 1)/(1 - q)` for `x > 0`.
pub fn q_log(q: Deformation, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("q_log requires x > 0, got {x}")));
    }
    Ok(q_log_unchecked(q, x))
}

/// [`q_log`] without the domain check. At `x = 0` this returns the limit value
/// (`-1/(1-q)` for q < 1, `-inf` for q >= 1); negative `x` gives NaN.
#[inline]
pub fn q_log_unchecked(q: Deformation, x: f64) -> f64 {
    if q.is_classical() {
        return x.ln();
    }
    let omq = q.one_minus_q();
    pow_m1(x, omq) / omq
}

/// Result of a q-exponential with its cutoff and saturation flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QExp {
    pub value: f64,
    /// The bracket `1 + (1-q)x` was non-positive.
    pub cutoff: bool,
    /// The value is `+inf` (overflow, or the cutoff with q > 1).
    pub saturated: bool,
}

/// True when `1 + (1-q)x <= 0`, i.e. the `[.]_+` cutoff of `exp_q` fires.
#[inline]
pub fn cutoff_active(q: Deformation, x: f64) -> bool {
    !q.is_classical() && 1.0 + q.one_minus_q() * x <= 0.0
}

/// q-exponential `[1 + (1-q)x]_+^(1/(1-q))`.
#[inline]
pub fn q_exp(q: Deformation, x: f64) -> f64 {
    if q.is_classical() {
        return x.exp();
    }
    bracket_power(q, q.one_minus_q() * x)
}

/// [`q_exp`] reporting whether the cutoff fired or the value saturated.
pub fn q_exp_flagged(q: Deformation, x: f64) -> QExp {
    let value = q_exp(q, x);
    QExp { value, cutoff: cutoff_active(q, x), saturated: value == f64::INFINITY }
}

/// Natural log of `q_exp(q, x)`, without forming the exponential.
#[inline]
pub(crate) fn ln_q_exp(q: Deformation, x: f64) -> f64 {
    if q.is_classical() {
        return x;
    }
    let omq = q.one_minus_q();
    let s = omq * x;
    if s <= -1.0 {
        return if omq > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    s.ln_1p() / omq
}

/// q-product `[x^(1-q) + y^(1-q) - 1]_+^(1/(1-q))` of non-negative reals.
///
/// Negative inputs give NaN. With q > 1 a zero factor yields 0 (the limit of
/// the bracket formula) and a non-positive bracket saturates to `+inf`.
pub fn q_product(q: Deformation, x: f64, y: f64) -> f64 {
    if x < 0.0 || y < 0.0 {
        return f64::NAN;
    }
    if q.is_classical() {
        return x * y;
    }
    let omq = q.one_minus_q();
    bracket_power(q, pow_m1(x, omq) + pow_m1(y, omq))
}

/// n-ary q-product `[sum x_i^(1-q) - (n-1)]_+^(1/(1-q))`.
pub fn q_product_fold(q: Deformation, xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::domain("q_product_fold of an empty sequence"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::domain(format!("q_product_fold requires x >= 0, got {x}")));
    }
    if xs.len() == 1 {
        return Ok(xs[0]);
    }
    if q.is_classical() {
        return Ok(xs.iter().product());
    }
    let omq = q.one_minus_q();
    let s: f64 = xs.iter().map(|&x| pow_m1(x, omq)).sum();
    Ok(bracket_power(q, s))
}

/// Running q-products: entry `k` is `q_product_fold(q, &xs[..=k])`.
pub fn q_product_prefix(q: Deformation, xs: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::domain(format!("q_product_prefix requires x >= 0, got {x}")));
    }
    let mut out = Vec::with_capacity(xs.len());
    if q.is_classical() {
        let mut acc = 1.0;
        for &x in xs {
            acc *= x;
            out.push(acc);
        }
        return Ok(out);
    }
    let omq = q.one_minus_q();
    let mut s = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        s += pow_m1(x, omq);
        out.push(if k == 0 { x } else { bracket_power(q, s) });
    }
    Ok(out)
}

/// Probability vector: non-negative entries summing to one within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    p: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::domain("empty distribution"));
        }
        if p.iter().any(|&pi| !(pi >= 0.0) || !pi.is_finite()) {
            return Err(Error::domain("probabilities must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Joint distribution of two independent systems.
    pub fn product(&self, other: &DiscreteDistribution) -> DiscreteDistribution {
        let p = self
            .p
            .iter()
            .flat_map(|&a| other.p.iter().map(move |&b| a * b))
            .collect();
        DiscreteDistribution { p }
    }
}

/// Tsallis entropy `(1 - sum p_i^q)/(q - 1)` with `k_B = 1`; Shannon entropy at q = 1.
///
/// Evaluated as `-sum p_i (p_i^(q-1) - 1)/(q - 1)`, which equals the textbook form
/// for a normalized `p` but avoids cancellation near q = 1. Zero-probability
/// states contribute nothing.
pub fn tsallis_entropy(q: Deformation, p: &DiscreteDistribution) -> f64 {
    let support = p.p.iter().filter(|&&pi| pi > 0.0);
    if q.is_classical() {
        return -support.map(|&pi| pi * pi.ln()).sum::<f64>();
    }
    let qm1 = q.q() - 1.0;
    -support.map(|&pi| pi * pow_m1(pi, qm1)).sum::<f64>() / qm1
}
