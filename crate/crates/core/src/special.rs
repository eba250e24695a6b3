//! Gamma-function helpers used by the normalization constants.

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `ln Γ(x + a) - ln Γ(x)` for `x > 0`, `x + a > 0`.
///
/// For large `x` the two log-gammas are huge and nearly equal, so the difference
/// is taken analytically from the Stirling series instead.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    if x.min(x + a) < 20.0 {
        return ln_gamma(x + a) - ln_gamma(x);
    }
    let y = x + a;
    let tail = |z: f64| {
        let z2 = z * z;
        1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
            - 1.0 / (1680.0 * z * z2 * z2 * z2)
    };
    (x - 0.5) * (a / x).ln_1p() + a * y.ln() - a + (tail(y) - tail(x))
}
