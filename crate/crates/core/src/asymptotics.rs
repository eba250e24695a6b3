//! Simulation checks of the long-run behaviour of the growth-optimal q-portfolio.
//!
//! Markets are i.i.d. draws from the model truncated to non-negative relatives.
//! Path `p` uses random substream `p` of the run seed, so results do not depend
//! on the number of worker threads.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{IntegrationMethod, IntegratorSpec};
use crate::optimizer::{growth_q_rate, Portfolio};
use crate::qalgebra::{ln_q_exp, q_exp, q_log_unchecked, q_product_fold, Deformation};
use crate::qgaussian::{MultivariateQGaussian, NdSampler};
use crate::rng;

/// Mutable state of a causal strategy on one path.
pub trait StrategyState: Send {
    /// Weights for the coming day.
    fn weights(&mut self) -> &Portfolio;
    /// Reveals the day's price relatives.
    fn observe(&mut self, x: &[f64]);
}

/// A portfolio rule whose day-`i` weights depend only on days before `i`.
pub trait CausalStrategy: Send + Sync {
    fn name(&self) -> String;
    fn start(&self) -> Box<dyn StrategyState>;
}

/// Invests `initial` on day one and never rebalances.
#[derive(Debug, Clone)]
pub struct BuyAndHold {
    pub initial: Portfolio,
}

struct BuyAndHoldState {
    holdings: Vec<f64>,
    current: Portfolio,
}

impl StrategyState for BuyAndHoldState {
    fn weights(&mut self) -> &Portfolio {
        &self.current
    }

    fn observe(&mut self, x: &[f64]) {
        for (h, xi) in self.holdings.iter_mut().zip(x) {
            *h *= xi;
        }
        let total: f64 = self.holdings.iter().sum();
        if total > 0.0 {
            for h in self.holdings.iter_mut() {
                *h /= total;
            }
            self.current = Portfolio::from_box(&self.holdings);
        }
    }
}

impl CausalStrategy for BuyAndHold {
    fn name(&self) -> String {
        "buy_and_hold".into()
    }

    fn start(&self) -> Box<dyn StrategyState> {
        Box::new(BuyAndHoldState { holdings: self.initial.weights().to_vec(), current: self.initial.clone() })
    }
}

#[derive(Clone)]
pub enum Competitor {
    Fixed(Portfolio),
    Causal(Arc<dyn CausalStrategy>),
}

impl fmt::Debug for Competitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Competitor::Fixed(p) => f.debug_tuple("Fixed").field(p).finish(),
            Competitor::Causal(s) => f.debug_tuple("Causal").field(&s.name()).finish(),
        }
    }
}

struct FixedState(Portfolio);

impl StrategyState for FixedState {
    fn weights(&mut self) -> &Portfolio {
        &self.0
    }

    fn observe(&mut self, _: &[f64]) {}
}

impl Competitor {
    fn start(&self) -> Box<dyn StrategyState> {
        match self {
            Competitor::Fixed(p) => Box::new(FixedState(p.clone())),
            Competitor::Causal(s) => s.start(),
        }
    }

    fn dim_matches(&self, d: usize) -> bool {
        match self {
            Competitor::Fixed(p) => p.dim() == d,
            Competitor::Causal(_) => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub model: MultivariateQGaussian,
    pub b_star: Portfolio,
    pub competitor: Competitor,
    /// Days per path.
    pub horizon: usize,
    pub paths: usize,
    pub seed: u64,
}

impl SimulationRun {
    fn validate(&self) -> Result<NdSampler> {
        if self.horizon == 0 || self.paths == 0 {
            return Err(Error::domain("horizon and paths must be at least 1"));
        }
        let d = self.model.dim();
        if self.b_star.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: self.b_star.dim() });
        }
        if !self.competitor.dim_matches(d) {
            return Err(Error::domain("competitor dimension does not match the model"));
        }
        NdSampler::new(&self.model)
    }
}

/// Draws `n` non-negative relatives for path `path`, calling `f(t, x_t)`.
fn walk_path(sampler: &NdSampler, seed: u64, path: usize, n: usize, mut f: impl FnMut(usize, &[f64])) {
    let mut rng = rng::substream(seed, path as u64);
    let mut x = vec![0.0; sampler.model().dim()];
    for t in 0..n {
        sampler.draw_nonnegative_into(&mut rng, &mut x);
        f(t, &x);
    }
}

/// `paths x n` i.i.d. non-negative draws from `model` (each a `d`-vector).
pub fn simulate_market(model: &MultivariateQGaussian, n: usize, paths: usize, seed: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    let sampler = NdSampler::new(model)?;
    Ok((0..paths)
        .into_par_iter()
        .map(|p| {
            let mut out = Vec::with_capacity(n);
            walk_path(&sampler, seed, p, n, |_, x| out.push(x.to_vec()));
            out
        })
        .collect())
}

/// Growth q-rate of `b` by tight deterministic quadrature.
pub fn reference_rate(model: &MultivariateQGaussian, b: &Portfolio) -> Result<f64> {
    let method = if model.dim() == 1 { IntegrationMethod::AdaptiveQuadrature1d } else { IntegrationMethod::CubatureNd };
    let spec = IntegratorSpec { method, rel_tol: 1e-8, abs_tol: 1e-10, max_evals: 20_000_000, ..IntegratorSpec::default() };
    Ok(growth_q_rate(b, model, &spec)?.value)
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// One row of a simulation report in `check,n,statistic,value,bound` form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub check: &'static str,
    pub n: usize,
    pub statistic: String,
    pub value: f64,
    pub bound: Option<f64>,
}

fn row(check: &'static str, n: usize, statistic: impl Into<String>, value: f64, bound: Option<f64>) -> ReportRow {
    ReportRow { check, n, statistic: statistic.into(), value, bound }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnCheckpoint {
    pub n: usize,
    /// Path mean of `(1/n) ln_q S_n`.
    pub mean_rate: f64,
    pub std_error: f64,
    pub mean_abs_deviation: f64,
    /// 90th minus 10th percentile of the per-path rate.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnReport {
    pub w_star: f64,
    pub checkpoints: Vec<LlnCheckpoint>,
    /// Largest relative gap between `exp_q(n * rate)` and the q-product of the factors.
    pub identity_max_rel_error: f64,
    /// `|mean_rate - w_star| <= 3 * std_error` at the last checkpoint.
    pub passed: bool,
    pub spread_shrinks: bool,
}

impl LlnReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = vec![row("lln", 0, "w_star", self.w_star, None)];
        for c in &self.checkpoints {
            out.push(row("lln", c.n, "mean_rate", c.mean_rate, None));
            out.push(row("lln", c.n, "abs_error", (c.mean_rate - self.w_star).abs(), Some(3.0 * c.std_error)));
            out.push(row("lln", c.n, "mean_abs_deviation", c.mean_abs_deviation, None));
            out.push(row("lln", c.n, "spread_p90_p10", c.spread, None));
        }
        let n = self.checkpoints.last().map_or(0, |c| c.n);
        out.push(row("lln", n, "identity_max_rel_error", self.identity_max_rel_error, Some(1e-9)));
        out
    }
}

/// Per-path `(1/n) ln_q S*_n` at each checkpoint against `W*_q`.
///
/// Checkpoints beyond the run horizon are dropped; the horizon itself is always
/// included.
pub fn check_lln(run: &SimulationRun, checkpoints: &[usize]) -> Result<LlnReport> {
    let sampler = run.validate()?;
    let q = run.model.q();
    let w_star = reference_rate(&run.model, &run.b_star)?;
    let mut cps: Vec<usize> = checkpoints.iter().copied().filter(|&n| n >= 1 && n < run.horizon).collect();
    cps.push(run.horizon);
    cps.sort_unstable();
    cps.dedup();

    let per_path: Vec<(Vec<f64>, f64)> = (0..run.paths)
        .into_par_iter()
        .map(|p| {
            let mut rates = Vec::with_capacity(cps.len());
            let mut factors = Vec::with_capacity(run.horizon);
            let mut sum = 0.0;
            let mut next = 0;
            walk_path(&sampler, run.seed, p, run.horizon, |t, x| {
                let f = run.b_star.factor(x);
                factors.push(f);
                sum += q_log_unchecked(q, f);
                if t + 1 == cps[next] {
                    rates.push(sum / (t + 1) as f64);
                    next = (next + 1).min(cps.len() - 1);
                }
            });
            let fold = q_product_fold(q, &factors).unwrap_or(f64::NAN);
            let closed = q_exp(q, sum);
            let err = if fold.is_finite() && fold > 0.0 { (closed - fold).abs() / fold } else { 0.0 };
            (rates, err)
        })
        .collect();

    let mut reports = Vec::with_capacity(cps.len());
    for (k, &n) in cps.iter().enumerate() {
        let mut rates: Vec<f64> = per_path.iter().map(|(r, _)| r[k]).collect();
        let (mean_rate, std_error) = mean_se(&rates);
        let mean_abs_deviation = rates.iter().map(|r| (r - w_star).abs()).sum::<f64>() / rates.len() as f64;
        rates.sort_by(f64::total_cmp);
        let spread = quantile(&rates, 0.9) - quantile(&rates, 0.1);
        reports.push(LlnCheckpoint { n, mean_rate, std_error, mean_abs_deviation, spread });
    }
    let last = reports.last().expect("at least one checkpoint");
    let passed = (last.mean_rate - w_star).abs() <= 3.0 * last.std_error;
    let spread_shrinks = reports.windows(2).all(|w| w[1].spread <= w[0].spread);
    let identity_max_rel_error = per_path.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(LlnReport { w_star, checkpoints: reports, identity_max_rel_error, passed, spread_shrinks })
}

/// Running `ln_q` sums of the optimal and competitor factors along one path.
fn paired_path(run: &SimulationRun, sampler: &NdSampler, q: Deformation, path: usize, mut on_day: impl FnMut(usize, f64, f64)) {
    let mut state = run.competitor.start();
    let (mut l_star, mut l) = (0.0, 0.0);
    walk_path(sampler, run.seed, path, run.horizon, |t, x| {
        let f = state.weights().factor(x);
        state.observe(x);
        l += q_log_unchecked(q, f);
        l_star += q_log_unchecked(q, run.b_star.factor(x));
        on_day(t + 1, l, l_star);
    });
}

/// `ln(S_n / S*_n)` from the running `ln_q` sums.
#[inline]
fn ln_ratio(q: Deformation, l: f64, l_star: f64) -> f64 {
    ln_q_exp(q, l) - ln_q_exp(q, l_star)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovRow {
    pub lambda: f64,
    pub frequency: f64,
    /// `1/lambda + 3 * sqrt(p (1 - p) / paths)` with `p = 1/lambda`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovReport {
    pub n: usize,
    pub rows: Vec<MarkovRow>,
    /// Path mean of `S_n / S*_n`.
    pub mean_ratio: f64,
    pub mean_ratio_se: f64,
    /// Paths where the ratio was undefined (both wealths saturated or zero).
    pub undefined_paths: usize,
}

impl MarkovReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    /// The mean ratio exceeds 1 by more than three standard errors.
    pub fn ratio_assumption_violated(&self) -> bool {
        self.mean_ratio > 1.0 + 3.0 * self.mean_ratio_se
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out: Vec<ReportRow> = self
            .rows
            .iter()
            .map(|r| row("markov", self.n, format!("exceedance_lambda_{}", r.lambda), r.frequency, Some(r.bound)))
            .collect();
        out.push(row("markov", self.n, "mean_ratio", self.mean_ratio, Some(1.0)));
        out.push(row("markov", self.n, "mean_ratio_se", self.mean_ratio_se, None));
        out
    }
}

/// Frequency of `S_n > lambda S*_n` at the run horizon, per `lambda`.
pub fn check_markov_bound(run: &SimulationRun, lambdas: &[f64]) -> Result<MarkovReport> {
    let sampler = run.validate()?;
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 1.0)) {
        return Err(Error::domain(format!("lambda must be at least 1, got {l}")));
    }
    let q = run.model.q();
    let ratios: Vec<f64> = (0..run.paths)
        .into_par_iter()
        .map(|p| {
            let mut last = f64::NAN;
            paired_path(run, &sampler, q, p, |_, l, ls| last = ln_ratio(q, l, ls));
            last
        })
        .collect();
    let defined: Vec<f64> = ratios.iter().copied().filter(|r| !r.is_nan()).collect();
    let k = defined.len().max(1) as f64;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let ln_lambda = lambda.ln();
            let frequency = defined.iter().filter(|&&r| r > ln_lambda).count() as f64 / k;
            let p = 1.0 / lambda;
            let bound = p + 3.0 * (p * (1.0 - p) / k).sqrt();
            MarkovRow { lambda, frequency, bound, holds: frequency <= bound }
        })
        .collect();
    let plain: Vec<f64> = defined.iter().map(|r| r.exp()).collect();
    let (mean_ratio, mean_ratio_se) = if plain.is_empty() { (f64::NAN, f64::NAN) } else { mean_se(&plain) };
    Ok(MarkovReport { n: run.horizon, rows, mean_ratio, mean_ratio_se, undefined_paths: ratios.len() - defined.len() })
}

/// `(n^(2-2q) - 1) / (n (1-q))`, i.e. `ln_q(n^2) / n`.
pub fn finite_n_rhs(q: Deformation, n: usize) -> f64 {
    let n = n as f64;
    if q.is_classical() {
        return 2.0 * n.ln() / n;
    }
    let omq = q.one_minus_q();
    (2.0 * omq * n.ln()).exp_m1() / (n * omq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteNReport {
    pub n0: usize,
    pub n_max: usize,
    /// Paths with at least one `n` in `(n0, n_max]` violating the bound.
    pub violating_paths: usize,
    pub violating_fraction: f64,
    /// Mean number of violating `n` per path.
    pub mean_violations: f64,
    pub mean_violations_se: f64,
    /// `sum_{n > n0} 1/n^2` up to `n_max`.
    pub budget: f64,
    pub within_budget: bool,
}

impl FiniteNReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        vec![
            row("bound", self.n_max, "violating_path_fraction", self.violating_fraction, Some(0.01)),
            row("bound", self.n_max, "mean_violations_per_path", self.mean_violations, Some(self.budget + 3.0 * self.mean_violations_se)),
            row("bound", self.n_max, "borel_cantelli_budget", self.budget, Some(std::f64::consts::PI.powi(2) / 6.0)),
        ]
    }
}

/// Checks `(1/n) ln_q(S_n / S*_n) <= ln_q(n^2) / n` for every `n` in `(n0, horizon]`.
///
/// Since `ln_q` is increasing this is evaluated as `ln(S_n / S*_n) <= 2 ln n`.
pub fn check_finite_n_bound(run: &SimulationRun, n0: usize) -> Result<FiniteNReport> {
    let q = run.model.q();
    if !(q.q() > 0.5) {
        return Err(Error::domain(format!("finite-n bound requires q > 0.5, got {}", q.q())));
    }
    let sampler = run.validate()?;
    let counts: Vec<usize> = (0..run.paths)
        .into_par_iter()
        .map(|p| {
            let mut violations = 0;
            paired_path(run, &sampler, q, p, |n, l, ls| {
                if n > n0 && ln_ratio(q, l, ls) > 2.0 * (n as f64).ln() {
                    violations += 1;
                }
            });
            violations
        })
        .collect();
    let violating_paths = counts.iter().filter(|&&c| c > 0).count();
    let per_path: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (mean_violations, mean_violations_se) = mean_se(&per_path);
    let budget: f64 = (n0 + 1..=run.horizon).map(|n| 1.0 / (n as f64).powi(2)).sum();
    Ok(FiniteNReport {
        n0,
        n_max: run.horizon,
        violating_paths,
        violating_fraction: violating_paths as f64 / run.paths as f64,
        mean_violations,
        mean_violations_se,
        budget,
        within_budget: mean_violations <= budget + 3.0 * mean_violations_se,
    })
}
