//! Wealth and q-wealth of a constant-rebalanced portfolio, and risk-adjusted ratios.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::PriceRelativeSeries;
use crate::error::{Error, Result};
use crate::optimizer::Portfolio;
use crate::qalgebra::{q_product_prefix, Deformation};
use crate::qgaussian::MultivariateQGaussian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrajectory {
    pub days: Vec<NaiveDate>,
    /// `b . x_t`
    pub daily_factor: Vec<f64>,
    /// Running ordinary product of the daily factors.
    pub wealth: Vec<f64>,
    /// Running q-product of the daily factors.
    pub q_wealth: Vec<f64>,
}

impl WealthTrajectory {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Arithmetic daily returns `b . x_t - 1`.
    pub fn returns(&self) -> Vec<f64> {
        self.daily_factor.iter().map(|f| f - 1.0).collect()
    }
}

/// Rebalances to `b` every day over `data`.
pub fn wealth_relative(b: &Portfolio, data: &PriceRelativeSeries, q: Deformation) -> Result<WealthTrajectory> {
    if b.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), got: b.dim() });
    }
    let daily_factor: Vec<f64> = data.relatives().iter().map(|x| b.factor(x)).collect();
    let wealth = daily_factor
        .iter()
        .scan(1.0, |acc, f| {
            *acc *= f;
            Some(*acc)
        })
        .collect();
    let q_wealth = q_product_prefix(q, &daily_factor).map_err(|e| Error::Data(e.to_string()))?;
    Ok(WealthTrajectory { days: data.dates().to_vec(), daily_factor, wealth, q_wealth })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `mean(R - rf) / sd(R)` with the sample (n - 1) standard deviation.
pub fn sharpe_ratio(returns: &[f64], risk_free: f64) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::UndefinedMetric("sharpe ratio needs at least 2 returns".into()));
    }
    let m = mean(returns);
    let var = returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (returns.len() - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::UndefinedMetric("sharpe ratio: returns have zero variance".into()));
    }
    Ok((m - risk_free) / var.sqrt())
}

/// `mean(R - T) / TDD` with `TDD = sqrt(sum min(0, R - T)^2 / N)`.
pub fn sortino_ratio(returns: &[f64], target: f64) -> Result<f64> {
    if returns.is_empty() {
        return Err(Error::UndefinedMetric("sortino ratio needs at least 1 return".into()));
    }
    let n = returns.len() as f64;
    let tdd = (returns.iter().map(|r| (r - target).min(0.0).powi(2)).sum::<f64>() / n).sqrt();
    if !(tdd > 0.0) {
        return Err(Error::UndefinedMetric("sortino ratio: no return below target".into()));
    }
    Ok((mean(returns) - target) / tdd)
}

/// One backtest: the trajectory plus Sharpe and Sortino at zero risk-free rate
/// and target (`None` when undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub portfolio: Portfolio,
    pub model: MultivariateQGaussian,
    pub trajectory: WealthTrajectory,
    pub sharpe: Option<f64>,
    pub sortino: Option<f64>,
    pub window: Option<(NaiveDate, NaiveDate)>,
}

pub fn backtest(portfolio: &Portfolio, model: &MultivariateQGaussian, data: &PriceRelativeSeries) -> Result<BacktestReport> {
    let trajectory = wealth_relative(portfolio, data, model.q())?;
    let returns = trajectory.returns();
    let window = data.dates().first().zip(data.dates().last()).map(|(a, b)| (*a, *b));
    Ok(BacktestReport {
        portfolio: portfolio.clone(),
        model: model.clone(),
        sharpe: sharpe_ratio(&returns, 0.0).ok(),
        sortino: sortino_ratio(&returns, 0.0).ok(),
        trajectory,
        window,
    })
}
