//! On-disk formats: JSON for models, portfolios and configs; CSV for reports;
//! SVG for wealth plots.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::asymptotics::ReportRow;
use crate::error::{Error, Result};
use crate::estimation::FitResult;
use crate::optimizer::{GrowthRateEstimate, Portfolio};
use crate::wealth::WealthTrajectory;

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_file(path.as_ref(), to_json(value)?.as_bytes())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A fitted model with the tickers it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub tickers: Vec<String>,
    #[serde(flatten)]
    pub fit: FitResult,
}

/// Portfolio weights by ticker, with the growth rate when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioRecord {
    pub tickers: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_rate: Option<GrowthRateEstimate>,
}

impl PortfolioRecord {
    pub fn new(tickers: Vec<String>, portfolio: &Portfolio, growth_rate: Option<GrowthRateEstimate>) -> Result<Self> {
        if tickers.len() != portfolio.dim() {
            return Err(Error::DimensionMismatch { expected: tickers.len(), got: portfolio.dim() });
        }
        Ok(PortfolioRecord { tickers, weights: portfolio.weights().to_vec(), growth_rate })
    }

    pub fn portfolio(&self) -> Result<Portfolio> {
        if self.tickers.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.tickers.len(), got: self.weights.len() });
        }
        Portfolio::new(self.weights.clone())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    date: NaiveDate,
    daily_factor: f64,
    wealth: f64,
    q_wealth: f64,
}

/// `date,daily_factor,wealth,q_wealth`
pub fn write_trajectory_csv<W: Write>(out: W, t: &WealthTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..t.len() {
        w.serialize(TrajectoryRow {
            date: t.days[i],
            daily_factor: t.daily_factor[i],
            wealth: t.wealth[i],
            q_wealth: t.q_wealth[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<WealthTrajectory> {
    let mut t = WealthTrajectory { days: vec![], daily_factor: vec![], wealth: vec![], q_wealth: vec![] };
    for row in csv::Reader::from_reader(input).deserialize::<TrajectoryRow>() {
        let row = row?;
        t.days.push(row.date);
        t.daily_factor.push(row.daily_factor);
        t.wealth.push(row.wealth);
        t.q_wealth.push(row.q_wealth);
    }
    Ok(t)
}

/// `metric,value`; undefined metrics are written as `undefined`.
pub fn write_metrics_csv<W: Write>(out: W, metrics: &[(&str, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value"])?;
    for (name, value) in metrics {
        let v = value.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        w.write_record([*name, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// `check,n,statistic,value,bound`
pub fn write_simulation_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "n", "statistic", "value", "bound"])?;
    for r in rows {
        let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([r.check, &r.n.to_string(), &r.statistic, &r.value.to_string(), &bound])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Self-contained SVG line chart of one or more series sharing the x axis.
pub fn wealth_svg(title: &str, labels: &[NaiveDate], series: &[(&str, &[f64])]) -> String {
    let (w, h, pad) = (800.0, 450.0, 60.0);
    let n = labels.len().max(2);
    let finite = series.iter().flat_map(|(_, ys)| ys.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let sx = |i: usize| pad + (w - 2.0 * pad) * i as f64 / (n - 1) as f64;
    let sy = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{pad},{pad} L{pad},{y} L{x},{y}" fill="none" stroke="black"/>"#,
        y = h - pad,
        x = w - pad
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.4}</text>"#,
            pad - 6.0,
            sy(v) + 4.0
        );
    }
    if let (Some(first), Some(last)) = (labels.first(), labels.last()) {
        let y = h - pad + 18.0;
        let _ = writeln!(s, r#"<text x="{pad}" y="{y}" font-family="sans-serif" font-size="11">{first}</text>"#);
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{last}</text>"#, w - pad);
    }
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, v) in ys.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = write!(d, "{}{:.2},{:.2} ", if d.is_empty() { "M" } else { "L" }, sx(i), sy(*v));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let ly = pad + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#, pad + 10.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::IntegratorSpec;
    use crate::qalgebra::Deformation;
    use crate::MultivariateQGaussian;

    #[test]
    fn fit_record_round_trip() {
        let model = MultivariateQGaussian::new(Deformation::new(1.43).unwrap(), vec![1.0001, 0.9998], vec![0.0213, 0.0187]).unwrap();
        let rec = FitRecord {
            tickers: vec!["A".into(), "B".into()],
            fit: FitResult { model, log_likelihood: 512.123456789, converged: true, trace: vec![1.0 / 3.0, 0.1 + 0.2] },
        };
        let s = to_json(&rec).unwrap();
        assert_eq!(serde_json::from_str::<FitRecord>(&s).unwrap(), rec);
    }

    #[test]
    fn portfolio_record_round_trip() {
        let p = Portfolio::new(vec![0.1, 0.2, 0.7]).unwrap();
        let g = GrowthRateEstimate {
            value: -1.234e-4,
            std_error: 3.1e-7,
            method: IntegratorSpec::monte_carlo(5000, 3),
            rejection_fraction: Some(0.001),
            converged: true,
        };
        let rec = PortfolioRecord::new(vec!["A".into(), "B".into(), "C".into()], &p, Some(g)).unwrap();
        let back: PortfolioRecord = serde_json::from_str(&to_json(&rec).unwrap()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.portfolio().unwrap(), p);
        assert!(PortfolioRecord::new(vec!["A".into()], &p, None).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let t = WealthTrajectory {
            days: vec!["2024-01-02".parse().unwrap(), "2024-01-03".parse().unwrap()],
            daily_factor: vec![1.0 / 3.0 + 0.9, 0.97],
            wealth: vec![1.2333333333333334, 1.1963333333333332],
            q_wealth: vec![1.2333333333333334, 1.19633001],
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,daily_factor,wealth,q_wealth\n2024-01-02,"));
        assert_eq!(read_trajectory_csv(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn metrics_and_simulation_csv() {
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[("sharpe", Some(0.5)), ("sortino", None)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "metric,value\nsharpe,0.5\nsortino,undefined\n");
        let mut buf = Vec::new();
        let rows = [ReportRow { check: "lln", n: 10, statistic: "mean_rate".into(), value: -0.25, bound: None }];
        write_simulation_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "check,n,statistic,value,bound\nlln,10,mean_rate,-0.25,\n");
    }

    #[test]
    fn svg_is_well_formed() {
        let days: Vec<NaiveDate> = ["2024-01-02", "2024-01-03", "2024-01-04"].iter().map(|d| d.parse().unwrap()).collect();
        let s = wealth_svg("a < b", &days, &[("wealth", &[1.0, 1.1, 1.05]), ("flat", &[1.0, 1.0, 1.0])]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<path").count(), 3);
        assert!(s.contains("a &lt; b"));
    }
}
