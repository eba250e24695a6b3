//! Price ingestion: `date,ticker,close` CSV to aligned daily price relatives.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgaussian::{MultivariateQGaussian, NdSampler};
use crate::rng;

/// Aligned daily price relatives `close_t / close_{t-1}` for several tickers.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRelativeSeries {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    relatives: Vec<Vec<f64>>,
}

impl PriceRelativeSeries {
    /// `relatives[t][i]` is the relative of ticker `i` on `dates[t]`.
    pub fn new(tickers: Vec<String>, dates: Vec<NaiveDate>, relatives: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.is_empty() {
            return Err(Error::Data("no tickers".into()));
        }
        if dates.len() != relatives.len() {
            return Err(Error::DimensionMismatch { expected: dates.len(), got: relatives.len() });
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data("dates must be strictly increasing".into()));
        }
        for (row, date) in relatives.iter().zip(&dates) {
            if row.len() != tickers.len() {
                return Err(Error::DimensionMismatch { expected: tickers.len(), got: row.len() });
            }
            if let Some(x) = row.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                return Err(Error::Data(format!("non-positive price relative {x} on {date}")));
            }
        }
        Ok(PriceRelativeSeries { tickers, dates, relatives })
    }

    /// Series with synthetic consecutive dates starting at 2000-01-01.
    pub fn undated(tickers: Vec<String>, relatives: Vec<Vec<f64>>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = start.iter_days().take(relatives.len()).collect();
        Self::new(tickers, dates, relatives)
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn relatives(&self) -> &[Vec<f64>] {
        &self.relatives
    }

    pub fn dim(&self) -> usize {
        self.tickers.len()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Column `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.relatives.iter().map(|r| r[i]).collect()
    }

    /// Rows dated within `[from, to]` (either end open when `None`).
    pub fn window(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        let keep = |d: &NaiveDate| from.map_or(true, |f| *d >= f) && to.map_or(true, |t| *d <= t);
        let (dates, relatives) = self
            .dates
            .iter()
            .zip(&self.relatives)
            .filter(|(d, _)| keep(d))
            .map(|(d, r)| (*d, r.clone()))
            .unzip();
        PriceRelativeSeries { tickers: self.tickers.clone(), dates, relatives }
    }

    /// Rows dated strictly before `date`.
    pub fn before(&self, date: NaiveDate) -> Self {
        self.window(None, date.pred_opt())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    date: NaiveDate,
    ticker: String,
    close: f64,
}

/// Reads closes from `path`. See [`prices_from_reader`].
pub fn load_prices(
    path: impl AsRef<Path>,
    tickers: Option<&[String]>,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<PriceRelativeSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    prices_from_reader(file, tickers, from, to)
}

/// Parses `date,ticker,close` rows into price relatives.
///
/// Only dates on which every selected ticker has a close are kept; relatives are
/// formed between consecutive kept dates and dated by the later one, so the first
/// common date yields no row. `from`/`to` then filter relatives by date.
/// `tickers = None` selects every ticker in the file, in sorted order.
pub fn prices_from_reader<R: Read>(
    reader: R,
    tickers: Option<&[String]>,
    from: Option<NaiveDate>,
    to: Option<NaiveDate>,
) -> Result<PriceRelativeSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut closes: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        if !(row.close > 0.0) || !row.close.is_finite() {
            return Err(Error::Data(format!("non-positive close {} for {} on {} (record {})", row.close, row.ticker, row.date, line + 1)));
        }
        let series = closes.entry(row.ticker.clone()).or_default();
        if series.insert(row.date, row.close).is_some() {
            return Err(Error::Data(format!("duplicate row for {} on {}", row.ticker, row.date)));
        }
    }

    let selected: Vec<String> = match tickers {
        Some(t) => t.to_vec(),
        None => closes.keys().cloned().collect(),
    };
    if selected.is_empty() {
        return Err(Error::Data("no tickers selected".into()));
    }
    let mut seen = BTreeSet::new();
    for t in &selected {
        if !seen.insert(t) {
            return Err(Error::Data(format!("ticker {t} requested twice")));
        }
        match closes.get(t) {
            None => return Err(Error::Data(format!("unknown ticker {t}"))),
            Some(s) if s.len() < 2 => return Err(Error::Data(format!("ticker {t} has fewer than 2 observations"))),
            Some(_) => {}
        }
    }

    let first = &closes[&selected[0]];
    let common: Vec<NaiveDate> = first
        .keys()
        .filter(|d| selected.iter().all(|t| closes[t].contains_key(d)))
        .copied()
        .collect();
    if common.len() < 2 {
        return Err(Error::Data("fewer than 2 common dates across tickers".into()));
    }

    let mut dates = Vec::with_capacity(common.len() - 1);
    let mut relatives = Vec::with_capacity(common.len() - 1);
    for w in common.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        if from.is_some_and(|f| cur < f) || to.is_some_and(|t| cur > t) {
            continue;
        }
        dates.push(cur);
        relatives.push(selected.iter().map(|t| closes[t][&cur] / closes[t][&prev]).collect());
    }
    PriceRelativeSeries::new(selected, dates, relatives)
}

/// One `date,ticker,close` record.
#[derive(Debug, Clone, PartialEq)]
pub struct Close {
    pub date: NaiveDate,
    pub ticker: String,
    pub close: f64,
}

/// Closes for `days` weekdays from `start`, beginning at 100 and moved by
/// non-negative draws from `model`, rounded to 4 decimals.
pub fn synthetic_closes(
    model: &MultivariateQGaussian,
    tickers: &[String],
    start: NaiveDate,
    days: usize,
    seed: u64,
) -> Result<Vec<Close>> {
    if tickers.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: tickers.len() });
    }
    let sampler = NdSampler::new(model)?;
    let mut rng = rng::seeded(seed);
    let mut level = vec![100.0; tickers.len()];
    let mut x = vec![0.0; tickers.len()];
    let dates = start.iter_days().filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun));
    let mut out = Vec::with_capacity(days * tickers.len());
    for (k, date) in dates.take(days).enumerate() {
        if k > 0 {
            sampler.draw_nonnegative_into(&mut rng, &mut x);
            for (l, xi) in level.iter_mut().zip(&x) {
                *l *= xi;
            }
        }
        for (t, l) in tickers.iter().zip(&level) {
            let close = (l * 1e4).round() / 1e4;
            if !(close > 0.0) {
                return Err(Error::Data(format!("synthetic close for {t} rounded to zero")));
            }
            out.push(Close { date, ticker: t.clone(), close });
        }
    }
    Ok(out)
}

/// Writes `date,ticker,close` CSV.
pub fn write_closes<W: std::io::Write>(out: W, closes: &[Close]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in closes {
        w.serialize(Row { date: c.date, ticker: c.ticker.clone(), close: c.close })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn load(csv: &str, tickers: Option<&[String]>) -> Result<PriceRelativeSeries> {
        prices_from_reader(csv.as_bytes(), tickers, None, None)
    }

    #[test]
    fn relatives_from_closes() {
        let s = load("date,ticker,close\n2024-01-02,A,100\n2024-01-03,A,110\n2024-01-04,A,99\n", None).unwrap();
        assert_eq!(s.dates(), &[d("2024-01-03"), d("2024-01-04")]);
        let col = s.column(0);
        assert!((col[0] - 1.1).abs() < 1e-15 && (col[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn calendars_are_intersected() {
        let csv = "date,ticker,close\n\
                   2024-01-02,A,10\n2024-01-02,B,20\n\
                   2024-01-03,A,11\n\
                   2024-01-04,A,12\n2024-01-04,B,22\n\
                   2024-01-05,A,12\n2024-01-05,B,11\n";
        let s = load(csv, None).unwrap();
        assert_eq!(s.dates(), &[d("2024-01-04"), d("2024-01-05")]);
        assert_eq!(s.relatives()[0], vec![1.2, 1.1]);
        assert_eq!(s.relatives()[1], vec![1.0, 0.5]);
    }

    #[test]
    fn ticker_order_follows_request() {
        let csv = "date,ticker,close\n2024-01-02,A,10\n2024-01-02,B,20\n2024-01-03,A,11\n2024-01-03,B,30\n";
        let s = load(csv, Some(&["B".into(), "A".into()])).unwrap();
        assert_eq!(s.tickers(), &["B", "A"]);
        assert_eq!(s.relatives()[0], vec![1.5, 1.1]);
    }

    #[test]
    fn date_filter_applies_to_relatives() {
        let csv = "date,ticker,close\n2024-01-02,A,1\n2024-01-03,A,2\n2024-01-04,A,4\n2024-01-05,A,8\n";
        let s = prices_from_reader(csv.as_bytes(), None, Some(d("2024-01-04")), Some(d("2024-01-04"))).unwrap();
        assert_eq!(s.dates(), &[d("2024-01-04")]);
        assert_eq!(s.relatives()[0], vec![2.0]);
    }

    #[test]
    fn ingestion_errors() {
        let ok = "date,ticker,close\n2024-01-02,A,1\n2024-01-03,A,2\n";
        assert!(matches!(load(ok, Some(&["Z".into()])), Err(Error::Data(m)) if m.contains("unknown ticker Z")));
        assert!(load("date,ticker,close\n2024-01-02,A,1\n", None).is_err());
        assert!(load("date,ticker,close\n2024-01-02,A,1\n2024-01-03,A,0\n", None).is_err());
        assert!(load("date,ticker,close\n2024-01-02,A,1\n2024-01-03,A,-4\n", None).is_err());
        let dup = "date,ticker,close\n2024-01-02,A,1\n2024-01-02,A,2\n2024-01-03,A,2\n";
        assert!(matches!(load(dup, None), Err(Error::Data(m)) if m.contains("duplicate")));
        assert!(load("date,ticker,close\n2024-13-02,A,1\n", None).is_err());
    }

    #[test]
    fn synthetic_round_trip() {
        let m = MultivariateQGaussian::new(crate::Deformation::new(1.4).unwrap(), vec![1.0, 1.0], vec![0.02, 0.02]).unwrap();
        let tickers = vec!["AA".to_string(), "BB".to_string()];
        let closes = synthetic_closes(&m, &tickers, d("2024-01-05"), 11, 3).unwrap();
        assert_eq!(closes.len(), 22);
        assert_eq!(closes[2].date, d("2024-01-08"));
        let mut buf = Vec::new();
        write_closes(&mut buf, &closes).unwrap();
        let s = prices_from_reader(buf.as_slice(), None, None, None).unwrap();
        assert_eq!((s.len(), s.dim()), (10, 2));
        assert_eq!(synthetic_closes(&m, &tickers, d("2024-01-05"), 11, 3).unwrap(), closes);
    }

    #[test]
    fn windows() {
        let s = PriceRelativeSeries::undated(vec!["A".into()], vec![vec![1.0], vec![1.1], vec![0.9]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.before(d("2000-01-03")).len(), 2);
        assert_eq!(s.window(Some(d("2000-01-02")), None).column(0), vec![1.1, 0.9]);
        assert!(PriceRelativeSeries::undated(vec!["A".into()], vec![vec![0.0]]).is_err());
    }
}
