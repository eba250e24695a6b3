use chrono::NaiveDate;

use qfolio_core::data::{prices_from_reader, synthetic_closes, write_closes};
use qfolio_core::estimation::fit_mle;
use qfolio_core::optimizer::optimal_portfolio;
use qfolio_core::persist::{to_json, FitRecord, PortfolioRecord};
use qfolio_core::wealth::backtest;
use qfolio_core::{DeConfig, Deformation, FitConfig, IntegratorSpec, MultivariateQGaussian};

fn closes_csv(seed: u64) -> Vec<u8> {
    let model = MultivariateQGaussian::new(Deformation::new(1.4).unwrap(), vec![1.001, 1.0], vec![0.02, 0.01]).unwrap();
    let tickers = vec!["X".to_string(), "Y".to_string()];
    let closes = synthetic_closes(&model, &tickers, NaiveDate::from_ymd_opt(2023, 1, 2).unwrap(), 300, seed).unwrap();
    let mut buf = Vec::new();
    write_closes(&mut buf, &closes).unwrap();
    buf
}

#[test]
fn fit_optimize_backtest() {
    let csv = closes_csv(11);
    let data = prices_from_reader(csv.as_slice(), None, None, None).unwrap();
    assert_eq!((data.len(), data.dim()), (299, 2));

    let split = data.dates()[200];
    let train = data.before(split);
    let test = data.window(Some(split), None);
    assert_eq!(train.len() + test.len(), data.len());

    let fit = fit_mle(&train, &FitConfig::default()).unwrap();
    assert!(fit.model.q().q() > 1.0 && fit.model.q().q() < 2.0);

    let spec = IntegratorSpec::monte_carlo(20_000, 5);
    let best = optimal_portfolio(&fit.model, &spec, &DeConfig { seed: 5, max_generations: 60, ..Default::default() }).unwrap();
    let report = backtest(&best.portfolio, &fit.model, &test).unwrap();
    assert_eq!(report.trajectory.days, test.dates());
    assert_eq!(report.window, Some((test.dates()[0], *test.dates().last().unwrap())));
    let rebuilt: f64 = report.trajectory.daily_factor.iter().product();
    assert!((rebuilt - report.trajectory.wealth.last().unwrap()).abs() < 1e-12);

    let record = FitRecord { tickers: data.tickers().to_vec(), fit };
    let back: FitRecord = serde_json::from_str(&to_json(&record).unwrap()).unwrap();
    assert_eq!(back, record);
    let p = PortfolioRecord::new(data.tickers().to_vec(), &best.portfolio, Some(best.growth)).unwrap();
    let back: PortfolioRecord = serde_json::from_str(&to_json(&p).unwrap()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn same_seed_same_everything() {
    assert_eq!(closes_csv(3), closes_csv(3));
    assert_ne!(closes_csv(3), closes_csv(4));
    let fit = |seed| {
        let data = prices_from_reader(closes_csv(3).as_slice(), None, None, None).unwrap();
        let cfg = FitConfig { de: DeConfig { seed, ..Default::default() }, ..Default::default() };
        fit_mle(&data, &cfg).unwrap()
    };
    assert_eq!(fit(1), fit(1));
}
