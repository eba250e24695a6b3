//! `qfolio`: fit, optimize, backtest, simulate and report from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qfolio_core::asymptotics::{
    check_finite_n_bound, check_lln, check_markov_bound, BuyAndHold, Competitor, ReportRow, SimulationRun,
};
use qfolio_core::data::{load_prices, synthetic_closes, write_closes, PriceRelativeSeries};
use qfolio_core::estimation::fit_mle;
use qfolio_core::optimizer::optimal_portfolio;
use qfolio_core::persist::{
    load_json, read_trajectory_csv, save_json, wealth_svg, write_metrics_csv, write_simulation_csv,
    write_trajectory_csv, FitRecord, PortfolioRecord,
};
use qfolio_core::wealth::{backtest, sharpe_ratio, sortino_ratio, BacktestReport};
use qfolio_core::{Deformation, Error, IntegrationMethod, MultivariateQGaussian, PipelineConfig, Portfolio};

/// q-deformed growth-optimal portfolios.
#[derive(Debug, Parser)]
#[command(name = "qfolio", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Quadrature,
    Cubature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Check {
    Lln,
    Markov,
    Bound,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Baseline {
    Gaussian,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a q-Gaussian model to price relatives.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated tickers (default: all, sorted).
        #[arg(long, value_delimiter = ',')]
        tickers: Option<Vec<String>>,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Growth-optimal portfolio for a fitted model.
    Optimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wealth and q-wealth of a portfolio over realized prices.
    Backtest {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        portfolio: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Also fit and optimize a q = 1 model on the days before `--from`
        /// (the whole input when `--from` is absent) and backtest it alongside.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulated checks of long-run optimality.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        portfolio: PathBuf,
        /// A portfolio file, `uniform`, or `buy-and-hold` (starting uniform).
        #[arg(long)]
        competitor: String,
        #[arg(long)]
        days: usize,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        check: Check,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sharpe and Sortino ratios of a backtest report.
    Metrics {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic `date,ticker,close` data drawn from a q-Gaussian.
    Synth {
        #[arg(long, default_value_t = 1.4)]
        q: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        tickers: Vec<String>,
        #[arg(long, default_value = "2024-01-02")]
        start: NaiveDate,
        #[arg(long)]
        days: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Data(_) | Error::Io(_) | Error::DegenerateData { .. } | Error::DimensionMismatch { .. } => 2,
        _ => 3,
    }
}

fn error_kind(code: u8) -> &'static str {
    match code {
        1 => "usage",
        2 => "data",
        _ => "numerical",
    }
}

fn report_error(code: u8, message: &str) -> ExitCode {
    let line = json!({ "error": error_kind(code), "code": code, "message": message });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report_error(1, e.to_string().lines().next().unwrap_or("invalid arguments")),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report_error(1, "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report_error(1, &e.to_string());
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(exit_code(&e), &e.to_string()),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, Error> {
    let cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Sibling path with `.suffix.ext` replacing the extension.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}{ext}"))
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit { input, tickers, from, to, config, seed, out } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let data = load_prices(&input, tickers.as_deref(), from, to)?;
            let fit = fit_mle(&data, &cfg.fit)?;
            let record = FitRecord { tickers: data.tickers().to_vec(), fit };
            save_json(&out, &record)?;
            println!("{}", summary_fit(&record));
        }
        Command::Optimize { model, config, seed, method, mc_samples, out } => {
            let mut cfg = load_config(config.as_deref(), seed)?;
            if let Some(m) = method {
                cfg.optimize.integrator.method = match m {
                    Method::Quadrature => IntegrationMethod::AdaptiveQuadrature1d,
                    Method::Cubature => IntegrationMethod::CubatureNd,
                    Method::MonteCarlo => IntegrationMethod::MonteCarlo,
                };
            }
            if let Some(n) = mc_samples {
                cfg.optimize.integrator.mc_samples = n;
            }
            let fit: FitRecord = load_json(&model)?;
            let best = optimal_portfolio(&fit.fit.model, &cfg.optimize.integrator, &cfg.optimize.de)?;
            let record = PortfolioRecord::new(fit.tickers, &best.portfolio, Some(best.growth))?;
            save_json(&out, &record)?;
            println!("{}", serde_json::to_string(&json!({ "tickers": record.tickers, "weights": record.weights, "growth_rate": record.growth_rate.as_ref().map(|g| g.value) }))?);
        }
        Command::Backtest { model, portfolio, input, from, to, out, plot, baseline, config, seed } => {
            let fit: FitRecord = load_json(&model)?;
            let record: PortfolioRecord = load_json(&portfolio)?;
            if record.tickers != fit.tickers {
                return Err(Error::Data("portfolio and model tickers differ".into()));
            }
            let all = load_prices(&input, Some(&fit.tickers), None, None)?;
            let window = all.window(from, to);
            if window.is_empty() {
                return Err(Error::Data("no price relatives in the backtest window".into()));
            }
            let report = backtest(&record.portfolio()?, &fit.fit.model, &window)?;
            write_trajectory_csv(create(&out)?, &report.trajectory)?;

            let base = match baseline {
                Some(Baseline::Gaussian) => {
                    let cfg = load_config(config.as_deref(), seed)?;
                    let train = match from {
                        Some(f) => all.before(f),
                        None => all.clone(),
                    };
                    let b = gaussian_baseline(&train, &window, &cfg)?;
                    write_trajectory_csv(create(&sibling(&out, "baseline"))?, &b.trajectory)?;
                    Some(b)
                }
                None => None,
            };
            if let Some(plot) = plot {
                let t = &report.trajectory;
                let mut series: Vec<(&str, &[f64])> = vec![("q-portfolio wealth", &t.wealth), ("q-portfolio q-wealth", &t.q_wealth)];
                if let Some(b) = &base {
                    series.push(("Gaussian baseline wealth", &b.trajectory.wealth));
                }
                write_text(&plot, &wealth_svg("Wealth relative", &t.days, &series))?;
            }
            let mut rows = vec![summary_backtest("q_portfolio", &report)];
            if let Some(b) = &base {
                rows.push(summary_backtest("gaussian_baseline", b));
            }
            for r in rows {
                println!("{r}");
            }
        }
        Command::Simulate { model, portfolio, competitor, days, paths, seed, check, config, out } => {
            let cfg = load_config(config.as_deref(), None)?;
            let fit: FitRecord = load_json(&model)?;
            let record: PortfolioRecord = load_json(&portfolio)?;
            let d = fit.fit.model.dim();
            let competitor = match competitor.as_str() {
                "uniform" => Competitor::Fixed(Portfolio::uniform(d)),
                "buy-and-hold" => Competitor::Causal(Arc::new(BuyAndHold { initial: Portfolio::uniform(d) })),
                path => Competitor::Fixed(load_json::<PortfolioRecord>(path)?.portfolio()?),
            };
            let run = SimulationRun {
                model: fit.fit.model.clone(),
                b_star: record.portfolio()?,
                competitor,
                horizon: days,
                paths,
                seed,
            };
            let (rows, summary): (Vec<ReportRow>, String) = match check {
                Check::Lln => {
                    let r = check_lln(&run, &cfg.simulate.checkpoints)?;
                    let s = format!("lln: W* = {:.6e}, passed = {}, spread shrinks = {}", r.w_star, r.passed, r.spread_shrinks);
                    (r.rows(), s)
                }
                Check::Markov => {
                    let r = check_markov_bound(&run, &cfg.simulate.lambdas)?;
                    if r.ratio_assumption_violated() {
                        eprintln!("warning: mean S_n/S*_n = {:.4} exceeds 1", r.mean_ratio);
                    }
                    let s = format!("markov: n = {}, holds = {}, mean ratio = {:.6}", r.n, r.holds(), r.mean_ratio);
                    (r.rows(), s)
                }
                Check::Bound => {
                    let r = check_finite_n_bound(&run, cfg.simulate.n0)?;
                    let s = format!(
                        "bound: violating paths = {}/{}, mean violations = {:.4e}, budget = {:.4e}",
                        r.violating_paths, paths, r.mean_violations, r.budget
                    );
                    (r.rows(), s)
                }
            };
            match out {
                Some(p) => write_simulation_csv(create(&p)?, &rows)?,
                None => write_simulation_csv(io::stdout().lock(), &rows)?,
            }
            eprintln!("{summary}");
        }
        Command::Metrics { report, out } => {
            let file = File::open(&report).map_err(|e| Error::Io(format!("{}: {e}", report.display())))?;
            let t = read_trajectory_csv(file)?;
            let returns = t.returns();
            let metrics = [
                ("sharpe", sharpe_ratio(&returns, 0.0).ok()),
                ("sortino", sortino_ratio(&returns, 0.0).ok()),
                ("terminal_wealth", t.wealth.last().copied()),
                ("terminal_q_wealth", t.q_wealth.last().copied()),
            ];
            match out {
                Some(p) => write_metrics_csv(create(&p)?, &metrics)?,
                None => write_metrics_csv(io::stdout().lock(), &metrics)?,
            }
        }
        Command::Synth { q, mu, sigma, tickers, start, days, seed, out } => {
            let model = MultivariateQGaussian::new(Deformation::new(q)?, mu, sigma)?;
            let closes = synthetic_closes(&model, &tickers, start, days, seed)?;
            let mut w = create(&out)?;
            write_closes(&mut w, &closes)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Same pipeline with `q` pinned to `1 + 1e-8`.
fn gaussian_baseline(train: &PriceRelativeSeries, window: &PriceRelativeSeries, cfg: &PipelineConfig) -> Result<BacktestReport, Error> {
    let mut fit_cfg = cfg.fit.clone();
    let q = 1.0 + 1e-8;
    fit_cfg.q_bounds = (q, q);
    let fit = fit_mle(train, &fit_cfg)?;
    debug_assert!(Deformation::new(q)?.is_classical());
    let best = optimal_portfolio(&fit.model, &cfg.optimize.integrator, &cfg.optimize.de)?;
    backtest(&best.portfolio, &fit.model, window)
}

fn summary_fit(r: &FitRecord) -> String {
    let m = &r.fit.model;
    json!({
        "tickers": r.tickers,
        "q": m.q().q(),
        "mu": m.mu(),
        "sigma": m.sigma(),
        "log_likelihood": r.fit.log_likelihood,
        "converged": r.fit.converged,
    })
    .to_string()
}

fn summary_backtest(name: &str, r: &BacktestReport) -> String {
    let t = &r.trajectory;
    json!({
        "portfolio": name,
        "weights": r.portfolio.weights(),
        "days": t.len(),
        "wealth": t.wealth.last(),
        "q_wealth": t.q_wealth.last(),
        "sharpe": r.sharpe,
        "sortino": r.sortino,
    })
    .to_string()
}
