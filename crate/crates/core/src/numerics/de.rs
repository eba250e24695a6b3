use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Generations without `tolerance` improvement after which the search stops.
pub const STALL_GENERATIONS: usize = 20;

/// Differential evolution settings (DE/rand/1/bin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    /// Population size; `None` means `10 * dimension` (at least 4).
    pub population_size: Option<usize>,
    /// Differential weight `F`, in `(0, 2]`.
    pub differential_weight: f64,
    /// Crossover rate `CR`, in `[0, 1]`.
    pub crossover_rate: f64,
    pub max_generations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: None,
            differential_weight: 0.8,
            crossover_rate: 0.9,
            max_generations: 300,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.differential_weight > 0.0 && self.differential_weight <= 2.0) {
            return Err(Error::domain("differential_weight must lie in (0, 2]"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::domain("crossover_rate must lie in [0, 1]"));
        }
        if self.max_generations == 0 {
            return Err(Error::domain("max_generations must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        if matches!(self.population_size, Some(n) if n < 4) {
            return Err(Error::domain("population_size must be at least 4"));
        }
        Ok(())
    }

    pub fn population_for(&self, dim: usize) -> usize {
        self.population_size.unwrap_or((10 * dim).max(4))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    /// Best objective value after each generation; entry 0 is the initial population.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Stopped because the stall criterion fired rather than the generation cap.
    pub converged: bool,
}

#[inline]
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let r = if v < lo {
        lo + (lo - v)
    } else if v > hi {
        hi - (v - hi)
    } else {
        v
    };
    r.clamp(lo, hi)
}

/// Maximizes `objective` over the box `bounds` with DE/rand/1/bin.
///
/// Trial vectors for a generation are drawn sequentially from the seeded stream
/// and then evaluated in parallel, so the result is identical for any thread
/// count. NaN and `-inf` objective values rank worst. Degenerate bounds
/// (`lo == hi`) pin that coordinate.
pub fn differential_evolution<F>(objective: F, bounds: &[(f64, f64)], config: &DeConfig) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::domain("differential_evolution: empty bounds"));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::domain(format!("invalid bounds [{lo}, {hi}] on axis {i}")));
        }
    }

    let np = config.population_for(dim);
    let mut rng = rng::seeded(config.seed);

    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = population.par_iter().map(|x| sanitize(objective(x))).collect();
    let mut evaluations = np;

    let best_of = |fitness: &[f64]| {
        fitness
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
    };
    let (mut best_idx, mut best) = best_of(&fitness);
    let mut trace = vec![best];
    let mut converged = false;

    for generation in 1..=config.max_generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let (r1, r2, r3) = distinct_triple(&mut rng, np, i);
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let (lo, hi) = bounds[j];
                        if j == forced || rng.random::<f64>() < config.crossover_rate {
                            let v = population[r1][j]
                                + config.differential_weight * (population[r2][j] - population[r3][j]);
                            reflect(v, lo, hi)
                        } else {
                            population[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fitness: Vec<f64> = trials.par_iter().map(|x| sanitize(objective(x))).collect();
        evaluations += np;

        for (i, (trial, f)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if f >= fitness[i] {
                population[i] = trial;
                fitness[i] = f;
            }
        }
        (best_idx, best) = best_of(&fitness);
        trace.push(best);

        if generation >= STALL_GENERATIONS {
            let earlier = trace[generation - STALL_GENERATIONS];
            if best.is_finite() && earlier.is_finite() && best - earlier < config.tolerance {
                converged = true;
                break;
            }
        }
    }

    if !best.is_finite() {
        return Err(Error::OptimizationFailed {
            reason: "objective was non-finite at every evaluated point".into(),
            trace,
        });
    }

    Ok(DeResult { argmax: population[best_idx].clone(), value: best, trace, evaluations, converged })
}

fn distinct_triple<R: Rng>(rng: &mut R, n: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let k = rng.random_range(0..n);
        if k != exclude && !taken.contains(&k) {
            return k;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| -x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let r = differential_evolution(f, &[(0.0, 1.0); 3], &DeConfig::default()).unwrap();
        for v in &r.argmax {
            assert!((v - 0.3).abs() < 1e-4, "{:?}", r.argmax);
        }
        assert!(r.converged);
    }

    #[test]
    fn multimodal_matches_grid_scan() {
        let f = |x: f64| -(x * x - 4.0).powi(2) * x.cos() + 0.5 * x;
        let (lo, hi) = (-4.0, 4.0);
        let n = 1_000_000;
        let mut grid_best = (lo, f64::NEG_INFINITY);
        for k in 0..=n {
            let x = lo + (hi - lo) * k as f64 / n as f64;
            let v = f(x);
            if v > grid_best.1 {
                grid_best = (x, v);
            }
        }
        let r = differential_evolution(|x: &[f64]| f(x[0]), &[(lo, hi)], &DeConfig::default()).unwrap();
        assert!((r.argmax[0] - grid_best.0).abs() < 1e-3, "{} vs {}", r.argmax[0], grid_best.0);
    }

    #[test]
    fn same_seed_same_trace() {
        let f = |x: &[f64]| -(x[0] - 0.1).powi(2) - (x[1] + 0.4).abs();
        let cfg = DeConfig { seed: 42, ..Default::default() };
        let a = differential_evolution(f, &[(-1.0, 1.0); 2], &cfg).unwrap();
        let b = differential_evolution(f, &[(-1.0, 1.0); 2], &cfg).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| differential_evolution(f, &[(-1.0, 1.0); 2], &cfg).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn evaluated_points_stay_in_box() {
        let bounds = [(0.0, 1.0), (-2.0, -1.5), (3.0, 3.0)];
        let seen = Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            x[0] + x[1]
        };
        differential_evolution(f, &bounds, &DeConfig { max_generations: 50, ..Default::default() }).unwrap();
        for x in seen.into_inner().unwrap() {
            for (v, &(lo, hi)) in x.iter().zip(&bounds) {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }

    #[test]
    fn all_non_finite_fails_with_trace() {
        let err = differential_evolution(
            |_: &[f64]| f64::NAN,
            &[(0.0, 1.0)],
            &DeConfig { max_generations: 5, ..Default::default() },
        )
        .unwrap_err();
        match err {
            Error::OptimizationFailed { trace, .. } => assert_eq!(trace.len(), 6),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let f = |x: &[f64]| x[0];
        assert!(differential_evolution(f, &[(1.0, 0.0)], &DeConfig::default()).is_err());
        let bad = DeConfig { crossover_rate: 1.5, ..Default::default() };
        assert!(differential_evolution(f, &[(0.0, 1.0)], &bad).is_err());
        let bad = DeConfig { population_size: Some(3), ..Default::default() };
        assert!(differential_evolution(f, &[(0.0, 1.0)], &bad).is_err());
    }
}
