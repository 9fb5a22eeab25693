//! Longstaff-Schwartz Monte Carlo for American puts with a fractional
//! regression basis `{1, (S/K)^λ, ..., (S/K)^(dλ)}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fractional_poly::check_lambda;
use crate::least_squares::{fit_discrete_normal, DataSet};

/// Default cap on `steps · paths`.
pub const DEFAULT_PATH_STEP_BUDGET: u64 = 10_000_000;

/// Geometric Brownian motion sampled on an equally spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub s0: f64,
    pub r: f64,
    pub sigma: f64,
    /// Years.
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_PATH_STEP_BUDGET
}

impl GbmConfig {
    pub fn new(s0: f64, r: f64, sigma: f64, horizon: f64, steps: usize, paths: usize, seed: u64) -> Self {
        Self {
            s0,
            r,
            sigma,
            horizon,
            steps,
            paths,
            seed,
            budget: DEFAULT_PATH_STEP_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            return Err(domain("gbm", format!("initial price must be positive, got {}", self.s0)));
        }
        if !self.r.is_finite() {
            return Err(domain("gbm", "rate must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(domain("gbm", format!("volatility must be non-negative, got {}", self.sigma)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(domain("gbm", format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 || self.paths == 0 {
            return Err(domain("gbm", "need at least one step and one path"));
        }
        let work = self.steps as u64 * self.paths as u64;
        if work > self.budget {
            return Err(Error::Usage(format!(
                "{} steps x {} paths exceeds the budget of {} path-steps",
                self.steps, self.paths, self.budget
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }
}

/// Simulated prices, one row of `steps + 1` values per path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    steps: usize,
    data: Vec<f64>,
}

impl PathMatrix {
    pub fn paths(&self) -> usize {
        self.data.len() / (self.steps + 1)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn row(&self, path: usize) -> &[f64] {
        let w = self.steps + 1;
        &self.data[path * w..(path + 1) * w]
    }

    pub fn at(&self, path: usize, t: usize) -> f64 {
        self.data[path * (self.steps + 1) + t]
    }
}

/// Exact log-normal stepping `S_{t+1} = S_t exp((r - σ²/2)Δ + σ√Δ Z)`.
///
/// Path `p` draws from ChaCha stream `p` of the master seed, so the output
/// does not depend on how the work is split across threads.
pub fn simulate_paths(cfg: &GbmConfig) -> Result<PathMatrix> {
    cfg.validate()?;
    let dt = cfg.dt();
    let drift = (cfg.r - 0.5 * cfg.sigma * cfg.sigma) * dt;
    let vol = cfg.sigma * dt.sqrt();
    let width = cfg.steps + 1;
    let mut data = vec![0.0; width * cfg.paths];
    data.par_chunks_mut(width).enumerate().for_each(|(p, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(p as u64);
        row[0] = cfg.s0;
        let mut log_s = cfg.s0.ln();
        for value in row.iter_mut().skip(1) {
            let z: f64 = StandardNormal.sample(&mut rng);
            log_s += drift + vol * z;
            *value = log_s.exp();
        }
    });
    Ok(PathMatrix {
        steps: cfg.steps,
        data,
    })
}

/// American put priced by Longstaff-Schwartz regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmcJob {
    pub gbm: GbmConfig,
    pub strike: f64,
    pub lambda: f64,
    #[serde(default = "default_degree")]
    pub basis_degree: usize,
}

fn default_degree() -> usize {
    2
}

impl LsmcJob {
    pub fn new(gbm: GbmConfig, strike: f64, lambda: f64) -> Self {
        Self {
            gbm,
            strike,
            lambda,
            basis_degree: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gbm.validate()?;
        check_lambda(self.lambda)?;
        if !(self.strike.is_finite() && self.strike > 0.0) {
            return Err(domain("lsmc", format!("strike must be positive, got {}", self.strike)));
        }
        if self.basis_degree == 0 {
            return Err(domain("lsmc", "basis degree must be at least 1"));
        }
        Ok(())
    }
}

/// Price estimate with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmcResult {
    pub price: f64,
    pub std_error: f64,
    /// European put on the same paths.
    pub european: f64,
    pub european_std_error: f64,
    /// Exercise dates where the regression was skipped.
    pub skipped_dates: Vec<usize>,
    /// Immediate exercise beat the estimated continuation value.
    pub exercise_at_start: bool,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Prices the put on freshly simulated paths.
pub fn price_american_put(job: &LsmcJob) -> Result<LsmcResult> {
    job.validate()?;
    let paths = simulate_paths(&job.gbm)?;
    price_on_paths(job, &paths)
}

/// Backward induction over the exercise dates `1..steps`; regression uses the
/// in-the-money paths only.
pub fn price_on_paths(job: &LsmcJob, paths: &PathMatrix) -> Result<LsmcResult> {
    job.validate()?;
    let k = job.strike;
    let steps = paths.steps();
    let n_paths = paths.paths();
    let disc = (-job.gbm.r * job.gbm.dt()).exp();
    let payoff = |s: f64| (k - s).max(0.0);

    let mut value: Vec<f64> = (0..n_paths).map(|p| payoff(paths.at(p, steps))).collect();
    let european: Vec<f64> = value.iter().map(|v| v * disc.powi(steps as i32)).collect();
    let mut skipped_dates = Vec::new();

    for t in (1..steps).rev() {
        value.iter_mut().for_each(|v| *v *= disc);
        let itm: Vec<usize> = (0..n_paths).filter(|&p| paths.at(p, t) < k).collect();
        if itm.len() < job.basis_degree + 1 {
            skipped_dates.push(t);
            continue;
        }
        let xs: Vec<f64> = itm.iter().map(|&p| paths.at(p, t) / k).collect();
        let ys: Vec<f64> = itm.iter().map(|&p| value[p]).collect();
        let fit = DataSet::new(xs, ys).and_then(|data| fit_discrete_normal(&data, job.lambda, job.basis_degree));
        let Ok(fit) = fit else {
            skipped_dates.push(t);
            continue;
        };
        for &p in &itm {
            let s = paths.at(p, t);
            let exercise = payoff(s);
            if exercise > fit.predict_unchecked(s / k) {
                value[p] = exercise;
            }
        }
    }
    value.iter_mut().for_each(|v| *v *= disc);
    skipped_dates.reverse();

    let (continuation, se) = mean_and_se(&value);
    let (european, european_se) = mean_and_se(&european);
    let immediate = payoff(job.gbm.s0);
    let exercise_at_start = immediate > continuation;
    let (price, std_error) = if exercise_at_start { (immediate, 0.0) } else { (continuation, se) };
    Ok(LsmcResult {
        price,
        std_error,
        european,
        european_std_error: european_se,
        skipped_dates,
        exercise_at_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn crr_american_put(s0: f64, k: f64, r: f64, sigma: f64, t: f64, steps: usize) -> f64 {
        let dt = t / steps as f64;
        let u = (sigma * dt.sqrt()).exp();
        let d = 1.0 / u;
        let disc = (-r * dt).exp();
        let p = ((r * dt).exp() - d) / (u - d);
        let mut values: Vec<f64> = (0..=steps)
            .map(|j| (k - s0 * u.powi(j as i32) * d.powi((steps - j) as i32)).max(0.0))
            .collect();
        for i in (0..steps).rev() {
            for j in 0..=i {
                let s = s0 * u.powi(j as i32) * d.powi((i - j) as i32);
                let cont = disc * (p * values[j + 1] + (1.0 - p) * values[j]);
                values[j] = cont.max(k - s);
            }
        }
        values[0]
    }

    fn table_job(lambda: f64, paths: usize, seed: u64) -> LsmcJob {
        LsmcJob::new(GbmConfig::new(38.0, 0.05, 0.71, 1.0 / 6.0, 60, paths, seed), 48.0, lambda)
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let cfg = GbmConfig::new(50.0, 0.03, 0.0, 2.0, 8, 5, 1);
        let paths = simulate_paths(&cfg).unwrap();
        for p in 0..5 {
            for t in 0..=8 {
                assert_relative_eq!(paths.at(p, t), 50.0 * (0.03 * t as f64 * 0.25).exp(), max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn first_column_is_initial_price() {
        let paths = simulate_paths(&GbmConfig::new(38.0, 0.05, 0.71, 1.0 / 6.0, 60, 200, 9)).unwrap();
        assert_eq!(paths.paths(), 200);
        assert!((0..200).all(|p| paths.row(p)[0] == 38.0));
    }

    #[test]
    fn discounted_terminal_mean_is_initial_price() {
        let cfg = GbmConfig::new(100.0, 0.05, 0.3, 1.0, 1, 100_000, 2024);
        let paths = simulate_paths(&cfg).unwrap();
        let terminal: Vec<f64> = (0..cfg.paths).map(|p| paths.at(p, 1)).collect();
        let (mean, se) = mean_and_se(&terminal);
        let expected = 100.0 * 0.05_f64.exp();
        assert!((mean - expected).abs() <= 3.0 * se, "{mean} vs {expected} (se {se})");
    }

    #[test]
    fn paths_independent_of_thread_count() {
        let cfg = GbmConfig::new(38.0, 0.05, 0.71, 1.0 / 6.0, 30, 500, 77);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = serial.install(|| simulate_paths(&cfg).unwrap());
        let b = parallel.install(|| simulate_paths(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_and_budget() {
        assert!(GbmConfig::new(0.0, 0.05, 0.2, 1.0, 10, 10, 1).validate().is_err());
        assert!(GbmConfig::new(1.0, 0.05, -0.2, 1.0, 10, 10, 1).validate().is_err());
        assert!(GbmConfig::new(1.0, 0.05, 0.2, 0.0, 10, 10, 1).validate().is_err());
        assert!(GbmConfig::new(1.0, 0.05, 0.2, 1.0, 0, 10, 1).validate().is_err());
        let big = GbmConfig::new(1.0, 0.05, 0.2, 1.0, 1000, 10_001, 1);
        assert!(matches!(big.validate(), Err(Error::Usage(_))));
        let mut raised = big.clone();
        raised.budget = 20_000_000;
        assert!(raised.validate().is_ok());
        let mut job = table_job(0.75, 10, 1);
        job.strike = 0.0;
        assert!(price_american_put(&job).is_err());
        job.strike = 48.0;
        job.lambda = 3.0;
        assert!(price_american_put(&job).is_err());
    }

    #[test]
    fn same_seed_same_price_bitwise() {
        let a = price_american_put(&table_job(0.75, 2_000, 5)).unwrap();
        let b = price_american_put(&table_job(0.75, 2_000, 5)).unwrap();
        assert_eq!(a.price.to_bits(), b.price.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn american_dominates_european_and_intrinsic() {
        for lambda in [0.25, 0.5, 0.75, 1.0] {
            let res = price_american_put(&table_job(lambda, 4_000, 31)).unwrap();
            assert!(res.price >= res.european, "λ={lambda}: {res:?}");
            assert!(res.price >= 10.0 - 3.0 * res.std_error);
            assert!(res.std_error > 0.0 && res.std_error < 0.2);
        }
    }

    #[test]
    fn matches_binomial_reference() {
        // standard benchmark: S0=36, K=40, r=0.06, σ=0.2, T=1, 50 exercise dates
        let reference = crr_american_put(36.0, 40.0, 0.06, 0.2, 1.0, 2_000);
        assert!((reference - 4.487).abs() < 0.01, "{reference}");
        let job = LsmcJob::new(GbmConfig::new(36.0, 0.06, 0.2, 1.0, 50, 20_000, 3), 40.0, 1.0);
        let res = price_american_put(&job).unwrap();
        // regression-based policies are slightly sub-optimal, so allow a small bias
        assert!((res.price - reference).abs() <= 4.0 * res.std_error + 0.03, "{res:?} vs {reference}");
    }

    #[test]
    fn no_volatility_deep_in_the_money_exercises_now() {
        let job = LsmcJob::new(GbmConfig::new(38.0, 0.05, 0.0, 1.0 / 6.0, 60, 100, 1), 48.0, 0.75);
        let res = price_american_put(&job).unwrap();
        assert_eq!(res.price, 10.0);
        assert!(res.exercise_at_start);
        assert_eq!(res.std_error, 0.0);
    }

    #[test]
    fn out_of_the_money_dates_are_skipped() {
        let job = LsmcJob::new(GbmConfig::new(100.0, 0.05, 0.01, 0.1, 10, 50, 1), 10.0, 1.0);
        let res = price_american_put(&job).unwrap();
        assert_eq!(res.skipped_dates, (1..10).collect::<Vec<_>>());
        assert_eq!(res.price, 0.0);
    }
}
