//! Trial scheduling and batch-means summaries.

use crate::error::Result;

/// Number of batches used for standard errors.
pub const N_BATCHES: usize = 20;

/// Per-trial `(numerator, denominator)` contributions for every metric slot.
/// A slot's value is `sum(num) / sum(den)` over trials.
#[derive(Debug, Clone)]
pub struct Slots {
    trials: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub value: f64,
    pub n: usize,
    pub stderr: f64,
}

impl Slots {
    pub fn new(trials: Vec<Vec<(f64, f64)>>) -> Self {
        Self { trials }
    }

    pub fn n_trials(&self) -> usize {
        self.trials.len()
    }

    /// Ratio estimate with a standard error from [`N_BATCHES`] contiguous batches.
    pub fn summary(&self, slot: usize) -> Summary {
        let n = self.trials.len();
        let ratio = |range: std::ops::Range<usize>| {
            let (num, den) = self.trials[range]
                .iter()
                .fold((0.0, 0.0), |(a, b), t| (a + t[slot].0, b + t[slot].1));
            num / den
        };
        let value = ratio(0..n);
        let batches = N_BATCHES.min(n);
        let stderr = if batches < 2 {
            0.0
        } else {
            let means: Vec<f64> = (0..batches)
                .map(|b| ratio(b * n / batches..(b + 1) * n / batches))
                .filter(|v| v.is_finite())
                .collect();
            let nb = means.len() as f64;
            if means.len() < 2 {
                0.0
            } else {
                let mu = means.iter().sum::<f64>() / nb;
                (means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (nb * (nb - 1.0))).sqrt()
            }
        };
        Summary { value, n, stderr }
    }
}

/// Runs `f(trial)` for `trial = 0..n` and keeps the results in trial order.
/// `workers = 0` uses every core; results do not depend on `workers`.
pub fn run_trials<F>(n: usize, workers: usize, n_slots: usize, f: F) -> Result<Slots>
where
    F: Fn(u64) -> Result<Vec<(f64, f64)>> + Sync,
{
    let trials = collect_trials(n, workers, &f)?;
    debug_assert!(trials.iter().all(|t| t.len() == n_slots));
    Ok(Slots::new(trials))
}

#[cfg(feature = "parallel")]
fn collect_trials<F>(n: usize, workers: usize, f: &F) -> Result<Vec<Vec<(f64, f64)>>>
where
    F: Fn(u64) -> Result<Vec<(f64, f64)>> + Sync,
{
    use rayon::prelude::*;
    if workers == 1 {
        return (0..n as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::error::CsiError::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn collect_trials<F>(n: usize, _workers: usize, f: &F) -> Result<Vec<Vec<(f64, f64)>>>
where
    F: Fn(u64) -> Result<Vec<(f64, f64)>> + Sync,
{
    (0..n as u64).map(f).collect()
}
