use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::gate::chsh_optimal;
use crate::sampling::{poisson, seeded_rng};

use super::reconstruct::mle_from_counts;
use super::{CountData, MeasurementSet, MleOptions, Sampling};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub f_mean: f64,
    pub f_std: f64,
    pub s_mean: f64,
    pub s_std: f64,
    /// Resamples whose reconstruction failed or did not converge.
    pub failures: usize,
    pub samples: usize,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.iter().all(|&x| x == v[0]) {
        return (v[0], 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Resamples every count as `Poisson(count)` (sample `i` on stream `i` of
/// `seed`), re-runs MLE, and collects fidelity and `S_max` statistics.
/// Exact-mode data carries no shot noise and is not resampled.
pub fn monte_carlo_errors(
    data: &CountData,
    set: &MeasurementSet,
    target: &DensityMatrix,
    n_samples: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<MonteCarloSummary> {
    if n_samples < 50 {
        return Err(Error::Parameter(format!("Monte Carlo needs at least 50 samples, got {n_samples}")));
    }
    let counts = data.aligned_counts(set)?;
    let results: Vec<Result<(f64, f64, bool)>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let sample: Vec<f64> = match data.sampling {
                Sampling::Exact => counts.clone(),
                Sampling::Poisson => {
                    let mut rng = seeded_rng(seed, i);
                    counts.iter().map(|&n| poisson(n, &mut rng)).collect()
                }
            };
            let r = mle_from_counts(&sample, set, opts)?;
            Ok((r.rho.fidelity(target)?, chsh_optimal(&r.rho)?.0, r.converged))
        })
        .collect();
    let mut fs = Vec::with_capacity(n_samples);
    let mut ss = Vec::with_capacity(n_samples);
    let mut failures = 0;
    for r in results {
        match r {
            Ok((f, s, conv)) => {
                fs.push(f);
                ss.push(s);
                failures += usize::from(!conv);
            }
            Err(_) => failures += 1,
        }
    }
    if fs.len() < 2 {
        return Err(Error::Estimation(format!("{failures} of {n_samples} resamples failed")));
    }
    let (f_mean, f_std) = mean_std(&fs);
    let (s_mean, s_std) = mean_std(&ss);
    Ok(MonteCarloSummary { f_mean, f_std, s_mean, s_std, failures, samples: n_samples })
}
