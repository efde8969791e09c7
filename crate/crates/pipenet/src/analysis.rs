//! Post-processing: decay-rate fits on energy histories, spectral
//! abscissa, Gram conditioning of eigenfunction families, and the trend
//! statistic used to check asymptotic error sequences.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fem::Trajectory;
use crate::model::{energy_inner_product, Params};
use crate::numerics;
use crate::spectral::EigenRecord;

/// Least-squares fit of `log E(t) = 2 * rate * t + intercept`.
///
/// `rate` is the semigroup growth rate (half the energy slope), so a
/// trajectory dominated by one eigenmode fits `rate = Re(lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    /// Time window the final fit used.
    pub window: [f64; 2],
    /// Coefficient of determination on the log-energy samples.
    pub r_squared: f64,
}

/// Fits an exponential decay rate to a trajectory's energy history.
///
/// The first fifth of the horizon is discarded to let transients clear,
/// a preliminary fit produces a rate estimate, and the window start is
/// then pushed to `2 / |rate|` (one refinement pass) so the fit sees at
/// least two e-foldings' worth of settling before it trusts the data.
/// Fails if the energy is not strictly positive on the window.
pub fn estimate_decay_rate(traj: &Trajectory) -> Result<DecayFit> {
    let times = &traj.times;
    if times.len() < 8 {
        return Err(Error::InvalidArgument("trajectory too short to fit a decay rate"));
    }
    let t_end = *times.last().unwrap();
    let t0 = times[0] + 0.2 * (t_end - times[0]);
    let first = fit_window(traj, t0, t_end)?;
    let settled = 2.0 / first.rate.abs().max(1e-12);
    // Keep the tail fifth of the horizon as the minimum usable window.
    let t0_refined = settled.clamp(t0, times[0] + 0.8 * (t_end - times[0]));
    fit_window(traj, t0_refined, t_end)
}

/// Least-squares fit of the log energies over `[t0, t1]`.
fn fit_window(traj: &Trajectory, t0: f64, t1: f64) -> Result<DecayFit> {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &e) in traj.times.iter().zip(&traj.energy) {
        if t < t0 || t > t1 {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::NonpositiveEnergy { t });
        }
        ts.push(t);
        ys.push(e.ln());
    }
    if ts.len() < 3 {
        return Err(Error::InvalidArgument("fit window holds fewer than three samples"));
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_t = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        cov += (t - t_mean) * (y - y_mean);
        var_t += (t - t_mean).powi(2);
    }
    if var_t == 0.0 {
        return Err(Error::InvalidArgument("fit window has no time spread"));
    }
    let slope = cov / var_t;
    let intercept = y_mean - slope * t_mean;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        ss_res += (y - slope * t - intercept).powi(2);
        ss_tot += (y - y_mean).powi(2);
    }
    // A flat log-energy series (conservative run) is a perfect linear fit.
    let r_squared = if ss_tot <= 1e-28 * n { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DecayFit { rate: 0.5 * slope, intercept, window: [t0, t1], r_squared })
}

/// Largest real part over the records, or `None` for an empty set.
pub fn spectral_abscissa(records: &[EigenRecord]) -> Option<f64> {
    records.iter().map(|r| r.lambda.re).fold(None, |acc, re| {
        Some(acc.map_or(re, |a: f64| a.max(re)))
    })
}

/// Conditioning summary of the energy Gram matrix of an eigenfunction
/// family.
#[derive(Debug, Clone, Copy)]
pub struct GramReport {
    /// Number of eigenfunctions entering the Gram matrix.
    pub size: usize,
    /// Ratio of extreme Gram eigenvalues; infinite when the smallest is
    /// not positive.
    pub condition_number: f64,
    pub min_eigenvalue: f64,
}

/// Builds the energy Gram matrix of every eigenfunction carried by the
/// records and reports its conditioning.  A well-separated Riesz-basis
/// family keeps the condition number modest as the family grows.
pub fn gram_condition(records: &[EigenRecord], p: &Params) -> Result<GramReport> {
    let functions: Vec<_> = records.iter().flat_map(|r| r.eigenfunctions.iter()).collect();
    let size = functions.len();
    if size == 0 {
        return Err(Error::InvalidArgument("no eigenfunctions to form a Gram matrix"));
    }
    let mut gram = vec![vec![Complex64::ZERO; size]; size];
    for i in 0..size {
        for j in i..size {
            let entry = energy_inner_product(functions[i], functions[j], p)?.value;
            gram[i][j] = entry;
            gram[j][i] = entry.conj();
        }
    }
    let (eigs, _) = numerics::hermitian_eigen(&gram);
    let min_eigenvalue = eigs[0];
    let max_eigenvalue = *eigs.last().unwrap();
    let condition_number =
        if min_eigenvalue > 0.0 { max_eigenvalue / min_eigenvalue } else { f64::INFINITY };
    Ok(GramReport { size, condition_number, min_eigenvalue })
}

/// Kendall rank correlation of a sequence against its index:
/// `(concordant - discordant) / (n(n-1)/2)` over all pairs.  Near zero for
/// a trendless sequence, near one for a monotone increase; used to test
/// that scaled asymptotic errors do not grow with the mode number.
pub fn trend_kendall_tau(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = values[j] - values[i];
            score += if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}
