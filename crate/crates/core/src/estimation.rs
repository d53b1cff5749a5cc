//! NPMLE for Poisson mixtures on a fixed support grid, and the Monte-Carlo
//! rate-study harness built on top of it.
//!
//! This module is pinned to `f64`: it draws samples and feeds the divergence
//! evaluators, neither of which benefits from generic precision.

use std::time::Instant;

use rayon::prelude::*;

use crate::divergences::{hellinger_sq_poisson, tv_gaussian, tv_poisson, w1_smoothed};
use crate::error::{CslError, Result};
use crate::measures::{derive_seed, grid_points, sample_poisson_mixture, ChannelParams, Prior};
use crate::scalar::Scalar;

/// Fixed-grid EM configuration.
#[derive(Debug, Clone, Copy)]
pub struct NpmleConfig {
    /// Uniform grid size on `[0, a]`, both endpoints included.
    pub grid_size: usize,
    pub max_iters: usize,
    /// Absolute per-sample log-likelihood gain below which EM may stop
    /// (subject to the first-order condition).
    pub loglik_tol: f64,
    /// Weights below this are zeroed and the rest renormalized on output.
    pub weight_floor: f64,
}

impl Default for NpmleConfig {
    fn default() -> Self {
        NpmleConfig {
            grid_size: 200,
            max_iters: 5000,
            loglik_tol: 1e-9,
            weight_floor: 1e-12,
        }
    }
}

impl NpmleConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(CslError::InvalidParams(
                "grid_size must be at least 2".into(),
            ));
        }
        if !(self.loglik_tol > 0.0) || !(self.weight_floor > 0.0) {
            return Err(CslError::InvalidParams(
                "loglik_tol and weight_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fitted mixing distribution plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct NpmleFit {
    /// Pruned, renormalized estimate on the support grid.
    pub prior: Prior<f64>,
    /// Final per-sample log-likelihood.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Max over all grid atoms of `(1/n) sum_i pmf(y_i; gamma x_j) / mix(y_i)`
    /// at the returned weights; `<= 1 + 10 loglik_tol` when converged.
    pub max_gradient: f64,
    /// Min of the same quantity over atoms that survived pruning; `~= 1`
    /// at a first-order optimum.
    pub min_supported_gradient: f64,
    /// False only when `max_iters` ran out before the stopping rule fired.
    pub converged: bool,
}

fn poisson_point_pmf(y: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if y == 0 { 1.0 } else { 0.0 };
    }
    let yf = y as f64;
    (-lambda + yf * lambda.ln() - Scalar::ln_gamma(yf + 1.0)).exp()
}

/// Nonnegative least squares `min |A x - b|, x >= 0` by Lawson-Hanson active
/// sets; `a` is row-major with `cols` columns. Dimensions here are tiny
/// (distinct counts x candidate atoms), so normal equations suffice.
fn nnls(a: &[Vec<f64>], b: &[f64], cols: usize) -> Vec<f64> {
    let rows = a.len();
    let mut x = vec![0.0f64; cols];
    let mut passive = vec![false; cols];
    let eps = 1e-12;
    for _ in 0..10 * cols.max(3) {
        // gradient of the active (zero) coordinates
        let resid: Vec<f64> = (0..rows)
            .map(|i| b[i] - a[i].iter().zip(&x).map(|(aij, xj)| aij * xj).sum::<f64>())
            .collect();
        let mut best = (eps, usize::MAX);
        for j in 0..cols {
            if passive[j] {
                continue;
            }
            let wj: f64 = (0..rows).map(|i| a[i][j] * resid[i]).sum();
            if wj > best.0 {
                best = (wj, j);
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        passive[best.1] = true;
        loop {
            // least squares on the passive set via normal equations
            let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
            let k = idx.len();
            let mut gram = vec![vec![0.0f64; k + 1]; k];
            for (p, &jp) in idx.iter().enumerate() {
                for (q, &jq) in idx.iter().enumerate() {
                    gram[p][q] = (0..rows).map(|i| a[i][jp] * a[i][jq]).sum();
                }
                gram[p][k] = (0..rows).map(|i| a[i][jp] * b[i]).sum();
            }
            // Gaussian elimination with partial pivoting
            for col in 0..k {
                let piv = (col..k)
                    .max_by(|&p, &q| gram[p][col].abs().partial_cmp(&gram[q][col].abs()).unwrap())
                    .unwrap();
                gram.swap(col, piv);
                if gram[col][col].abs() < 1e-300 {
                    gram[col][col] = 1e-300;
                }
                for row in 0..k {
                    if row != col {
                        let f = gram[row][col] / gram[col][col];
                        for c in col..=k {
                            gram[row][c] -= f * gram[col][c];
                        }
                    }
                }
            }
            let z: Vec<f64> = (0..k).map(|p| gram[p][k] / gram[p][p]).collect();
            if z.iter().all(|&v| v > 0.0) {
                for (p, &j) in idx.iter().enumerate() {
                    x[j] = z[p];
                }
                break;
            }
            // step toward z until the first coordinate hits zero, drop it
            let mut alpha = 1.0f64;
            for (p, &j) in idx.iter().enumerate() {
                if z[p] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[p]));
                }
            }
            for (p, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[p] - x[j]);
                if z[p] <= 0.0 && x[j] <= eps {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    x
}

/// Maximize `(1/n) sum_i log sum_j w_j pmf(y_i; gamma x_j)` over weights on a
/// uniform grid.
///
/// The base iteration is the multiplicative EM update `w_j <- w_j g_j` with
/// `g_j = (1/n) sum_i pmf(y_i; gamma x_j) / mix(y_i)`; because plain EM
/// approaches the first-order condition only sublinearly, each sweep is
/// followed by a constrained-Newton step (quadratic model of the likelihood
/// solved as a nonnegative least-squares problem over the current support
/// plus the gradient's local maxima, with a halving line search that keeps
/// the ascent monotone).
///
/// Stops when the per-sample log-likelihood gain drops below `loglik_tol`
/// *and* the first-order condition `max_j g_j <= 1 + 10 loglik_tol` holds,
/// or after `max_iters`. The log-likelihood is asserted nondecreasing.
pub fn npmle_fit(samples: &[u64], params: &ChannelParams<f64>, cfg: &NpmleConfig) -> Result<NpmleFit> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(CslError::InvalidParams("samples must be nonempty".into()));
    }
    let n = samples.len() as f64;

    // Collapse to distinct counts: desk-scale Poisson outputs repeat heavily,
    // and EM cost drops from O(n m) to O(|Y| m) per iteration.
    let y_max = *samples.iter().max().unwrap() as usize;
    let mut freq = vec![0.0f64; y_max + 1];
    for &y in samples {
        freq[y as usize] += 1.0 / n;
    }
    let distinct: Vec<(u64, f64)> = freq
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0)
        .map(|(y, &f)| (y as u64, f))
        .collect();

    let grid = grid_points(cfg.grid_size, params.a);
    let m = grid.len();
    // pmf_table[y_idx][j] = pmf(y; gamma x_j)
    let pmf_table: Vec<Vec<f64>> = distinct
        .iter()
        .map(|&(y, _)| grid.iter().map(|&x| poisson_point_pmf(y, params.gamma * x)).collect())
        .collect();
    for (row, &(y, _)) in pmf_table.iter().zip(&distinct) {
        if row.iter().all(|&p| p == 0.0) {
            return Err(CslError::LikelihoodDegenerate { sample: y });
        }
    }

    // (per-sample loglik, full-grid gradient, mixture mass per distinct y);
    // None if some observed count has zero mixture probability.
    let eval = |w: &[f64]| -> Option<(f64, Vec<f64>, Vec<f64>)> {
        let mut loglik = 0.0;
        let mut g = vec![0.0f64; m];
        let mut mixes = Vec::with_capacity(distinct.len());
        for (row, &(_, f)) in pmf_table.iter().zip(&distinct) {
            let mix: f64 = row.iter().zip(w).map(|(&p, &wj)| p * wj).sum();
            if mix <= 0.0 {
                return None;
            }
            mixes.push(mix);
            loglik += f * mix.ln();
            let scale = f / mix;
            for (gj, &p) in g.iter_mut().zip(row) {
                *gj += scale * p;
            }
        }
        Some((loglik, g, mixes))
    };
    let sqrt_f: Vec<f64> = distinct.iter().map(|&(_, f)| f.sqrt()).collect();

    let mut w = vec![1.0 / m as f64; m];
    let (mut loglik, mut g, _) = eval(&w).ok_or(CslError::LikelihoodDegenerate {
        sample: distinct[0].0,
    })?;
    let mut prev_loglik = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let max_g = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if iterations > 0
            && loglik - prev_loglik < cfg.loglik_tol
            && max_g <= 1.0 + 10.0 * cfg.loglik_tol
        {
            converged = true;
            break;
        }
        iterations += 1;
        prev_loglik = loglik;

        // EM sweep (never decreases the likelihood)
        for (wj, &gj) in w.iter_mut().zip(&g) {
            *wj *= gj;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wj| *wj /= total);
        let (ll_em, g_em, mixes) = eval(&w).expect("EM update keeps observed counts reachable");
        loglik = ll_em;
        g = g_em;

        // Newton step: quadratic model of the likelihood around the current
        // mixture, solved as NNLS over the support plus the gradient's local
        // maxima above 1, normalized, then a monotone halving line search.
        let mut cand: Vec<usize> = Vec::new();
        for j in 0..m {
            let local_max = (j == 0 || g[j] >= g[j - 1]) && (j + 1 == m || g[j] >= g[j + 1]);
            if w[j] > 0.0 || (local_max && g[j] > 1.0) {
                cand.push(j);
            }
        }
        let mut rows: Vec<Vec<f64>> = pmf_table
            .iter()
            .zip(&mixes)
            .zip(&sqrt_f)
            .map(|((row, &mix), &sf)| cand.iter().map(|&j| sf * row[j] / mix).collect())
            .collect();
        let mut b: Vec<f64> = sqrt_f.iter().map(|&sf| 2.0 * sf).collect();
        // penalty row pins the weight sum to 1 inside the subproblem; without
        // it the quadratic model inflates the total mass toward 2. Kept
        // moderate: the normal equations square it into the condition number,
        // and a 1e4 penalty floors the achievable gradient accuracy at 1e-8.
        let scale: f64 = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let penalty = 32.0 * (scale + 1.0);
        rows.push(vec![penalty; cand.len()]);
        b.push(penalty);
        let mut v = nnls(&rows, &b, cand.len());
        let vsum: f64 = v.iter().sum();
        if vsum > 0.0 {
            v.iter_mut().for_each(|vj| *vj /= vsum);
            let mut t = 1.0f64;
            for _ in 0..30 {
                let w_t: Vec<f64> = {
                    let mut w_t = w.iter().map(|&wj| (1.0 - t) * wj).collect::<Vec<_>>();
                    for (&j, &vj) in cand.iter().zip(&v) {
                        w_t[j] += t * vj;
                    }
                    w_t
                };
                if let Some((ll_t, g_t, _)) = eval(&w_t) {
                    if ll_t >= loglik {
                        w = w_t;
                        loglik = ll_t;
                        g = g_t;
                        break;
                    }
                }
                t *= 0.5;
            }
        }
        assert!(
            loglik >= prev_loglik - 1e-10 * (1.0 + loglik.abs()),
            "ascent property violated: {prev_loglik} -> {loglik}"
        );
    }

    let max_gradient = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_supported_gradient = g
        .iter()
        .zip(&w)
        .filter(|(_, &wj)| wj > cfg.weight_floor)
        .map(|(&gj, _)| gj)
        .fold(f64::INFINITY, f64::min);

    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (&x, &wj) in grid.iter().zip(&w) {
        if wj > cfg.weight_floor {
            atoms.push(x);
            weights.push(wj);
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|wj| *wj /= total);
    let prior = Prior::new(atoms, weights, params.a)?;

    Ok(NpmleFit {
        prior,
        log_likelihood: loglik,
        iterations,
        max_gradient,
        min_supported_gradient,
        converged,
    })
}

/// Smoothing-level schedule for the rate study.
#[derive(Debug, Clone, Copy)]
pub enum SigmaSchedule {
    /// Fixed level independent of `n`.
    Fixed(f64),
    /// `sigma(n) = (log n)^{-v/2}`: `1/sigma^2` grows polylogarithmically.
    PolyLog { v: f64 },
}

impl SigmaSchedule {
    pub fn sigma(&self, n: usize) -> f64 {
        match *self {
            SigmaSchedule::Fixed(s) => s,
            SigmaSchedule::PolyLog { v } => (n as f64).ln().powf(-v / 2.0),
        }
    }
}

/// One `(n, trial)` measurement of the NPMLE against the truth.
#[derive(Debug, Clone)]
pub struct RateStudyRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub hellinger_sq: f64,
    pub tv_poisson: f64,
    pub tv_gaussian: f64,
    pub w1_smoothed: f64,
    pub runtime_ms: f64,
}

/// CSV header matching [`RateStudyRecord::to_csv_row`].
pub const RATE_STUDY_CSV_HEADER: &str =
    "n,trial,seed,hellinger_sq,tv_poisson,tv_gaussian,w1_smoothed,runtime_ms";

impl RateStudyRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.n,
            self.trial,
            self.seed,
            self.hellinger_sq,
            self.tv_poisson,
            self.tv_gaussian,
            self.w1_smoothed,
            self.runtime_ms
        )
    }
}

/// Record plus the fit it came from, for optimality inspection.
#[derive(Debug, Clone)]
pub struct RateStudyOutcome {
    pub record: RateStudyRecord,
    pub fit: NpmleFit,
}

/// Full rate study returning fits alongside records. Trials run in parallel;
/// each owns an RNG stream derived from `(seed, job index)`, and results come
/// back in `(n, trial)` order regardless of scheduling, so the output is
/// independent of thread count.
pub fn rate_study_outcomes(
    true_prior: &Prior<f64>,
    params: &ChannelParams<f64>,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
    cfg: &NpmleConfig,
    sigma_schedule: Option<SigmaSchedule>,
) -> Result<Vec<RateStudyOutcome>> {
    if n_grid.is_empty() || trials == 0 {
        return Err(CslError::InvalidParams(
            "n_grid must be nonempty and trials >= 1".into(),
        ));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CslError::InvalidParams("n_grid must be increasing".into()));
    }
    let jobs: Vec<(usize, usize, u64)> = n_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            (0..trials).map(move |trial| {
                let index = (i * trials + trial) as u64;
                (n, trial, derive_seed(seed, index))
            })
        })
        .collect();
    jobs.into_par_iter()
        .map(|(n, trial, job_seed)| {
            let start = Instant::now();
            let samples = sample_poisson_mixture(true_prior, params, n, job_seed);
            let fit = npmle_fit(&samples, params, cfg)?;
            let sigma = sigma_schedule.map_or(params.sigma, |s| s.sigma(n));
            let p_sigma = params.with_sigma(sigma);
            let h2 = hellinger_sq_poisson(true_prior, &fit.prior, params)?;
            let tvp = tv_poisson(true_prior, &fit.prior, params)?;
            let tvg = tv_gaussian(true_prior, &fit.prior, &p_sigma)?;
            let w1s = w1_smoothed(true_prior, &fit.prior, sigma)?;
            let record = RateStudyRecord {
                n,
                trial,
                seed: job_seed,
                hellinger_sq: h2.value,
                tv_poisson: tvp.value,
                tv_gaussian: tvg.value,
                w1_smoothed: w1s.value,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            Ok(RateStudyOutcome { record, fit })
        })
        .collect()
}

/// [`rate_study_outcomes`] keeping only the records.
pub fn rate_study(
    true_prior: &Prior<f64>,
    params: &ChannelParams<f64>,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
    cfg: &NpmleConfig,
    sigma_schedule: Option<SigmaSchedule>,
) -> Result<Vec<RateStudyRecord>> {
    Ok(
        rate_study_outcomes(true_prior, params, n_grid, trials, seed, cfg, sigma_schedule)?
            .into_iter()
            .map(|o| o.record)
            .collect(),
    )
}

/// Which error metric of a study to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMetric {
    HellingerSq,
    TvPoisson,
    TvGaussian,
    W1Smoothed,
}

impl RateMetric {
    pub fn value(&self, r: &RateStudyRecord) -> f64 {
        match self {
            RateMetric::HellingerSq => r.hellinger_sq,
            RateMetric::TvPoisson => r.tv_poisson,
            RateMetric::TvGaussian => r.tv_gaussian,
            RateMetric::W1Smoothed => r.w1_smoothed,
        }
    }
}

impl std::fmt::Display for RateMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateMetric::HellingerSq => "hellinger_sq",
            RateMetric::TvPoisson => "tv_poisson",
            RateMetric::TvGaussian => "tv_gaussian",
            RateMetric::W1Smoothed => "w1_smoothed",
        })
    }
}

/// Ordinary least-squares slope (with standard error) of
/// `log(mean metric over trials)` against `log n`. Needs at least 3 distinct
/// sample sizes.
pub fn fit_rate_slope(records: &[RateStudyRecord], metric: RateMetric) -> Result<(f64, f64)> {
    let mut by_n: Vec<(usize, f64, f64)> = Vec::new(); // (n, sum, count)
    for r in records {
        let v = metric.value(r);
        match by_n.iter_mut().find(|(n, _, _)| *n == r.n) {
            Some(entry) => {
                entry.1 += v;
                entry.2 += 1.0;
            }
            None => by_n.push((r.n, v, 1.0)),
        }
    }
    if by_n.len() < 3 {
        return Err(CslError::InsufficientGrid);
    }
    by_n.sort_by_key(|&(n, _, _)| n);
    let points: Vec<(f64, f64)> = by_n
        .iter()
        .map(|&(n, sum, count)| {
            let mean = sum / count;
            if mean <= 0.0 {
                return Err(CslError::OutOfRange(format!(
                    "mean {metric} at n = {n} is not positive; log-log fit undefined"
                )));
            }
            Ok(((n as f64).ln(), mean.ln()))
        })
        .collect::<Result<_>>()?;
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if points.len() > 2 {
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}
