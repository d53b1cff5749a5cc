//! Command drivers. Every command builds its complete output in memory and
//! only then hands it back for writing, so a validation failure never leaves
//! a partial file behind.

use anyhow::{anyhow, bail, Result};
use csl_core::bounds::{theorem1_bound, theorem1_bound_ell, theorem2_bound, BOUND_REPORT_CSV_HEADER};
use csl_core::divergences::{
    hellinger_sq_poisson, l2_gaussian, tv_atomic, tv_gaussian, tv_poisson, w1, w1_smoothed,
    L2Method,
};
use csl_core::estimation::{
    fit_rate_slope, npmle_fit, rate_study, NpmleConfig, RateMetric, SigmaSchedule,
    RATE_STUDY_CSV_HEADER,
};
use csl_core::measures::{derive_seed, random_close_pair, sample_poisson_mixture};
use csl_core::DivergenceResult;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::csvfmt::{document, fmt};
use crate::svg::{trend_plot, TrendPoint};

/// Files (name, contents) plus a human summary for stdout.
pub struct CommandOutput {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

fn seed_of(cfg: &Config, seed_override: Option<u64>) -> Result<u64> {
    let from_cfg: Option<u64> = cfg.get("seed")?;
    Ok(seed_override.or(from_cfg).unwrap_or(0))
}

fn npmle_config(cfg: &Config) -> Result<NpmleConfig> {
    let d = NpmleConfig::default();
    Ok(NpmleConfig {
        grid_size: cfg.get_or("grid_size", d.grid_size)?,
        max_iters: cfg.get_or("max_iters", d.max_iters)?,
        loglik_tol: cfg.get_or("loglik_tol", d.loglik_tol)?,
        weight_floor: cfg.get_or("weight_floor", d.weight_floor)?,
    })
}

pub const DIVERGENCE_CSV_HEADER: &str = "metric,value,error_bound,method";
const ALL_METRICS: &[&str] = &[
    "tv_atomic",
    "tv_poisson",
    "hellinger_sq",
    "tv_gaussian",
    "l2_gaussian",
    "w1",
    "w1_smoothed",
];

pub fn cmd_divergence(cfg: &Config, seed_override: Option<u64>) -> Result<CommandOutput> {
    let _ = seed_of(cfg, seed_override)?; // deterministic command; seed accepted for uniformity
    let params = cfg.channel_params()?;
    let p1 = cfg.prior("prior1", params.a)?;
    let p2 = cfg.prior("prior2", params.a)?;
    let metrics: Vec<String> = cfg
        .get_list("metrics")?
        .unwrap_or_else(|| ALL_METRICS.iter().map(|s| s.to_string()).collect());
    cfg.finish()?;

    let mut rows = Vec::new();
    for metric in &metrics {
        let r: DivergenceResult = match metric.as_str() {
            "tv_atomic" => DivergenceResult {
                value: tv_atomic(&p1, &p2),
                error_bound: 0.0,
                method: csl_core::divergences::DivergenceMethod::Series,
            },
            "tv_poisson" => tv_poisson(&p1, &p2, &params)?,
            "hellinger_sq" => hellinger_sq_poisson(&p1, &p2, &params)?,
            "tv_gaussian" => tv_gaussian(&p1, &p2, &params)?,
            "l2_gaussian" => l2_gaussian(&p1, &p2, &params, L2Method::Plancherel)?,
            "w1" => w1(&p1, &p2)?,
            "w1_smoothed" => w1_smoothed(&p1, &p2, params.sigma)?,
            other => bail!("unknown metric `{other}` (expected one of {ALL_METRICS:?})"),
        };
        rows.push(format!(
            "{metric},{},{},{}",
            fmt(r.value),
            fmt(r.error_bound),
            r.method
        ));
    }
    Ok(CommandOutput {
        files: vec![("divergence.csv".into(), document(DIVERGENCE_CSV_HEADER, &rows))],
        summary: format!("{} metric(s) computed", rows.len()),
    })
}

pub fn cmd_bounds(cfg: &Config, seed_override: Option<u64>) -> Result<CommandOutput> {
    let _ = seed_of(cfg, seed_override)?;
    let params = cfg.channel_params()?;
    let ells: Vec<f64> = match (cfg.get_list::<f64>("ell_grid")?, cfg.get_list::<f64>("epsilon_grid")?) {
        (Some(ells), None) => ells,
        (None, Some(epsilons)) => epsilons
            .into_iter()
            .map(|e| {
                if e > 0.0 && e < 1.0 {
                    Ok(-e.ln())
                } else {
                    Err(anyhow!("epsilon_grid entries must lie in (0, 1), got {e}"))
                }
            })
            .collect::<Result<_>>()?,
        (Some(_), Some(_)) => bail!("give either ell_grid or epsilon_grid, not both"),
        (None, None) => bail!("missing required key `ell_grid` (log(1/epsilon) values) or `epsilon_grid`"),
    };
    cfg.finish()?;

    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for &ell in &ells {
        match theorem1_bound_ell(ell, &params) {
            Ok(report) => rows.push(report.to_csv_row()),
            Err(e) => {
                log::warn!("ell = {ell}: inadmissible, row skipped: {e}");
                skipped += 1;
            }
        }
    }
    Ok(CommandOutput {
        files: vec![("bounds.csv".into(), document(BOUND_REPORT_CSV_HEADER, &rows))],
        summary: format!("{} bound row(s), {skipped} inadmissible", rows.len()),
    })
}

pub const VERIFY_CSV_HEADER: &str =
    "pair,tv_poisson,tv_gaussian,theorem1_bound,ratio1,theorem2_bound,ratio2";

pub fn cmd_verify(cfg: &Config, seed_override: Option<u64>) -> Result<CommandOutput> {
    let seed = seed_of(cfg, seed_override)?;
    let params = cfg.channel_params()?;
    let pairs: usize = cfg.get_or("pairs", 200)?;
    let max_atoms: usize = cfg.get_or("max_atoms", 5)?;
    let scale: f64 = cfg.get_or("scale", 0.05)?;
    cfg.finish()?;

    let mut rows = Vec::new();
    let mut k1 = 0.0f64;
    let mut k2 = 0.0f64;
    for i in 0..pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let (p1, p2) = random_close_pair(&mut rng, params.a, max_atoms, scale);
        let tvp = tv_poisson(&p1, &p2, &params)?;
        let tvg = tv_gaussian(&p1, &p2, &params)?;

        // forward: Poisson closeness must force Gaussian closeness
        let eps1 = tvp.value + tvp.error_bound;
        let bound1 = if eps1 > 0.0 && eps1 < 1.0 {
            theorem1_bound(eps1, &params)?.tv_bound
        } else {
            f64::INFINITY
        };
        let ratio1 = if tvg.value == 0.0 { 0.0 } else { tvg.value / bound1 };

        // reverse: Gaussian closeness must force Poisson closeness
        let eps2 = tvg.value + tvg.error_bound;
        let bound2 = if eps2 > 0.0 && eps2 < 1.0 {
            theorem2_bound(eps2, &params)?
        } else {
            f64::INFINITY
        };
        let ratio2 = if tvp.value == 0.0 { 0.0 } else { tvp.value / bound2 };

        k1 = k1.max(ratio1);
        k2 = k2.max(ratio2);
        rows.push(format!(
            "{i},{},{},{},{},{},{}",
            fmt(tvp.value),
            fmt(tvg.value),
            fmt(bound1),
            fmt(ratio1),
            fmt(bound2),
            fmt(ratio2)
        ));
    }
    Ok(CommandOutput {
        files: vec![("verify.csv".into(), document(VERIFY_CSV_HEADER, &rows))],
        summary: format!(
            "{pairs} pair(s); family constants: K1 = max ratio1 = {k1:.6e}, K2 = max ratio2 = {k2:.6e}"
        ),
    })
}

pub const NPMLE_CSV_HEADER: &str = "atom,weight";

pub fn cmd_npmle(cfg: &Config, seed_override: Option<u64>) -> Result<CommandOutput> {
    let seed = seed_of(cfg, seed_override)?;
    let params = cfg.channel_params()?;
    let truth = cfg.prior("prior", params.a)?;
    let n: usize = cfg.require("n")?;
    let ncfg = npmle_config(cfg)?;
    cfg.finish()?;

    let samples = sample_poisson_mixture(&truth, &params, n, seed);
    let fit = npmle_fit(&samples, &params, &ncfg)?;
    let rows: Vec<String> = fit
        .prior
        .atoms()
        .iter()
        .zip(fit.prior.weights())
        .map(|(&x, &w)| format!("{},{}", fmt(x), fmt(w)))
        .collect();
    Ok(CommandOutput {
        files: vec![("npmle.csv".into(), document(NPMLE_CSV_HEADER, &rows))],
        summary: format!(
            "fit on {n} samples: {} atom(s), loglik {:.12}, {} iteration(s), max gradient {:.12}, converged {}",
            fit.prior.len(),
            fit.log_likelihood,
            fit.iterations,
            fit.max_gradient,
            fit.converged
        ),
    })
}

pub fn parse_metric(name: &str) -> Result<RateMetric> {
    Ok(match name {
        "hellinger_sq" => RateMetric::HellingerSq,
        "tv_poisson" => RateMetric::TvPoisson,
        "tv_gaussian" => RateMetric::TvGaussian,
        "w1_smoothed" => RateMetric::W1Smoothed,
        other => bail!(
            "unknown metric `{other}` (expected hellinger_sq, tv_poisson, tv_gaussian, or w1_smoothed)"
        ),
    })
}

pub fn cmd_rate_study(cfg: &Config, seed_override: Option<u64>) -> Result<CommandOutput> {
    let seed = seed_of(cfg, seed_override)?;
    let params = cfg.channel_params()?;
    let truth = cfg.prior("prior", params.a)?;
    let n_grid: Vec<usize> = cfg.require_list("n_grid")?;
    let trials: usize = cfg.get_or("trials", 1)?;
    let ncfg = npmle_config(cfg)?;
    let metric = parse_metric(&cfg.get_or("metric", "hellinger_sq".to_string())?)?;
    let schedule = cfg
        .get::<f64>("sigma_polylog_v")?
        .map(|v| SigmaSchedule::PolyLog { v });
    cfg.finish()?;

    let records = rate_study(&truth, &params, &n_grid, trials, seed, &ncfg, schedule)?;
    let rows: Vec<String> = records.iter().map(|r| r.to_csv_row()).collect();
    let (slope, slope_stderr) = fit_rate_slope(&records, metric)?;

    let points: Vec<TrendPoint> = n_grid
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| metric.value(r))
                .collect();
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            TrendPoint {
                n: n as f64,
                mean,
                stderr: (var / k).sqrt(),
            }
        })
        .collect();
    let plot = trend_plot(&points, slope, slope_stderr, &metric.to_string());

    Ok(CommandOutput {
        files: vec![
            ("rate-study.csv".into(), document(RATE_STUDY_CSV_HEADER, &rows)),
            ("rate-study.svg".into(), plot),
        ],
        summary: format!(
            "{} record(s); {metric} log-log slope {slope:.6} +- {slope_stderr:.6}",
            records.len()
        ),
    })
}
