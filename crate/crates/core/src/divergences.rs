//! Divergences between channel outputs, each with a certified numerical error
//! bound rolled into the result.
//!
//! Poisson-side metrics are truncated series over the certified PMF tables;
//! Gaussian-side metrics use adaptive quadrature plus Gaussian tail bounds;
//! one-dimensional Wasserstein distances are CDF-area integrals (the exact
//! optimal coupling in 1-D).

use crate::error::Result;
use crate::measures::{
    poisson_pmf_truncated, poisson_truncation_index, ChannelParams, GaussianMixture,
    Prior,
};
use crate::quadrature::{adaptive_simpson, gaussian_tail_bound, gaussian_tail_radius};
use crate::scalar::{real, Scalar};
use crate::transforms::char_fn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceMethod {
    Series,
    Quadrature,
    Plancherel,
    CdfIntegral,
}

impl std::fmt::Display for DivergenceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DivergenceMethod::Series => "series",
            DivergenceMethod::Quadrature => "quadrature",
            DivergenceMethod::Plancherel => "plancherel",
            DivergenceMethod::CdfIntegral => "cdf-integral",
        };
        f.write_str(s)
    }
}

/// A divergence value together with a certified numerical error bound.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceResult<T> {
    pub value: T,
    pub error_bound: T,
    pub method: DivergenceMethod,
}

/// Which integral backs [`l2_gaussian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L2Method {
    /// Direct quadrature of the squared density difference.
    Direct,
    /// Weighted characteristic-function integral (Parseval route).
    Plancherel,
}

/// Exact TV between two atomic priors (not channel outputs).
pub fn tv_atomic<T: Scalar>(p1: &Prior<T>, p2: &Prior<T>) -> T {
    let half = real::<T>(0.5);
    let (a1, w1) = (p1.atoms(), p1.weights());
    let (a2, w2) = (p2.atoms(), p2.weights());
    let (mut i, mut j) = (0, 0);
    let mut sum = T::zero();
    while i < a1.len() || j < a2.len() {
        if j >= a2.len() || (i < a1.len() && a1[i] < a2[j]) {
            sum = sum + w1[i];
            i += 1;
        } else if i >= a1.len() || a2[j] < a1[i] {
            sum = sum + w2[j];
            j += 1;
        } else {
            sum = sum + (w1[i] - w2[j]).abs();
            i += 1;
            j += 1;
        }
    }
    half * sum
}

fn shared_tables<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
) -> Result<(Vec<T>, Vec<T>, T)> {
    let n_max = poisson_truncation_index(params.gamma * params.a, params.tol)?;
    let t1 = poisson_pmf_truncated(p1, params, n_max);
    let t2 = poisson_pmf_truncated(p2, params, n_max);
    let tails = t1.tail_mass + t2.tail_mass;
    Ok((t1.pmf, t2.pmf, tails))
}

/// TV between the Poisson-channel outputs, truncated series.
pub fn tv_poisson<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
) -> Result<DivergenceResult<T>> {
    let (pmf1, pmf2, tails) = shared_tables(p1, p2, params)?;
    let half = real::<T>(0.5);
    let sum = pmf1
        .iter()
        .zip(&pmf2)
        .fold(T::zero(), |acc, (&p, &q)| acc + (p - q).abs());
    Ok(DivergenceResult {
        value: half * sum,
        error_bound: half * tails,
        method: DivergenceMethod::Series,
    })
}

/// Squared Hellinger distance between the Poisson-channel outputs.
pub fn hellinger_sq_poisson<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
) -> Result<DivergenceResult<T>> {
    let (pmf1, pmf2, tails) = shared_tables(p1, p2, params)?;
    let sum = pmf1.iter().zip(&pmf2).fold(T::zero(), |acc, (&p, &q)| {
        let d = p.max(T::zero()).sqrt() - q.max(T::zero()).sqrt();
        acc + d * d
    });
    Ok(DivergenceResult {
        value: sum,
        error_bound: tails,
        method: DivergenceMethod::Series,
    })
}

/// TV between the Gaussian-channel outputs, adaptive quadrature on
/// `[-T, a+T]` with a certified tail.
pub fn tv_gaussian<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
) -> Result<DivergenceResult<T>> {
    let m1 = GaussianMixture::new(p1.clone(), params.sigma)?;
    let m2 = GaussianMixture::new(p2.clone(), params.sigma)?;
    let eighth = params.tol / real::<T>(8.0);
    let t_rad = gaussian_tail_radius(params.sigma, eighth);
    let half = real::<T>(0.5);
    let q = adaptive_simpson(
        |t| (m1.density(t) - m2.density(t)).abs(),
        -t_rad,
        params.a + t_rad,
        params.tol / real::<T>(10.0),
        40,
    );
    // Mass of each mixture outside the window is at most two one-sided tails.
    let tail = real::<T>(2.0) * gaussian_tail_bound(params.sigma, t_rad);
    Ok(DivergenceResult {
        value: half * q.value,
        error_bound: half * q.error + tail,
        method: DivergenceMethod::Quadrature,
    })
}

/// L2 distance between the Gaussian-channel outputs, by direct quadrature or
/// the characteristic-function route; the two agree within combined errors.
pub fn l2_gaussian<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
    method: L2Method,
) -> Result<DivergenceResult<T>> {
    let (sq, err, tag) = match method {
        L2Method::Direct => {
            let m1 = GaussianMixture::new(p1.clone(), params.sigma)?;
            let m2 = GaussianMixture::new(p2.clone(), params.sigma)?;
            let t_rad = gaussian_tail_radius(params.sigma, params.tol / real::<T>(8.0));
            let q = adaptive_simpson(
                |t| {
                    let d = m1.density(t) - m2.density(t);
                    d * d
                },
                -t_rad,
                params.a + t_rad,
                params.tol / real::<T>(10.0),
                40,
            );
            // densities outside the window are below the single-Gaussian tail
            // envelope; squared difference tail is dominated by the L1 tail
            // times the peak density.
            let peak = (real::<T>(2.0 * std::f64::consts::PI).sqrt() * params.sigma).recip();
            let tail = real::<T>(4.0) * gaussian_tail_bound(params.sigma, t_rad) * peak;
            (q.value, q.error + tail, DivergenceMethod::Quadrature)
        }
        L2Method::Plancherel => {
            let sigma2 = params.sigma * params.sigma;
            // |integrand| <= 4 exp(-sigma^2 t^2); truncate where the tail
            // integral drops below tol.
            let t_psi = (real::<T>(16.0 / std::f64::consts::PI) / params.tol).ln() / sigma2;
            let t_psi = t_psi.sqrt();
            let inv_2pi = real::<T>(0.5 / std::f64::consts::PI);
            let q = adaptive_simpson(
                |t| {
                    let d = char_fn(p1, t) - char_fn(p2, t);
                    (-sigma2 * t * t).exp() * d.norm_sqr()
                },
                -t_psi,
                t_psi,
                params.tol / real::<T>(10.0),
                40,
            );
            // int_{|t|>T} 4 e^{-sigma^2 t^2} dt <= 4 e^{-sigma^2 T^2}/(sigma^2 T)
            let tail = real::<T>(4.0) * (-sigma2 * t_psi * t_psi).exp() / (sigma2 * t_psi);
            (
                inv_2pi * q.value,
                inv_2pi * (q.error + tail),
                DivergenceMethod::Plancherel,
            )
        }
    };
    let sq = sq.max(T::zero());
    let value = sq.sqrt();
    // |sqrt(x ± e) - sqrt(x)| <= sqrt(x + e) - sqrt(x)
    let error_bound = (sq + err).sqrt() - value;
    Ok(DivergenceResult {
        value,
        error_bound,
        method: tag,
    })
}

/// Exact W1 between two atomic priors via the piecewise-constant CDF area.
pub fn w1<T: Scalar>(p1: &Prior<T>, p2: &Prior<T>) -> Result<DivergenceResult<T>> {
    let mut breaks: Vec<T> = p1.atoms().iter().chain(p2.atoms()).copied().collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut total = T::zero();
    for win in breaks.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        total = total + (p1.cdf(x0) - p2.cdf(x0)).abs() * (x1 - x0);
    }
    Ok(DivergenceResult {
        value: total,
        error_bound: T::zero(),
        method: DivergenceMethod::CdfIntegral,
    })
}

/// Gaussian-smoothed W1: the W1 distance between `Gsn_sigma ∘ p1` and
/// `Gsn_sigma ∘ p2`, computed as the CDF-difference area on `[-T, a+T]`.
pub fn w1_smoothed<T: Scalar>(p1: &Prior<T>, p2: &Prior<T>, sigma: T) -> Result<DivergenceResult<T>> {
    let tol = real::<T>(1e-10);
    let a = p1.support_bound().max(p2.support_bound());
    let m1 = GaussianMixture::new(p1.clone(), sigma)?;
    let m2 = GaussianMixture::new(p2.clone(), sigma)?;
    // Both CDFs are below Phi(t/sigma) on the left and above 1 - Phi((a-t)/sigma)
    // on the right, so |F1 - F2| integrated beyond the window is at most
    // sigma * phi(T/sigma) per side.
    let mut t_rad = sigma;
    let side_tail = |t: T| -> T {
        sigma * (-(t / sigma) * (t / sigma) * real::<T>(0.5)).exp()
            / real::<T>((2.0 * std::f64::consts::PI).sqrt())
    };
    while side_tail(t_rad) > tol / real::<T>(4.0) {
        t_rad = t_rad + sigma;
    }
    let q = adaptive_simpson(
        |t| (m1.cdf(t) - m2.cdf(t)).abs(),
        -t_rad,
        a + t_rad,
        tol / real::<T>(10.0),
        40,
    );
    Ok(DivergenceResult {
        value: q.value,
        error_bound: q.error + real::<T>(2.0) * side_tail(t_rad),
        method: DivergenceMethod::CdfIntegral,
    })
}

/// Convenience: TV of the Poisson outputs by brute-force summation to a fixed
/// index, no certification. Test oracle against [`tv_poisson`].
pub fn tv_poisson_bruteforce<T: Scalar>(
    p1: &Prior<T>,
    p2: &Prior<T>,
    params: &ChannelParams<T>,
    n_terms: usize,
) -> T {
    let mut sum = T::zero();
    for n in 0..n_terms {
        let term = |p: &Prior<T>| {
            p.atoms()
                .iter()
                .zip(p.weights())
                .fold(T::zero(), |acc, (&x, &w)| {
                    let lambda = params.gamma * x;
                    if lambda.is_zero() {
                        return if n == 0 { acc + w } else { acc };
                    }
                    let nf = real::<T>(n as f64);
                    acc + w * (nf * lambda.ln() - lambda - (nf + T::one()).ln_gamma()).exp()
                })
        };
        sum = sum + (term(p1) - term(p2)).abs();
    }
    sum * real::<T>(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{random_close_pair, random_prior};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(a: f64, sigma: f64, gamma: f64) -> ChannelParams<f64> {
        ChannelParams::with_default_tol(a, sigma, gamma).unwrap()
    }

    #[test]
    fn tv_poisson_identical_is_zero() {
        let p = Prior::two_point(0.2, 0.8, 0.4, 1.0).unwrap();
        let r = tv_poisson(&p, &p, &params(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn tv_poisson_dirac_shift_bracket() {
        // Bracket for delta_t vs delta_{t+eps} with gamma = 1:
        // lower (e^{-t}/2)(1 - e^{-eps}) from the PMF at 0, upper eps.
        let (t, eps) = (1.0, 0.1);
        let p1 = Prior::dirac(t, 2.0).unwrap();
        let p2 = Prior::dirac(t + eps, 2.0).unwrap();
        let r = tv_poisson(&p1, &p2, &params(2.0, 1.0, 1.0)).unwrap();
        let lower = 0.5 * (-t).exp() * (1.0 - (-eps).exp());
        assert!(lower > 0.0175 && lower < 0.0176); // sanity on the constant
        assert!(r.value + r.error_bound >= lower);
        assert!(r.value - r.error_bound <= eps);
    }

    #[test]
    fn tv_poisson_matches_bruteforce_oracle() {
        let p1 = Prior::dirac(1.0, 2.0).unwrap();
        let p2 = Prior::dirac(1.1, 2.0).unwrap();
        let pr = params(2.0, 1.0, 1.0);
        let fast = tv_poisson(&p1, &p2, &pr).unwrap();
        let oracle = tv_poisson_bruteforce(&p1, &p2, &pr, 200);
        assert!((fast.value - oracle).abs() <= 1e-10);
    }

    #[test]
    fn tv_gaussian_dirac_shift_closed_form() {
        // TV(N(0,1), N(eps,1)) = 2 Phi(eps/2) - 1
        let eps = 0.1;
        let p1 = Prior::dirac(0.0, 1.0).unwrap();
        let p2 = Prior::dirac(eps, 1.0).unwrap();
        let r = tv_gaussian(&p1, &p2, &params(1.0, 1.0, 1.0)).unwrap();
        let closed = 2.0 * (eps / 2.0).std_normal_cdf() - 1.0;
        assert!((r.value - closed).abs() <= r.error_bound + 1e-9, "{} vs {closed}", r.value);
        // asymptotic form eps/sqrt(2 pi) within 0.5%
        let asym = eps / (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value - asym).abs() / asym < 0.005);
    }

    #[test]
    fn hellinger_examples() {
        let pr = params(1.0, 1.0, 1.0);
        let p = Prior::dirac(0.5, 1.0).unwrap();
        assert_eq!(hellinger_sq_poisson(&p, &p, &pr).unwrap().value, 0.0);

        // TV <= H = sqrt(H^2)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let tv = tv_poisson(&p1, &p2, &pr).unwrap();
            let h2 = hellinger_sq_poisson(&p1, &p2, &pr).unwrap();
            assert!(tv.value <= (h2.value + h2.error_bound).sqrt() + tv.error_bound + 1e-12);
            assert!(h2.value <= 2.0 + h2.error_bound);
            assert!(tv.value <= 1.0 + tv.error_bound);
        }

        // delta_0 vs delta_1 against a direct series oracle
        let p0 = Prior::dirac(0.0, 1.0).unwrap();
        let p1 = Prior::dirac(1.0, 1.0).unwrap();
        let h2 = hellinger_sq_poisson(&p0, &p1, &pr).unwrap();
        // H^2 = 2 - 2 sum_n sqrt(pmf0[n] pmf1[n]); pmf0 = delta at n=0
        let oracle = 2.0 - 2.0 * (1.0f64 * (-1.0f64).exp()).sqrt();
        assert!((h2.value - oracle).abs() < 1e-10);
    }

    #[test]
    fn l2_methods_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for i in 0..30 {
            let sigma = [0.5, 1.0, 2.0][i % 3];
            let pr = params(1.0, sigma, 1.0);
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let d = l2_gaussian(&p1, &p2, &pr, L2Method::Direct).unwrap();
            let pl = l2_gaussian(&p1, &p2, &pr, L2Method::Plancherel).unwrap();
            assert!(
                (d.value - pl.value).abs() <= 1e-7,
                "direct {} plancherel {}",
                d.value,
                pl.value
            );
        }
    }

    #[test]
    fn l2_dirac_pair_closed_form() {
        // L2^2 = (1/(sqrt(pi) 2 sigma)) * 2 (1 - exp(-d^2/(4 sigma^2)))
        let (d, sigma) = (1.0, 1.0);
        let pr = params(1.0, sigma, 1.0);
        let p1 = Prior::dirac(0.0, 1.0).unwrap();
        let p2 = Prior::dirac(d, 1.0).unwrap();
        let l2 = l2_gaussian(&p1, &p2, &pr, L2Method::Direct).unwrap();
        let closed_sq = (1.0 / (std::f64::consts::PI.sqrt() * 2.0 * sigma))
            * 2.0
            * (1.0 - (-d * d / (4.0 * sigma * sigma)).exp());
        assert!((l2.value * l2.value - closed_sq).abs() < 1e-9);
    }

    #[test]
    fn w1_examples() {
        let a = 2.0f64;
        let p0 = Prior::dirac(0.0, a).unwrap();
        let px = Prior::dirac(1.3, a).unwrap();
        assert!((w1(&p0, &px).unwrap().value - 1.3).abs() < 1e-15);
        assert_eq!(w1(&px, &px).unwrap().value, 0.0);

        let two = Prior::two_point(0.0, 1.0, 0.5, a).unwrap();
        let mid = Prior::dirac(0.5, a).unwrap();
        assert!((w1(&two, &mid).unwrap().value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn w1_smoothed_translation_and_dominance() {
        let a = 2.0f64;
        let p0 = Prior::dirac(0.0, a).unwrap();
        let px = Prior::dirac(1.2, a).unwrap();
        for sigma in [0.5, 1.0, 2.0] {
            let r = w1_smoothed(&p0, &px, sigma).unwrap();
            assert!((r.value - 1.2).abs() <= r.error_bound + 1e-8, "{}", r.value);
        }
        let same = w1_smoothed(&px, &px, 1.0).unwrap();
        assert!(same.value <= same.error_bound + 1e-10);

        // smoothing never increases W1 between mixtures of the same shapes
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let exact = w1(&p1, &p2).unwrap().value;
            let sm = w1_smoothed(&p1, &p2, 1.0).unwrap();
            assert!(sm.value <= exact + sm.error_bound + 1e-8);
        }
    }

    #[test]
    fn w1_smoothed_monotone_in_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let mut prev = w1(&p1, &p2).unwrap().value;
            for sigma in [0.5, 1.0, 2.0] {
                let cur = w1_smoothed(&p1, &p2, sigma).unwrap();
                assert!(cur.value <= prev + cur.error_bound + 1e-8);
                prev = cur.value;
            }
        }
    }

    #[test]
    fn data_processing_inequality() {
        let pr = params(1.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let (p1, p2) = random_close_pair::<f64, _>(&mut rng, 1.0, 5, 0.2);
            let input_tv = tv_atomic(&p1, &p2);
            let poi = tv_poisson(&p1, &p2, &pr).unwrap();
            let gsn = tv_gaussian(&p1, &p2, &pr).unwrap();
            assert!(poi.value <= input_tv + poi.error_bound + pr.tol);
            assert!(gsn.value <= input_tv + gsn.error_bound + pr.tol);
        }
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let pr = params(1.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let p3 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let d = |x: &Prior<f64>, y: &Prior<f64>| tv_poisson(x, y, &pr).unwrap();
            let (d12, d21) = (d(&p1, &p2), d(&p2, &p1));
            assert!((d12.value - d21.value).abs() <= d12.error_bound + d21.error_bound + 1e-14);
            let (d13, d32) = (d(&p1, &p3), d(&p3, &p2));
            assert!(
                d12.value
                    <= d13.value
                        + d32.value
                        + d12.error_bound
                        + d13.error_bound
                        + d32.error_bound
                        + 1e-12
            );
        }
    }
}
