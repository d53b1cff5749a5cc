//! Transforms of priors and mixtures: Laplace transform at complex arguments,
//! characteristic function, z-transform of a Poisson mixture with a certified
//! series remainder, and max-modulus scans on circles.
//!
//! Atomic priors make the prior-side transforms exact finite sums; only the
//! z-transform (a truncated series) and the numerically integrated mixture
//! Laplace transform carry error terms.

use num_complex::Complex;

use crate::error::{CslError, Result};
use crate::measures::{poisson_pmf, ChannelParams, GaussianMixture, Prior};
use crate::quadrature::{gauss_legendre_panels, gaussian_tail_radius};
use crate::scalar::{real, Scalar};

/// Largest `|z|` accepted by [`z_transform_poisson`].
pub const Z_CAP: f64 = 4.0;

/// `L(pi)(s) = E[exp(sX)]`, exact for atomic priors.
pub fn laplace<T: Scalar>(prior: &Prior<T>, s: Complex<T>) -> Complex<T> {
    prior
        .atoms()
        .iter()
        .zip(prior.weights())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&x, &w)| {
            acc + (s * x).exp() * w
        })
}

/// Characteristic function `Psi_pi(t) = L(pi)(it)`.
pub fn char_fn<T: Scalar>(prior: &Prior<T>, t: T) -> Complex<T> {
    laplace(prior, Complex::new(T::zero(), t))
}

/// Half the Laplace-transform difference of a pair, the function whose
/// max-modulus circles drive the channel-comparison bounds.
pub fn laplace_diff_half<T: Scalar>(p1: &Prior<T>, p2: &Prior<T>, s: Complex<T>) -> Complex<T> {
    (laplace(p1, s) - laplace(p2, s)) * real::<T>(0.5)
}

/// Truncated z-transform of `Poi_gamma ∘ prior` with a certified remainder.
#[derive(Debug, Clone, Copy)]
pub struct ZTransform<T> {
    pub value: Complex<T>,
    /// Certified bound on the dropped series tail.
    pub remainder: T,
}

/// `Z(Poi_gamma ∘ pi)(z) = sum_n pmf[n] z^n`, summed over the certified PMF
/// table.
///
/// The remainder uses the geometric domination `pmf[n+1]/pmf[n] <= gamma*a/(n+1)`
/// past the truncation index; it is certifiable only while that ratio times
/// `|z|` stays below one and `|z| <= Z_CAP`.
pub fn z_transform_poisson<T: Scalar>(
    prior: &Prior<T>,
    params: &ChannelParams<T>,
    z: Complex<T>,
) -> Result<ZTransform<T>> {
    let z_abs = z.norm();
    if z_abs > real(Z_CAP) {
        return Err(CslError::RemainderNotCertifiable {
            z_abs: z_abs.to_f64().unwrap_or(f64::NAN),
            reason: format!("|z| exceeds the certification cap {Z_CAP}"),
        });
    }
    let table = poisson_pmf(prior, params)?;
    let n_max = table.n_max();
    let mut value = Complex::new(T::zero(), T::zero());
    let mut z_pow = Complex::new(T::one(), T::zero());
    for &p in &table.pmf {
        value = value + z_pow * p;
        z_pow = z_pow * z;
    }
    // pmf ratio bound past the table: gamma*a / (n_max + 2)
    let rho = params.gamma * params.a / real::<T>((n_max + 2) as f64);
    let r_geom = rho * z_abs;
    if r_geom >= T::one() {
        return Err(CslError::RemainderNotCertifiable {
            z_abs: z_abs.to_f64().unwrap_or(f64::NAN),
            reason: "geometric remainder ratio >= 1; extend the table".into(),
        });
    }
    // sum_{n > n_max} pmf[n] |z|^n <= tail_mass |z|^{n_max+1} / (1 - rho |z|)
    let remainder = table.tail_mass * z_abs.powi((n_max + 1) as i32) / (T::one() - r_geom);
    Ok(ZTransform { value, remainder })
}

/// Max modulus of half the Laplace-transform difference over the circle
/// `|s - center| = r`, by dense angular grid plus golden-section refinement
/// around the best arc. A lower estimate up to grid resolution.
pub fn annulus_max<T: Scalar>(
    pair: (&Prior<T>, &Prior<T>),
    center: Complex<T>,
    r: T,
    grid: usize,
) -> T {
    let grid = grid.max(64);
    let (p1, p2) = pair;
    let eval = |theta: T| -> T {
        let s = center + Complex::new(theta.cos(), theta.sin()) * r;
        laplace_diff_half(p1, p2, s).norm()
    };
    let two_pi = real::<T>(2.0 * std::f64::consts::PI);
    let step = two_pi / real::<T>(grid as f64);
    let mut best = T::zero();
    let mut best_theta = T::zero();
    for i in 0..grid {
        let theta = step * real::<T>(i as f64);
        let v = eval(theta);
        if v > best {
            best = v;
            best_theta = theta;
        }
    }
    // Golden-section refinement on the arc around the best grid point.
    let gr = real::<T>(0.618_033_988_749_894_9);
    let mut lo = best_theta - step;
    let mut hi = best_theta + step;
    for _ in 0..48 {
        let m1 = hi - (hi - lo) * gr;
        let m2 = lo + (hi - lo) * gr;
        if eval(m1) < eval(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(eval((lo + hi) * real::<T>(0.5)))
}

/// Laplace transform of `Gsn_sigma ∘ prior` at real `s`, by composite
/// Gauss-Legendre quadrature of `exp(st)` against the mixture density.
///
/// The domain is widened by `sigma^2 |s|` (the tilt shifts the Gaussian mass)
/// plus a tail radius certifying a neglected relative tail below `1e-9`.
pub fn laplace_gaussian_numeric<T: Scalar>(mix: &GaussianMixture<T>, s: T) -> T {
    let a = mix.prior.support_bound();
    let sigma = mix.sigma;
    let shift = sigma * sigma * s.abs();
    let t_rad = gaussian_tail_radius(sigma, real::<T>(1e-12)) + shift;
    let lo = -t_rad;
    let hi = a + t_rad;
    // Panel width ~ sigma/2 resolves the mixture; 16-point GL per panel.
    let width = (hi - lo).to_f64().unwrap();
    let panels = ((width / (sigma.to_f64().unwrap() / 2.0)).ceil() as usize).clamp(8, 4000);
    gauss_legendre_panels(|t| (s * t).exp() * mix.density(t), lo, hi, panels, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::random_prior;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> ChannelParams<f64> {
        ChannelParams::with_default_tol(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn laplace_examples() {
        let d = Prior::dirac(0.7, 1.0).unwrap();
        let v = laplace(&d, Complex::new(1.3, 0.0));
        assert!((v.re - (1.3f64 * 0.7).exp()).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let at_zero = laplace(&p, Complex::new(0.0, 0.0));
            assert!((at_zero.re - 1.0).abs() < 1e-14 && at_zero.im.abs() < 1e-15);
        }

        let two = Prior::two_point(0.0, 1.0, 0.5, 1.0).unwrap();
        let t = 1.7f64;
        let v = laplace(&two, Complex::new(0.0, t));
        assert!((v.re - 0.5 * (1.0 + t.cos())).abs() < 1e-14);
        assert!((v.im - 0.5 * t.sin()).abs() < 1e-14);
    }

    #[test]
    fn char_fn_is_unimodular_for_dirac_and_bounded() {
        let d = Prior::dirac(0.4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = 20.0 * (rand::Rng::random::<f64>(&mut rng) - 0.5);
            assert!((char_fn(&d, t).norm() - 1.0).abs() < 1e-12);
            let p = random_prior::<f64, _>(&mut rng, 1.0, 5);
            assert!(char_fn(&p, t).norm() <= 1.0 + 1e-12);
            // definitional consistency
            let via_laplace = laplace(&p, Complex::new(0.0, t));
            assert_eq!(char_fn(&p, t), via_laplace);
        }
    }

    #[test]
    fn z_transform_matches_laplace_identity() {
        let params = unit_params();
        let d1 = Prior::dirac(1.0, 1.0).unwrap();
        // z = 1: total mass
        let zt = z_transform_poisson(&d1, &params, Complex::new(1.0, 0.0)).unwrap();
        assert!((zt.value.re - 1.0).abs() < zt.remainder + 1e-10);
        // z = 0: constant term = L(pi)(-gamma)
        let zt = z_transform_poisson(&d1, &params, Complex::new(0.0, 0.0)).unwrap();
        assert!((zt.value.re - (-1.0f64).exp()).abs() < 1e-14);
        // delta_1, gamma = 1, z = 2 -> e
        let zt = z_transform_poisson(&d1, &params, Complex::new(2.0, 0.0)).unwrap();
        assert!(
            (zt.value.re - std::f64::consts::E).abs() <= zt.remainder + 1e-10,
            "value {} remainder {}",
            zt.value.re,
            zt.remainder
        );
    }

    #[test]
    fn z_transform_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let gamma = 0.5 + 1.5 * rand::Rng::random::<f64>(&mut rng);
            let params = ChannelParams::with_default_tol(1.0, 1.0, gamma).unwrap();
            let theta = 2.0 * std::f64::consts::PI * rand::Rng::random::<f64>(&mut rng);
            let rad = 2.0 * rand::Rng::random::<f64>(&mut rng);
            let z = Complex::new(rad * theta.cos(), rad * theta.sin());
            let zt = z_transform_poisson(&p, &params, z).unwrap();
            let direct = laplace(&p, (z - Complex::new(1.0, 0.0)) * gamma);
            assert!(
                (zt.value - direct).norm() <= zt.remainder + 1e-8,
                "gap {}",
                (zt.value - direct).norm()
            );
        }
    }

    #[test]
    fn z_transform_rejects_uncertifiable_radius() {
        let d1 = Prior::dirac(1.0, 1.0).unwrap();
        let params = unit_params();
        let err = z_transform_poisson(&d1, &params, Complex::new(5.0, 0.0));
        assert!(matches!(err, Err(CslError::RemainderNotCertifiable { .. })));
    }

    #[test]
    fn annulus_max_zero_for_identical_pair() {
        let p = Prior::two_point(0.2, 0.8, 0.4, 1.0).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let m = annulus_max((&p, &p), Complex::new(-1.0, 0.0), r, 128);
            assert_eq!(m, 0.0);
        }
    }

    #[test]
    fn annulus_max_monotone_in_radius() {
        // maximum modulus principle: M(r) nondecreasing in r
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let center = Complex::new(-1.0, 0.0);
            let mut prev = 0.0;
            for r in [0.5, 1.0, 1.7, 2.5] {
                let m = annulus_max((&p1, &p2), center, r, 256);
                assert!(m >= prev - 1e-9, "M({r}) = {m} < {prev}");
                prev = m;
            }
        }
    }

    #[test]
    fn annulus_max_dirac_pair_growth_bound() {
        // For priors on [0, a], |f(s)| <= exp(a (r - gamma)) on |s + gamma| = r.
        let a = 1.0;
        let gamma = 1.0;
        let p1 = Prior::dirac(0.0, a).unwrap();
        let p2 = Prior::dirac(a, a).unwrap();
        let m = annulus_max((&p1, &p2), Complex::new(-gamma, 0.0), gamma, 256);
        assert!(m <= 1.0 + 1e-12, "M(gamma) = {m}");
    }

    #[test]
    fn hadamard_convexity_of_log_annulus_max() {
        // log M(gamma e^u) is convex in u; midpoint check on random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gamma = 1.0;
        let center = Complex::new(-gamma, 0.0);
        for _ in 0..15 {
            let p1 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            let p2 = random_prior::<f64, _>(&mut rng, 1.0, 4);
            if p1 == p2 {
                continue;
            }
            let (u1, u3) = (0.2, 1.4);
            let u2 = 0.5 * (u1 + u3);
            let g = |u: f64| {
                annulus_max((&p1, &p2), center, gamma * u.exp(), 1024)
                    .max(1e-300)
                    .ln()
            };
            assert!(g(u2) <= 0.5 * (g(u1) + g(u3)) + 1e-3);
        }
    }

    #[test]
    fn lap_gauss_identity_random() {
        // L(Gsn ∘ pi)(s) = exp(s^2 sigma^2 / 2) L(pi)(s), numerically.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..40 {
            let p = random_prior::<f64, _>(&mut rng, 1.0, 5);
            let sigma = 0.5 + 1.5 * rand::Rng::random::<f64>(&mut rng);
            let s = 10.0 * (rand::Rng::random::<f64>(&mut rng) - 0.5);
            let mix = GaussianMixture::new(p.clone(), sigma).unwrap();
            let numeric = laplace_gaussian_numeric(&mix, s);
            let closed = (s * s * sigma * sigma / 2.0).exp() * laplace(&p, Complex::new(s, 0.0)).re;
            assert!(
                ((numeric - closed) / closed).abs() < 1e-6,
                "numeric {numeric} closed {closed}"
            );
        }
    }
}
