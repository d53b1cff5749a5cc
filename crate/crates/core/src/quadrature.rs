//! Quadrature primitives: adaptive Simpson with a rolled-up error estimate,
//! composite Gauss-Legendre panels, and Gaussian tail radii.

use crate::scalar::{real, Scalar};

/// Integral value plus the accumulated local error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
}

fn simpson<T: Scalar>(fa: T, fm: T, fb: T, h: T) -> T {
    h / real::<T>(6.0) * (fa + real::<T>(4.0) * fm + fb)
}

fn adaptive_step<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> QuadResult<T> {
    let half = real::<T>(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    let fifteen = real::<T>(15.0);
    if depth == 0 || delta.abs() <= fifteen * tol {
        return QuadResult {
            value: left + right + delta / fifteen,
            error: delta.abs() / fifteen,
        };
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, tol * half, depth - 1);
    let r = adaptive_step(f, m, b, fm, frm, fb, right, tol * half, depth - 1);
    QuadResult {
        value: l.value + r.value,
        error: l.error + r.error,
    }
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
///
/// The returned error is the usual Richardson estimate summed over accepted
/// panels; for smooth integrands it is a reliable (if not rigorous) bound.
pub fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: u32,
) -> QuadResult<T> {
    if a == b {
        return QuadResult {
            value: T::zero(),
            error: T::zero(),
        };
    }
    // Seed with a few panels so symmetric integrands cannot fool the
    // first refinement test.
    let n0 = 8;
    let h = (b - a) / real::<T>(n0 as f64);
    let mut total = QuadResult {
        value: T::zero(),
        error: T::zero(),
    };
    let panel_tol = tol / real::<T>(n0 as f64);
    for i in 0..n0 {
        let x0 = a + h * real::<T>(i as f64);
        let x1 = x0 + h;
        let m = (x0 + x1) * real::<T>(0.5);
        let (f0, fm, f1) = (f(x0), f(m), f(x1));
        let whole = simpson(f0, fm, f1, h);
        let part = adaptive_step(&f, x0, x1, f0, fm, f1, whole, panel_tol, max_depth);
        total.value = total.value + part.value;
        total.error = total.error + part.error;
    }
    total
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre integration with `panels` equal panels of the
/// given order.
pub fn gauss_legendre_panels<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    panels: usize,
    order: usize,
) -> T {
    let (nodes, weights) = gauss_legendre_nodes(order);
    let h = (b - a) / real::<T>(panels as f64);
    let half = real::<T>(0.5);
    let mut total = T::zero();
    for p in 0..panels {
        let x0 = a + h * real::<T>(p as f64);
        let c = x0 + h * half;
        let r = h * half;
        for (&u, &w) in nodes.iter().zip(&weights) {
            total = total + real::<T>(w) * r * f(c + r * real::<T>(u));
        }
    }
    total
}

/// Upper bound `sqrt(2/pi) * sigma * exp(-t^2 / (2 sigma^2)) / t` on the
/// `N(0, sigma^2)` upper tail beyond `t > 0`.
pub fn gaussian_tail_bound<T: Scalar>(sigma: T, t: T) -> T {
    let half = real::<T>(0.5);
    real::<T>((2.0 / std::f64::consts::PI).sqrt()) * sigma * (-half * (t / sigma) * (t / sigma)).exp()
        / t
}

/// Smallest radius `t` (up to 1% slack) with [`gaussian_tail_bound`] `<= target`.
pub fn gaussian_tail_radius<T: Scalar>(sigma: T, target: T) -> T {
    let mut t = sigma;
    while gaussian_tail_bound(sigma, t) > target {
        t = t * real::<T>(2.0);
    }
    // bisect back down
    let mut lo = t * real::<T>(0.5);
    let mut hi = t;
    for _ in 0..60 {
        let mid = (lo + hi) * real::<T>(0.5);
        if gaussian_tail_bound(sigma, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_known_integrals() {
        let q = adaptive_simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 40);
        assert!((q.value - 2.0).abs() < 1e-10);
        let q = adaptive_simpson(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-12, 40);
        assert!((q.value - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn simpson_error_estimate_covers_truth() {
        let q = adaptive_simpson(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-10, 40);
        let truth = std::f64::consts::FRAC_PI_4;
        assert!((q.value - truth).abs() <= q.error + 1e-13);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        // order-n GL is exact on degree 2n-1
        let val = gauss_legendre_panels(|x: f64| x.powi(7) + 3.0 * x * x, -1.0, 2.0, 1, 8);
        let truth = (2.0f64.powi(8) - 1.0) / 8.0 + (2.0f64.powi(3) + 1.0);
        assert!((val - truth).abs() < 1e-12);
    }

    #[test]
    fn gl_panels_gaussian_mass() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let val = gauss_legendre_panels(phi, -10.0, 10.0, 40, 16);
        assert!((val - 1.0).abs() < 1e-13);
    }

    #[test]
    fn tail_radius_is_tight() {
        for sigma in [0.5, 1.0, 2.0] {
            let t = gaussian_tail_radius(sigma, 1e-10);
            assert!(gaussian_tail_bound(sigma, t) <= 1e-10);
            assert!(gaussian_tail_bound(sigma, t * 0.95) > 1e-10);
        }
    }
}
