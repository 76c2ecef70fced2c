//! Cross-checks the closed-form skewness/excess-kurtosis values against
//! adaptive Simpson quadrature of each density. Catches sign or scaling
//! slips in the moment formulas independently of any expansion code.

use bwmean::distributions::{
    make_exponential, make_gamma, make_lognormal, make_uniform, standardized_moments,
    DistributionSpec,
};

// adaptive Simpson with absolute tolerance, recursion depth capped
fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn s<F: Fn(f64) -> f64>(f: &F, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = s(f, a, 0.5 * (a + m), m);
        let right = s(f, m, 0.5 * (m + b), b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    rec(&f, a, b, s(&f, a, m, b), tol, 50)
}

fn pdf(d: &DistributionSpec, x: f64) -> f64 {
    match d {
        DistributionSpec::Exponential { rate } => {
            if x < 0.0 {
                0.0
            } else {
                rate * (-rate * x).exp()
            }
        }
        DistributionSpec::Uniform { lo, hi } => {
            if x < *lo || x > *hi {
                0.0
            } else {
                1.0 / (hi - lo)
            }
        }
        DistributionSpec::Gamma { shape, scale } => {
            if x <= 0.0 {
                0.0
            } else {
                ((shape - 1.0) * (x / scale).ln() - x / scale
                    - bwmean::special::ln_gamma(*shape))
                .exp()
                    / scale
            }
        }
        DistributionSpec::LogNormal { log_mean, log_sd } => {
            if x <= 0.0 {
                0.0
            } else {
                let z = (x.ln() - log_mean) / log_sd;
                (-0.5 * z * z).exp() / (x * log_sd * bwmean::special::SQRT_2PI)
            }
        }
        DistributionSpec::FiniteDiscrete { .. } => unreachable!("no density"),
    }
}

// central moment of order j by quadrature over [lo, hi]
fn central_moment(d: &DistributionSpec, j: i32, lo: f64, hi: f64) -> f64 {
    let mu = d.mean();
    simpson(|x| (x - mu).powi(j) * pdf(d, x), lo, hi, 1e-12)
}

fn check(d: &DistributionSpec, lo: f64, hi: f64, tol: f64) {
    let m2 = central_moment(d, 2, lo, hi);
    let m3 = central_moment(d, 3, lo, hi);
    let m4 = central_moment(d, 4, lo, hi);
    assert!(
        (m2 - d.variance()).abs() <= tol * d.variance(),
        "{}: quadrature var {m2} vs {}",
        d.family_name(),
        d.variance()
    );
    let skew = m3 / m2.powf(1.5);
    let exkurt = m4 / (m2 * m2) - 3.0;
    let c = standardized_moments(d, 4).unwrap();
    let l3 = c.lambda(3);
    let l4 = c.lambda(4);
    assert!(
        (skew - l3).abs() <= tol * l3.abs().max(1.0),
        "{}: quadrature skew {skew} vs closed form {l3}",
        d.family_name()
    );
    assert!(
        (exkurt - l4).abs() <= tol * l4.abs().max(1.0),
        "{}: quadrature exkurt {exkurt} vs closed form {l4}",
        d.family_name()
    );
}

#[test]
fn exponential_moments_match_quadrature() {
    for &rate in &[0.5, 1.0, 3.0] {
        let d = make_exponential(rate).unwrap();
        check(&d, 0.0, 50.0 / rate, 1e-8);
    }
}

#[test]
fn uniform_moments_match_quadrature() {
    for &(lo, hi) in &[(0.0, 1.0), (-2.0, 5.0)] {
        let d = make_uniform(lo, hi).unwrap();
        check(&d, lo, hi, 1e-8);
    }
}

#[test]
fn gamma_moments_match_quadrature() {
    for &(shape, scale) in &[(0.7, 1.0), (2.0, 1.5), (4.0, 2.0), (9.0, 0.25)] {
        let d = make_gamma(shape, scale).unwrap();
        let hi = scale * (shape + 40.0 * shape.sqrt() + 60.0);
        check(&d, 0.0, hi, 1e-8);
    }
}

#[test]
fn lognormal_moments_match_quadrature() {
    // substitute x = exp(lm + ls z): the integrand becomes
    // (x(z) − μ)^j φ(z), smooth and centered, so the adaptive splitting
    // starts on the peak instead of the far tails
    for &(lm, ls) in &[(0.0f64, 0.25f64), (0.0, 0.5), (0.5, 0.4)] {
        let d = make_lognormal(lm, ls).unwrap();
        let mu = d.mean();
        let cm = |j: i32| {
            simpson(
                |z: f64| {
                    let x = (lm + ls * z).exp();
                    (x - mu).powi(j) * bwmean::edgeworth::normal_pdf(z)
                },
                -14.0,
                14.0,
                1e-12,
            )
        };
        let (m2, m3, m4) = (cm(2), cm(3), cm(4));
        assert!((m2 - d.variance()).abs() <= 1e-7 * d.variance(), "var {m2}");
        let c = standardized_moments(&d, 4).unwrap();
        let skew = m3 / m2.powf(1.5);
        let exkurt = m4 / (m2 * m2) - 3.0;
        assert!((skew - c.lambda(3)).abs() <= 1e-7 * c.lambda(3).abs(), "skew {skew}");
        assert!(
            (exkurt - c.lambda(4)).abs() <= 1e-7 * c.lambda(4).abs(),
            "exkurt {exkurt} vs {}",
            c.lambda(4)
        );
    }
}
