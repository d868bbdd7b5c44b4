use std::f64::consts::PI;

use statrs::function::{beta, gamma};

use super::root::bisect;
use crate::error::{Error, Result};

const SERIES_EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const GAMMA_MAX_ITER: usize = 10_000;
/// Poisson mass left out of the noncentral mixture.
const MIXTURE_TAIL: f64 = 1e-14;

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Standard normal density and distribution function at `x`.
pub fn std_normal(x: f64) -> (f64, f64) {
    let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    // Phi(x) = 1/2 + sign(x) P(1/2, x^2/2) / 2, via the incomplete gamma function
    let half_x2 = 0.5 * x * x;
    let cdf = if x >= 0.0 {
        1.0 - 0.5 * gamma_q(0.5, half_x2)
    } else {
        0.5 * gamma_q(0.5, half_x2)
    };
    (pdf, cdf)
}

/// Upper tail `1 - Phi(x)`, accurate far into the tail.
pub fn std_normal_sf(x: f64) -> f64 {
    if x >= 0.0 {
        0.5 * gamma_q(0.5, 0.5 * x * x)
    } else {
        1.0 - 0.5 * gamma_q(0.5, 0.5 * x * x)
    }
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Lower regularized incomplete gamma by its power series, valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * SERIES_EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

/// Upper regularized incomplete gamma by modified Lentz continued fraction,
/// valid for x >= a + 1.
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < SERIES_EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Upper regularized incomplete gamma Q(a, x).
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

/// `P(chi-square(df, noncentrality) > x)`.
///
/// The central case is the upper regularized incomplete gamma function; the
/// noncentral case is its Poisson(noncentrality / 2) mixture over `df + 2k`.
pub fn chisq_sf(df: usize, noncentrality: f64, x: f64) -> Result<f64> {
    if df < 1 {
        return Err(Error::InvalidParameter(format!("chi-square df must be >= 1, got {df}")));
    }
    if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noncentrality must be finite and >= 0, got {noncentrality}"
        )));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let a = df as f64 / 2.0;
    let half_x = x / 2.0;
    if noncentrality == 0.0 {
        return Ok(gamma_q(a, half_x).clamp(0.0, 1.0));
    }

    let rate = noncentrality / 2.0;
    let ln_rate = rate.ln();
    let mut total = 0.0;
    let mut mass = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let weight = (-rate + kf * ln_rate - ln_gamma(kf + 1.0)).exp();
        mass += weight;
        total += weight * gamma_q(a + kf, half_x);
        if (kf > rate && 1.0 - mass < MIXTURE_TAIL) || k >= 1_000_000 {
            break;
        }
        k += 1;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Quantile of the (noncentral) chi-square distribution: the `x` with
/// `P(X <= x) = prob`.
pub fn chisq_quantile(df: usize, noncentrality: f64, prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidParameter(format!("probability must lie in (0, 1), got {prob}")));
    }
    let target = 1.0 - prob;
    let mut hi = (df as f64 + noncentrality).max(1.0) * 2.0;
    while chisq_sf(df, noncentrality, hi)? > target {
        hi *= 2.0;
    }
    let f = |x: f64| chisq_sf(df, noncentrality, x).map(|s| s - target).unwrap_or(f64::NAN);
    bisect(f, 0.0, hi, 1e-13)
}

/// `P(F(d1, d2) > x)` through the regularized incomplete beta function.
pub fn f_sf(d1: f64, d2: f64, x: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::InvalidParameter(format!("F degrees of freedom must be positive, got ({d1}, {d2})")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(beta::beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [lo, hi] with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + h * i as f64);
        }
        s * h / 3.0
    }

    fn chisq_density(df: usize, t: f64) -> f64 {
        let a = df as f64 / 2.0;
        if t <= 0.0 {
            return 0.0;
        }
        ((a - 1.0) * t.ln() - t / 2.0 - a * 2f64.ln() - ln_gamma(a)).exp()
    }

    #[test]
    fn normal_values() {
        let (pdf0, cdf0) = std_normal(0.0);
        assert!((pdf0 - 0.398_942_280_4).abs() < 1e-10);
        assert!((cdf0 - 0.5).abs() < 1e-15);
        let (pdf1, cdf1) = std_normal(1.0);
        assert!((pdf1 - 0.241_970_7).abs() < 1e-7);
        // integrate the density from 0 to 1 as the oracle
        let oracle = 0.5 + simpson(|t| std_normal(t).0, 0.0, 1.0, 2000);
        assert!((cdf1 - oracle).abs() < 1e-12);
        assert!((std_normal(-1.0).1 - (1.0 - cdf1)).abs() < 1e-15);
    }

    #[test]
    fn chisq_trivial_values() {
        assert_eq!(chisq_sf(1, 0.0, 0.0).unwrap(), 1.0);
        for &x in &[0.1, 1.0, 3.7, 12.0, 40.0] {
            let sf = chisq_sf(2, 0.0, x).unwrap();
            assert!((sf - (-x / 2.0).exp()).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn chisq_rejects_bad_parameters() {
        assert!(matches!(chisq_sf(0, 0.0, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(chisq_sf(3, -1.0, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn chisq_central_matches_quadrature() {
        for &df in &[1usize, 2, 3, 7, 25, 64, 127, 200] {
            for &x in &[0.5, 2.0, df as f64 * 0.8, df as f64, df as f64 * 1.3 + 3.0] {
                let hi = x + 40.0 * (df as f64).sqrt() + 200.0;
                let oracle = simpson(|t| chisq_density(df, t), x, hi, 200_000);
                let sf = chisq_sf(df, 0.0, x).unwrap();
                assert!((sf - oracle).abs() < 1e-8, "df={df} x={x}: {sf} vs {oracle}");
            }
        }
    }

    #[test]
    fn chisq_noncentral_df1_closed_form() {
        // (Z + sqrt(delta))^2 > x  <=>  Z > sqrt(x) - sqrt(delta) or Z < -sqrt(x) - sqrt(delta)
        for &delta in &[0.3, 1.0, 5.0, 23.3] {
            for &x in &[0.2, 1.0, 4.0, 10.0, 30.0] {
                let (rx, rd) = (f64::sqrt(x), f64::sqrt(delta));
                let oracle = std_normal(-rx - rd).1 + (1.0 - std_normal(rx - rd).1);
                let sf = chisq_sf(1, delta, x).unwrap();
                assert!((sf - oracle).abs() < 1e-12, "delta={delta} x={x}");
            }
        }
    }

    #[test]
    fn chisq_noncentral_df3_by_convolution() {
        // X = noncentral chi2(1, delta) + central chi2(2), convolved by quadrature.
        let delta = 4.0;
        for &x in &[1.0, 5.0, 12.0] {
            let nc1 = |u: f64| {
                let (ru, rd) = (u.sqrt(), f64::sqrt(delta));
                std_normal(-ru - rd).1 + (1.0 - std_normal(ru - rd).1)
            };
            // substitute y = x - v^2 to remove the square-root kink at y = x
            let oracle = simpson(|v| (-(x - v * v) / 2.0).exp() * nc1(v * v) * v, 0.0, f64::sqrt(x), 20_000)
                + (-x / 2.0f64).exp();
            let sf = chisq_sf(3, delta, x).unwrap();
            assert!((sf - oracle).abs() < 1e-10, "x={x}: {sf} vs {oracle}");
        }
    }

    #[test]
    fn chisq_monotone() {
        let mut prev = 1.0;
        for i in 0..200 {
            let s = chisq_sf(10, 2.0, i as f64 * 0.25).unwrap();
            assert!(s <= prev + 1e-15);
            prev = s;
        }
        let mut prev = 0.0;
        for i in 0..50 {
            let s = chisq_sf(10, i as f64 * 0.5, 15.0).unwrap();
            assert!(s >= prev - 1e-15);
            prev = s;
        }
    }

    #[test]
    fn chisq_127_upper_five_percent_point() {
        let q = chisq_quantile(127, 0.0, 0.95).unwrap();
        assert!((q - 154.3).abs() < 0.05, "q = {q}");
        assert!((chisq_sf(127, 0.0, q).unwrap() - 0.05).abs() < 1e-10);
    }

    #[test]
    fn f_sf_special_cases() {
        // F(2, d2) survival has the closed form (1 + 2x/d2)^{-d2/2}
        for &x in &[0.5, 1.0, 3.0] {
            let d2: f64 = 25.0;
            let closed = (1.0 + 2.0 * x / d2).powf(-d2 / 2.0);
            assert!((f_sf(2.0, d2, x).unwrap() - closed).abs() < 1e-12);
        }
        assert_eq!(f_sf(1.0, 25.0, 0.0).unwrap(), 1.0);
    }
}
