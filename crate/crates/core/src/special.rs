//! Special functions: incomplete gamma, central and noncentral chi-square,
//! the standard normal CDF and Kolmogorov–Smirnov tail probabilities.
//!
//! Everything here is self-contained so the numerical layer has no external
//! statistical dependency.

use crate::error::{ElError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)` and its complement `Q(a, x)`.
///
/// Uses the power series below `x = a + 1` and a Lentz continued fraction
/// above it, so whichever tail is small is computed directly.
pub fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (sum.ln() + log_prefix).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = (h.ln() + log_prefix).exp().min(1.0);
        (1.0 - q, q)
    }
}

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(ElError::DomainError(format!("degrees of freedom must be positive, got {df}")));
    }
    Ok(())
}

/// Central chi-square CDF. Negative `x` gives 0.
pub fn chi2_cdf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(ElError::DomainError("chi-square argument is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_pq(0.5 * df, 0.5 * x).0)
}

/// Central chi-square survival function `1 − F(x)`.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if x.is_nan() {
        return Err(ElError::DomainError("chi-square argument is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(gamma_pq(0.5 * df, 0.5 * x).1)
}

fn chi2_log_pdf(x: f64, df: f64) -> f64 {
    let k = 0.5 * df;
    (k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)
}

/// Upper-`alpha` critical value: the `x` with `P(χ²_df > x) = alpha`.
///
/// Bracketed Newton on the survival function, converged to 1e-10 in `x`.
pub fn chi2_quantile(df: f64, alpha: f64) -> Result<f64> {
    check_df(df)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ElError::DomainError(format!("alpha must lie in (0,1), got {alpha}")));
    }
    // Wilson–Hilferty starting point
    let z = normal_quantile_approx(1.0 - alpha);
    let h = 2.0 / (9.0 * df);
    let mut x = (df * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-8);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let f = chi2_sf(x, df)? - alpha;
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // derivative of the survival function is minus the density
        let dens = chi2_log_pdf(x, df).exp();
        let mut next = if dens > 0.0 { x + f / dens } else { f64::NAN };
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.max(1.0) };
        }
        if (next - x).abs() <= 1e-10 * x.max(1e-3) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Rational approximation to the standard normal quantile (starting values only).
fn normal_quantile_approx(p: f64) -> f64 {
    let q = if p < 0.5 { p } else { 1.0 - p };
    let t = (-2.0 * q.ln()).sqrt();
    let num = 2.515_517 + 0.802_853 * t + 0.010_328 * t * t;
    let den = 1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t;
    let z = t - num / den;
    if p < 0.5 {
        -z
    } else {
        z
    }
}

/// Noncentral chi-square CDF as a Poisson(δ/2) mixture of central CDFs.
///
/// Terms are summed outward from the Poisson mode in log space and the sum is
/// truncated once the neglected Poisson mass falls below 1e-12.
pub fn noncentral_chi2_cdf(x: f64, df: f64, delta: f64) -> Result<f64> {
    check_df(df)?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(ElError::DomainError(format!("noncentrality must be >= 0, got {delta}")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if delta == 0.0 {
        return chi2_cdf(x, df);
    }
    let lam = 0.5 * delta;
    let mode = lam.floor();
    let log_w = |j: f64| -lam + j * lam.ln() - ln_gamma(j + 1.0);
    let term = |j: f64| gamma_pq(0.5 * df + j, 0.5 * x).0;

    let mut total = 0.0;
    let mut mass = 0.0;
    // downward from the mode (including it)
    let mut j = mode;
    loop {
        let w = log_w(j).exp();
        total += w * term(j);
        mass += w;
        if j == 0.0 || (w < 1e-17 && j < mode) {
            break;
        }
        j -= 1.0;
    }
    // upward
    let mut j = mode + 1.0;
    loop {
        let w = log_w(j).exp();
        total += w * term(j);
        mass += w;
        if 1.0 - mass < 1e-12 && w < 1e-14 {
            break;
        }
        if j > mode + 1e6 {
            break;
        }
        j += 1.0;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z <= 0.0 {
        0.5 * erfc(-z)
    } else {
        1.0 - 0.5 * erfc(z)
    }
}

/// `erfc(z)` for `z ≥ 0`, through `Q(1/2, z²)`.
fn erfc(z: f64) -> f64 {
    gamma_pq(0.5, z * z).1
}

/// Kolmogorov–Smirnov statistic of `data` against a continuous CDF.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = data.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic KS tail probability with the usual small-sample correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lam = (sn + 0.12 + 0.11 / sn) * d;
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lam * lam).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
