//! Simple-null decisions: chi-square calibrated tests, confidence intervals by
//! test inversion, and the two power approximations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergence::{d_phi_between, statistic, Family, WeightedEmpirical};
use crate::el_core::{
    estimate_covariances, estimate_covariances_weighted, fit_unrestricted, solve_t, solve_t_warm, CovarianceEstimates,
    ELFit, ELSolution, FitOptions,
};
use crate::error::{ElError, Result};
use crate::linalg::sym_inverse;
use crate::model::{EstimatingModel, ModelKind, Sample};
use crate::special::normal_cdf;

pub use crate::special::{chi2_cdf, chi2_quantile, noncentral_chi2_cdf};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub pvalue: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Human-readable `(φ, h, T/S)` descriptor.
    pub family: String,
    /// The null value lies outside the convex hull; the statistic is `+∞`.
    pub infeasible: bool,
}

impl TestResult {
    /// Calibrate a statistic against `χ²_df`.
    pub fn from_statistic(statistic: f64, df: usize, alpha: f64, family: String) -> Result<Self> {
        let crit = chi2_quantile(df as f64, alpha)?;
        let infeasible = statistic == f64::INFINITY;
        let pvalue = if infeasible { 0.0 } else { (1.0 - chi2_cdf(statistic.max(0.0), df as f64)?).clamp(0.0, 1.0) };
        Ok(TestResult { statistic, df, pvalue, alpha, reject: statistic > crit, family, infeasible })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointStatus {
    Converged,
    /// The statistic stayed below the critical value up to the edge of the
    /// convex hull, so the endpoint is that edge.
    HullTruncated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub family: String,
    pub lower_status: EndpointStatus,
    pub upper_status: EndpointStatus,
}

impl ConfidenceInterval {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerMethod {
    Beta1,
    Beta2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerCurve {
    pub grid: Vec<f64>,
    pub beta: Vec<f64>,
    pub method: PowerMethod,
    /// Grid points where the approximation is undefined (for β¹ the null
    /// itself, where σ vanishes, or alternatives outside the hull).
    pub skipped: Vec<f64>,
}

/// How the β¹ rejection threshold is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `φ″(1) h′(0) χ²/(2n)`, matching the rejection region of the statistic.
    #[default]
    Consistent,
    /// `φ″(1) χ²/(2n)` with no `h′(0)` factor.
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    /// Step in units of `sd/√n`.
    pub step_factor: f64,
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { step_factor: 0.25, max_steps: 400, tol: 1e-6 }
    }
}

/// Evaluates one family's statistic at many null values against a single
/// unrestricted fit.
pub struct SimpleTester<'a> {
    model: &'a EstimatingModel,
    sample: &'a Sample,
    family: Family,
    el_hat: ELSolution,
    theta_hat: Vec<f64>,
}

impl<'a> SimpleTester<'a> {
    pub fn new(model: &'a EstimatingModel, sample: &'a Sample, family: &Family) -> Result<Self> {
        family.h.validate()?;
        let fit = fit_unrestricted(model, sample, &FitOptions::default())?;
        Self::with_fit(model, sample, family, &fit)
    }

    /// Reuse an unrestricted fit, e.g. across several families on one sample.
    pub fn with_fit(model: &'a EstimatingModel, sample: &'a Sample, family: &Family, fit: &ELFit) -> Result<Self> {
        family.h.validate()?;
        Ok(SimpleTester {
            model,
            sample,
            family: family.clone(),
            el_hat: fit.inner.clone(),
            theta_hat: fit.theta_hat.clone(),
        })
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn el_hat(&self) -> &ELSolution {
        &self.el_hat
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Statistic at `theta0`, `+∞` when `theta0` is outside the hull. The
    /// returned multiplier can warm-start the next nearby evaluation.
    pub fn statistic_warm(&self, theta0: &[f64], warm: Option<&DVector<f64>>) -> Result<(f64, Option<DVector<f64>>)> {
        match solve_t_warm(self.model, self.sample, theta0, warm) {
            Ok(el0) => {
                let s = statistic(&self.family, &self.el_hat, &el0)?;
                Ok((s, Some(el0.t)))
            }
            Err(ElError::InfeasibleTheta { .. }) | Err(ElError::ParameterOutOfDomain { .. }) => {
                Ok((f64::INFINITY, None))
            }
            Err(e) => Err(e),
        }
    }

    pub fn statistic_at(&self, theta0: &[f64]) -> Result<f64> {
        Ok(self.statistic_warm(theta0, None)?.0)
    }

    pub fn test(&self, theta0: &[f64], alpha: f64) -> Result<TestResult> {
        let s = self.statistic_at(theta0)?;
        TestResult::from_statistic(s, self.model.p, alpha, self.family.to_string())
    }

    /// Invert the test for a scalar parameter.
    pub fn confidence_interval(&self, level: f64, opts: &ScanOptions) -> Result<ConfidenceInterval> {
        if self.model.p != 1 {
            return Err(ElError::DomainError("confidence intervals need a scalar parameter".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(ElError::DomainError(format!("level must lie in (0,1), got {level}")));
        }
        let crit = chi2_quantile(1.0, 1.0 - level)?;
        let n = self.sample.n() as f64;
        let (_, sd) = self.sample.mean_sd(0);
        let center = self.theta_hat[0];
        let step = opts.step_factor * if sd > 0.0 { sd } else { 1e-8 * (1.0 + center.abs()) } / n.sqrt();
        let (lower, ls) = self.endpoint(center, -step, crit, opts)?;
        let (upper, us) = self.endpoint(center, step, crit, opts)?;
        Ok(ConfidenceInterval {
            lower,
            upper,
            level,
            family: self.family.to_string(),
            lower_status: ls,
            upper_status: us,
        })
    }

    fn endpoint(&self, center: f64, step: f64, crit: f64, opts: &ScanOptions) -> Result<(f64, EndpointStatus)> {
        let side = if step < 0.0 { "lower" } else { "upper" };
        let (s0, mut warm) = self.statistic_warm(&[center], None)?;
        if !(s0 <= crit) {
            // the estimate itself is rejected: the interval is empty on this side
            return Ok((center, EndpointStatus::Converged));
        }
        let mut prev = (center, s0 - crit);
        for k in 1..=opts.max_steps {
            let x = center + step * k as f64;
            let (s, w) = self.statistic_warm(&[x], warm.as_ref())?;
            if s.is_finite() && s <= crit {
                prev = (x, s - crit);
                warm = w;
                continue;
            }
            if s.is_finite() {
                return Ok((self.refine(prev, (x, s - crit), crit, opts.tol)?, EndpointStatus::Converged));
            }
            return self.hull_edge(prev, x, crit, opts.tol);
        }
        Err(ElError::NoBracket { side })
    }

    /// Illinois false position on `stat − crit` inside a sign-changing bracket,
    /// bisecting whenever a trial point is infeasible.
    fn refine(&self, lo: (f64, f64), hi: (f64, f64), crit: f64, tol: f64) -> Result<f64> {
        let (mut a, mut fa) = lo;
        let (mut b, mut fb) = hi;
        let mut side = 0i8;
        for _ in 0..200 {
            if (b - a).abs() <= tol {
                break;
            }
            let x = if fa.is_finite() && fb.is_finite() && fb != fa {
                let x = b - fb * (b - a) / (fb - fa);
                // guard against stagnation at an end
                let m = 0.5 * (a + b);
                if (x - a).abs() < 0.01 * (b - a).abs() || (b - x).abs() < 0.01 * (b - a).abs() {
                    m
                } else {
                    x
                }
            } else {
                0.5 * (a + b)
            };
            let fx = self.statistic_at(&[x])? - crit;
            if fx <= 0.0 {
                a = x;
                fa = fx;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = x;
                fb = fx;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        Ok(if fa.abs() <= fb.abs() { a } else { b })
    }

    /// The scan stepped from an accepted point straight out of the hull: bisect
    /// for the edge, switching to root-finding if a rejected feasible point turns up.
    fn hull_edge(&self, inside: (f64, f64), outside: f64, crit: f64, tol: f64) -> Result<(f64, EndpointStatus)> {
        let (mut a, mut fa) = inside;
        let mut b = outside;
        while (b - a).abs() > tol {
            let m = 0.5 * (a + b);
            let s = self.statistic_at(&[m])?;
            if !s.is_finite() {
                b = m;
            } else if s <= crit {
                a = m;
                fa = s - crit;
            } else {
                return Ok((self.refine((a, fa), (m, s - crit), crit, tol)?, EndpointStatus::Converged));
            }
        }
        Ok((a, EndpointStatus::HullTruncated))
    }
}

/// One-shot simple-null test `H₀: θ = θ₀` calibrated against `χ²_p`.
pub fn simple_test(
    model: &EstimatingModel,
    sample: &Sample,
    theta0: &[f64],
    family: &Family,
    alpha: f64,
) -> Result<TestResult> {
    SimpleTester::new(model, sample, family)?.test(theta0, alpha)
}

/// Confidence interval for a scalar parameter by inverting [`simple_test`].
pub fn confidence_interval(
    model: &EstimatingModel,
    sample: &Sample,
    family: &Family,
    level: f64,
    opts: &ScanOptions,
) -> Result<ConfidenceInterval> {
    SimpleTester::new(model, sample, family)?.confidence_interval(level, opts)
}

/// `β²`: `1 − F_{χ²_df(δ)}(χ²_{df,α})` with `δ = fᵀV⁻¹f`. Depends on nothing
/// but `V`, `f`, `df` and `α`.
pub fn power_beta2(cov: &CovarianceEstimates, f: &[f64], df: usize, alpha: f64) -> Result<f64> {
    let vinv = sym_inverse(&cov.v)?;
    let fv = DVector::from_column_slice(f);
    if fv.len() != vinv.nrows() {
        return Err(ElError::SampleMismatch);
    }
    let delta = (fv.transpose() * &vinv * &fv)[(0, 0)].max(0.0);
    beta2_from_delta(delta, df, alpha)
}

pub(crate) fn beta2_from_delta(delta: f64, df: usize, alpha: f64) -> Result<f64> {
    let crit = chi2_quantile(df as f64, alpha)?;
    Ok((1.0 - noncentral_chi2_cdf(crit, df as f64, delta)?).clamp(0.0, 1.0))
}

/// Components of the first power approximation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Beta1Parts {
    pub beta: f64,
    /// `h′(D_φ(F_{n,θ*}, F_{n,θ₀}))`
    pub kappa: f64,
    pub tau: Vec<f64>,
    /// `D^h_φ(F_{n,θ*}, F_{n,θ₀})`
    pub divergence: f64,
    pub sigma: f64,
    pub threshold: f64,
}

/// `β¹ = 1 − Φ(√n/σ · (threshold − h(D_φ(F_{n,θ*}, F_{n,θ₀}))))`.
///
/// The Rényi family with the scalar mean model uses the closed-form `κ`, `τ`
/// and `t′`; every other combination differentiates the divergence
/// numerically. `V(θ₀)` is the EL-weighted plug-in in both cases.
pub fn power_beta1(
    model: &EstimatingModel,
    sample: &Sample,
    theta0: &[f64],
    theta_star: &[f64],
    family: &Family,
    alpha: f64,
    mode: ThresholdMode,
) -> Result<f64> {
    Ok(power_beta1_parts(model, sample, theta0, theta_star, family, alpha, mode)?.beta)
}

pub fn power_beta1_parts(
    model: &EstimatingModel,
    sample: &Sample,
    theta0: &[f64],
    theta_star: &[f64],
    family: &Family,
    alpha: f64,
    mode: ThresholdMode,
) -> Result<Beta1Parts> {
    family.h.validate()?;
    let p = model.p;
    if theta0.len() != p || theta_star.len() != p {
        return Err(ElError::SampleMismatch);
    }
    let n = sample.n() as f64;
    let el0 = solve_t(model, sample, theta0)?;
    let el_star = solve_t(model, sample, theta_star)?;
    let cov = estimate_covariances_weighted(model, sample, theta0, &el0.weights, None)?;

    let h0 = match mode {
        ThresholdMode::Consistent => family.h.h_prime_zero(),
        ThresholdMode::Strict => 1.0,
    };
    let threshold = family.phi.phi_second_at_one() * h0 * chi2_quantile(p as f64, alpha)? / (2.0 * n);

    let (kappa, tau, divergence) = match family.renyi_order() {
        Some(a) if model.kind == ModelKind::Mean => renyi_parts(sample, a, &el0, &el_star),
        _ => {
            let to = WeightedEmpirical::from(&el0);
            let d = d_phi_between(&family.phi, &WeightedEmpirical::from(&el_star), &to)?;
            let mut tau = vec![0.0; p];
            let mut warm = el_star.t.clone();
            for j in 0..p {
                let step = 1e-5 * theta_star[j].abs().max(1.0);
                let mut eval = |delta: f64| -> Result<f64> {
                    let mut th = theta_star.to_vec();
                    th[j] += delta;
                    let el = solve_t_warm(model, sample, &th, Some(&warm))?;
                    warm = el.t.clone();
                    d_phi_between(&family.phi, &WeightedEmpirical::from(&el), &to)
                };
                let up = eval(step)?;
                let down = eval(-step)?;
                tau[j] = (up - down) / (2.0 * step);
            }
            (family.h.h_prime(d), tau, family.h.h(d))
        }
    };

    let tv = DVector::from_vec(tau.clone());
    let quad = (tv.transpose() * &cov.v * &tv)[(0, 0)].max(0.0);
    let sigma = kappa * quad.sqrt();
    if !(sigma > 1e-14) {
        return Err(ElError::DegenerateVariance { sigma });
    }
    let beta = (1.0 - normal_cdf(n.sqrt() / sigma * (threshold - divergence))).clamp(0.0, 1.0);
    Ok(Beta1Parts { beta, kappa, tau, divergence, sigma, threshold })
}

/// Closed forms for the Rényi statistic of order `a` with `g = X − μ`.
fn renyi_parts(sample: &Sample, a: f64, el0: &ELSolution, el_star: &ELSolution) -> (f64, Vec<f64>, f64) {
    let xs = sample.column(0);
    let n = xs.len() as f64;
    let mu = el_star.theta[0];
    let t = el_star.t[0];
    let (p0, ps) = (&el0.weights, &el_star.weights);
    let g: Vec<f64> = xs.iter().map(|x| x - mu).collect();
    let sp2: f64 = ps.iter().map(|p| p * p).sum();
    let sgp2: f64 = g.iter().zip(ps).map(|(gi, p)| gi * gi * p * p).sum();
    let t_prime = -sp2 / sgp2;
    let near = |x: f64| x.abs() < 1e-8;
    if near(a - 1.0) {
        let d: f64 = ps.iter().zip(p0).map(|(s, z)| s * (s / z).ln()).sum();
        let tau = n * g
            .iter()
            .zip(ps.iter().zip(p0))
            .map(|(gi, (s, z))| (t_prime * gi - t) * s * s * ((z / s).ln() - 1.0))
            .sum::<f64>();
        (1.0, vec![tau], d)
    } else {
        let tau = n / (1.0 - a)
            * g.iter()
                .zip(ps.iter().zip(p0))
                .map(|(gi, (s, z))| (t_prime * gi - t) * s.powf(a + 1.0) * z.powf(1.0 - a))
                .sum::<f64>();
        if near(a) {
            let d: f64 = ps.iter().zip(p0).map(|(s, z)| z * (z / s).ln()).sum();
            (1.0, vec![tau], d)
        } else {
            let m: f64 = ps.iter().zip(p0).map(|(s, z)| s.powf(a) * z.powf(1.0 - a)).sum();
            let kappa = 1.0 / m;
            (kappa, vec![tau], -kappa.ln() / (a * (a - 1.0)))
        }
    }
}

/// `81` equally spaced points over `θ̂ ± 4 Ṽ^{1/2}/√n` for a scalar parameter,
/// with `Ṽ` the EL-weighted variance at `theta0`.
pub fn default_power_grid(model: &EstimatingModel, sample: &Sample, theta0: f64) -> Result<Vec<f64>> {
    if model.p != 1 {
        return Err(ElError::DomainError("power grids need a scalar parameter".into()));
    }
    let fit = fit_unrestricted(model, sample, &FitOptions::default())?;
    let el0 = solve_t(model, sample, &[theta0])?;
    let cov = estimate_covariances_weighted(model, sample, &[theta0], &el0.weights, None)?;
    let half = 4.0 * cov.v[(0, 0)].sqrt() / (sample.n() as f64).sqrt();
    let c = fit.theta_hat[0];
    Ok((0..81).map(|i| c - half + 2.0 * half * i as f64 / 80.0).collect())
}

/// Evaluate either approximation over a grid of scalar alternatives.
#[allow(clippy::too_many_arguments)]
pub fn power_curve(
    model: &EstimatingModel,
    sample: &Sample,
    theta0: f64,
    family: &Family,
    grid: &[f64],
    method: PowerMethod,
    alpha: f64,
    mode: ThresholdMode,
) -> Result<PowerCurve> {
    let mut out = PowerCurve { grid: Vec::new(), beta: Vec::new(), method, skipped: Vec::new() };
    let cov = match method {
        PowerMethod::Beta2 => Some(estimate_covariances(model, sample, &[theta0], None)?),
        PowerMethod::Beta1 => None,
    };
    let n = sample.n() as f64;
    for &x in grid {
        let value = match &cov {
            Some(cov) => power_beta2(cov, &[n.sqrt() * (x - theta0)], model.p, alpha),
            None => power_beta1(model, sample, &[theta0], &[x], family, alpha, mode),
        };
        match value {
            Ok(b) => {
                out.grid.push(x);
                out.beta.push(b);
            }
            Err(ElError::DegenerateVariance { .. }) | Err(ElError::InfeasibleTheta { .. }) => out.skipped.push(x),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `V⁻¹`-quadratic helper used by the composite module as well.
pub(crate) fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::StatisticKind;
    use crate::model::builtin_mean_model;

    fn mean_sample() -> Sample {
        Sample::from_scalars(&[-1.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn null_at_estimate_is_zero() {
        let m = builtin_mean_model();
        let x = mean_sample();
        let r = simple_test(&m, &x, &[1.0 / 3.0], &Family::power(0.0, StatisticKind::S), 0.05).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert!((r.pvalue - 1.0).abs() < 1e-9);
        assert!(!r.reject);
    }

    #[test]
    fn hand_example_does_not_reject() {
        let m = builtin_mean_model();
        let r = simple_test(&m, &mean_sample(), &[0.0], &Family::power(0.0, StatisticKind::T), 0.05).unwrap();
        assert!((r.statistic - 0.235566).abs() < 1e-6);
        assert!(!r.reject);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn outside_hull_rejects_with_infinite_statistic() {
        let m = builtin_mean_model();
        let r = simple_test(&m, &mean_sample(), &[5.0], &Family::power(1.0, StatisticKind::S), 0.05).unwrap();
        assert!(r.infeasible && r.reject);
        assert_eq!(r.statistic, f64::INFINITY);
        assert_eq!(r.pvalue, 0.0);
    }

    #[test]
    fn interval_contains_estimate_and_is_dual_to_test() {
        let m = builtin_mean_model();
        let x = Sample::from_scalars(&[0.3, -1.2, 0.8, 2.1, 0.0, 1.4, -0.6, 0.9, 1.1, -0.1]).unwrap();
        let fam = Family::power(0.0, StatisticKind::S);
        let tester = SimpleTester::new(&m, &x, &fam).unwrap();
        let ci = tester.confidence_interval(0.95, &ScanOptions::default()).unwrap();
        assert!(ci.contains(tester.theta_hat()[0]));
        let crit = chi2_quantile(1.0, 0.05).unwrap();
        for &(e, sign) in &[(ci.lower, -1.0), (ci.upper, 1.0)] {
            assert!((tester.statistic_at(&[e]).unwrap() - crit).abs() < 1e-4);
            assert!(!tester.test(&[e - sign * 1e-4], 0.05).unwrap().reject);
            assert!(tester.test(&[e + sign * 1e-4], 0.05).unwrap().reject);
        }
        let narrow = tester.confidence_interval(0.90, &ScanOptions::default()).unwrap();
        assert!(ci.lower <= narrow.lower && narrow.upper <= ci.upper);
    }

    #[test]
    fn beta2_at_null_is_level() {
        let m = builtin_mean_model();
        let x = Sample::from_scalars(&[0.3, -1.2, 0.8, 2.1, 0.0]).unwrap();
        let cov = estimate_covariances(&m, &x, &[0.2], None).unwrap();
        assert!((power_beta2(&cov, &[0.0], 1, 0.05).unwrap() - 0.05).abs() < 1e-9);
        let b1 = power_beta2(&cov, &[0.5], 1, 0.05).unwrap();
        let b2 = power_beta2(&cov, &[1.0], 1, 0.05).unwrap();
        assert!(0.05 < b1 && b1 < b2);
    }

    #[test]
    fn beta1_degenerate_at_null() {
        let m = builtin_mean_model();
        let x = Sample::from_scalars(&[0.3, -1.2, 0.8, 2.1, 0.0]).unwrap();
        let e = power_beta1(&m, &x, &[0.2], &[0.2], &Family::renyi(2.0), 0.05, ThresholdMode::Consistent);
        assert!(matches!(e, Err(ElError::DegenerateVariance { .. })));
    }

    #[test]
    fn renyi_closed_form_agrees_with_numerical_path() {
        // the Custom kind forces the finite-difference route on the same g
        let closed = builtin_mean_model();
        let mut generic = builtin_mean_model();
        generic.kind = ModelKind::Custom;
        let x = Sample::from_scalars(&[0.3, -1.2, 0.8, 2.1, 0.0, 1.4, -0.6, 0.9]).unwrap();
        for a in [-1.0, 0.0, 0.5, 1.0, 2.5] {
            let fam = Family::renyi(a);
            let c = power_beta1_parts(&closed, &x, &[0.2], &[0.6], &fam, 0.05, ThresholdMode::Consistent).unwrap();
            let g = power_beta1_parts(&generic, &x, &[0.2], &[0.6], &fam, 0.05, ThresholdMode::Consistent).unwrap();
            assert!((c.divergence - g.divergence).abs() < 1e-10, "a={a}");
            assert!((c.kappa - g.kappa).abs() < 1e-10, "a={a}");
            assert!((c.tau[0] - g.tau[0]).abs() < 1e-4 * (1.0 + c.tau[0].abs()), "a={a} {} {}", c.tau[0], g.tau[0]);
            assert!((c.beta - g.beta).abs() < 1e-5);
        }
    }
}
