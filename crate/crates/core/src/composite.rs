//! Composite nulls `H₀: c(θ) = 0`: the φ-divergence statistic at the
//! restricted estimator, Wald, score and Lagrange-multiplier statistics, the
//! noncentral power approximation, and confidence intervals for the
//! coefficient of variation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergence::{d_phi_uniform, Family};
use crate::el_core::{
    estimate_covariances, fit_restricted, fit_unrestricted, CovarianceEstimates, ELFit, FitOptions, RestrictedFit,
};
use crate::error::{ElError, Result};
use crate::inference::{beta2_from_delta, quad_form, ConfidenceInterval, EndpointStatus, TestResult};
use crate::linalg::sym_inverse;
use crate::model::{cov_constraint, Constraint, EstimatingModel, ModelKind, Sample};
use crate::special::chi2_quantile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeKind {
    PhiDivergence,
    Wald,
    Score,
    LagrangeMultiplier,
}

impl std::fmt::Display for CompositeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompositeKind::PhiDivergence => "phi_divergence",
            CompositeKind::Wald => "wald",
            CompositeKind::Score => "score",
            CompositeKind::LagrangeMultiplier => "lagrange_multiplier",
        })
    }
}

/// What a composite test needs. `r = p` is required.
#[derive(Clone, Debug)]
pub struct CompositeTestInput<'a> {
    pub model: &'a EstimatingModel,
    pub constraint: &'a Constraint,
    pub sample: &'a Sample,
    /// Only used by [`CompositeKind::PhiDivergence`].
    pub family: Family,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositeTestResult {
    pub kind: CompositeKind,
    #[serde(flatten)]
    pub test: TestResult,
    pub theta_hat: Vec<f64>,
    /// Absent when the restricted problem has no feasible solution.
    pub theta_tilde: Option<Vec<f64>>,
    pub nu_tilde: Option<Vec<f64>>,
}

/// Unrestricted and restricted fits shared by all four statistics.
#[derive(Clone, Debug)]
pub struct CompositeFits {
    pub unrestricted: ELFit,
    /// An infeasible constraint is kept as an error: the Wald statistic does
    /// not need the restricted fit, the others then report `+∞`.
    pub restricted: std::result::Result<RestrictedFit, ElError>,
}

impl CompositeFits {
    pub fn new(model: &EstimatingModel, constraint: &Constraint, sample: &Sample) -> Result<Self> {
        check_input(model, constraint)?;
        let unrestricted = fit_unrestricted(model, sample, &FitOptions::default())?;
        let restricted = fit_restricted(model, constraint, sample, &FitOptions::default());
        Ok(CompositeFits { unrestricted, restricted })
    }

    fn tilde(&self) -> Result<Option<&RestrictedFit>> {
        match &self.restricted {
            Ok(r) => Ok(Some(r)),
            Err(ElError::InfeasibleConstraint) | Err(ElError::WeightViolation { .. }) => Ok(None),
            Err(e) => Err(e.clone()),
        }
    }
}

fn check_input(model: &EstimatingModel, constraint: &Constraint) -> Result<()> {
    if model.r != model.p {
        return Err(ElError::DomainError(format!(
            "composite tests need as many estimating equations as parameters (r={}, p={})",
            model.r, model.p
        )));
    }
    if constraint.p != model.p {
        return Err(ElError::DomainError("constraint and model disagree on p".into()));
    }
    Ok(())
}

/// `2n/(φ″(1)h′(0)) · h(D_φ(Fₙ, F_{n,θ̃}))`, evaluated once at the restricted fit.
pub fn phi_statistic(family: &Family, fits: &CompositeFits) -> Result<f64> {
    family.h.validate()?;
    let Some(r) = fits.tilde()? else { return Ok(f64::INFINITY) };
    let n = r.inner.n() as f64;
    let d = d_phi_uniform(&family.phi, &r.inner);
    Ok((n * family.scale() * family.h.h(d)).max(0.0))
}

/// `W = n c(θ̂)ᵀ Q(θ̂) c(θ̂)` with uniformly weighted moments at `θ̂`.
pub fn wald_statistic(model: &EstimatingModel, constraint: &Constraint, sample: &Sample, fit: &ELFit) -> Result<f64> {
    let cov = estimate_covariances(model, sample, &fit.theta_hat, Some(constraint))?;
    let c = constraint.c(&fit.theta_hat);
    Ok(sample.n() as f64 * quad_form(cov.q.as_ref().expect("constraint supplied"), &c))
}

/// `n ḡᵀ S12⁻ᵀ Cᵀ Q C S12⁻¹ ḡ` with every moment at `θ̃`.
pub fn score_statistic(model: &EstimatingModel, constraint: &Constraint, sample: &Sample, fits: &CompositeFits) -> Result<f64> {
    let Some(r) = fits.tilde()? else { return Ok(f64::INFINITY) };
    let th = &r.theta_tilde;
    let cov = estimate_covariances(model, sample, th, Some(constraint))?;
    let gbar = crate::model::gbar(model, sample, th)?;
    let s12_inv = crate::linalg::general_inverse(&cov.s12)?;
    let y = cov.c.as_ref().expect("constraint supplied") * s12_inv * gbar;
    Ok((sample.n() as f64 * quad_form(cov.q.as_ref().expect("constraint supplied"), &y)).max(0.0))
}

/// `n ν̃ᵀ Q(θ̃)⁻¹ ν̃`.
pub fn lm_statistic(model: &EstimatingModel, constraint: &Constraint, sample: &Sample, fits: &CompositeFits) -> Result<f64> {
    let Some(r) = fits.tilde()? else { return Ok(f64::INFINITY) };
    let cov = estimate_covariances(model, sample, &r.theta_tilde, Some(constraint))?;
    let cm = cov.c.as_ref().expect("constraint supplied");
    let qinv = cm * &cov.v * cm.transpose();
    Ok((sample.n() as f64 * quad_form(&qinv, &r.nu_tilde)).max(0.0))
}

/// Evaluate one statistic on prepared fits.
pub fn composite_statistic(
    kind: CompositeKind,
    input: &CompositeTestInput<'_>,
    fits: &CompositeFits,
) -> Result<f64> {
    match kind {
        CompositeKind::PhiDivergence => phi_statistic(&input.family, fits),
        CompositeKind::Wald => wald_statistic(input.model, input.constraint, input.sample, &fits.unrestricted),
        CompositeKind::Score => score_statistic(input.model, input.constraint, input.sample, fits),
        CompositeKind::LagrangeMultiplier => lm_statistic(input.model, input.constraint, input.sample, fits),
    }
}

pub fn composite_test_with(kind: CompositeKind, input: &CompositeTestInput<'_>, fits: &CompositeFits) -> Result<CompositeTestResult> {
    let s = composite_statistic(kind, input, fits)?;
    let label = match kind {
        CompositeKind::PhiDivergence => input.family.to_string(),
        other => other.to_string(),
    };
    let test = TestResult::from_statistic(s, input.constraint.q, input.alpha, label)?;
    let tilde = fits.tilde()?;
    Ok(CompositeTestResult {
        kind,
        test,
        theta_hat: fits.unrestricted.theta_hat.clone(),
        theta_tilde: tilde.map(|r| r.theta_tilde.clone()),
        nu_tilde: tilde.map(|r| r.nu_tilde.iter().copied().collect()),
    })
}

/// Fit both models and run one test.
pub fn composite_test(kind: CompositeKind, input: &CompositeTestInput<'_>) -> Result<CompositeTestResult> {
    let fits = CompositeFits::new(input.model, input.constraint, input.sample)?;
    composite_test_with(kind, input, &fits)
}

pub fn composite_phi_test(input: &CompositeTestInput<'_>) -> Result<CompositeTestResult> {
    composite_test(CompositeKind::PhiDivergence, input)
}

/// Noncentral-χ² power `1 − F_{χ²_q(ϱ)}(χ²_{q,α})` with `ϱ = fᵀCᵀQCf`.
pub fn composite_power_beta2(cov: &CovarianceEstimates, f: &[f64], alpha: f64) -> Result<f64> {
    let c = cov.c.as_ref().ok_or_else(|| ElError::DomainError("covariances were estimated without a constraint".into()))?;
    if f.len() != c.ncols() {
        return Err(ElError::SampleMismatch);
    }
    let fbar = c * DVector::from_column_slice(f);
    composite_power_beta2_fbar(cov, fbar.as_slice(), alpha)
}

/// Same power for alternatives written as `c(θₙ) = n^{−1/2} f̄`: `ϱ = f̄ᵀQf̄`.
pub fn composite_power_beta2_fbar(cov: &CovarianceEstimates, fbar: &[f64], alpha: f64) -> Result<f64> {
    let c = cov.c.as_ref().ok_or_else(|| ElError::DomainError("covariances were estimated without a constraint".into()))?;
    // recompute Q so that a near-singular C V Cᵀ is reported rather than used
    let q = sym_inverse(&(c * &cov.v * c.transpose()))?;
    if fbar.len() != q.nrows() {
        return Err(ElError::SampleMismatch);
    }
    let rho = quad_form(&q, &DVector::from_column_slice(fbar)).max(0.0);
    beta2_from_delta(rho, q.nrows(), alpha)
}

/// Scalar closed forms for the coefficient-of-variation model at `ρ = 1`
/// (`c = v − 2u²`), written in raw sample moments.
pub mod cov_closed_form {
    use crate::el_core::RestrictedFit;

    /// Raw moments `(1/n)ΣXᵏ`, k = 1..4.
    pub fn moments(xs: &[f64]) -> [f64; 4] {
        let n = xs.len() as f64;
        let mut m = [0.0; 4];
        for &x in xs {
            let x2 = x * x;
            m[0] += x;
            m[1] += x2;
            m[2] += x2 * x;
            m[3] += x2 * x2;
        }
        m.map(|v| v / n)
    }

    pub fn wald(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let [u, v, m3, m4] = moments(xs);
        let num = n * (2.0 * u * u - v).powi(2);
        num / (m4 - 8.0 * u * m3 - v * v + 24.0 * u * u * v - 16.0 * u.powi(4))
    }

    /// `(1/n)ΣX⁴ − 8ũ(1/n)ΣX³ − 8ûũṽ + 10v̂ṽ + ṽ²`, i.e. `Q(θ̃)⁻¹`.
    fn restricted_denominator(xs: &[f64], ut: f64, vt: f64) -> f64 {
        let [u, v, m3, m4] = moments(xs);
        m4 - 8.0 * ut * m3 - 8.0 * u * ut * vt + 10.0 * v * vt + vt * vt
    }

    pub fn score(xs: &[f64], fit: &RestrictedFit) -> f64 {
        let n = xs.len() as f64;
        let [u, v, _, _] = moments(xs);
        let (ut, vt) = (fit.theta_tilde[0], fit.theta_tilde[1]);
        n * (v + vt - 4.0 * ut * u).powi(2) / restricted_denominator(xs, ut, vt)
    }

    pub fn lagrange_multiplier(xs: &[f64], fit: &RestrictedFit) -> f64 {
        let n = xs.len() as f64;
        let (ut, vt) = (fit.theta_tilde[0], fit.theta_tilde[1]);
        let gamma = fit.nu_tilde[0];
        n * gamma * gamma * restricted_denominator(xs, ut, vt)
    }

    /// `T^λ` from `γ̃` and `ũ` alone.
    pub fn power_divergence(xs: &[f64], fit: &RestrictedFit, lambda: f64) -> f64 {
        let ut = fit.theta_tilde[0];
        let gamma = fit.nu_tilde[0];
        let d = xs.iter().map(|x| 1.0 + gamma * (x * x - 4.0 * x * ut + 2.0 * ut * ut));
        let n = xs.len() as f64;
        if lambda.abs() < 1e-8 {
            2.0 * d.map(f64::ln).sum::<f64>()
        } else if (lambda + 1.0).abs() < 1e-8 {
            -2.0 * d.map(|di| di.ln() / di).sum::<f64>()
        } else {
            2.0 / (lambda * (lambda + 1.0)) * (d.map(|di| di.powf(lambda)).sum::<f64>() - n)
        }
    }
}

/// Which statistic to invert over `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub enum CompositeStatistic {
    Phi(Family),
    Wald,
    Score,
    LagrangeMultiplier,
}

impl CompositeStatistic {
    pub fn kind(&self) -> CompositeKind {
        match self {
            CompositeStatistic::Phi(_) => CompositeKind::PhiDivergence,
            CompositeStatistic::Wald => CompositeKind::Wald,
            CompositeStatistic::Score => CompositeKind::Score,
            CompositeStatistic::LagrangeMultiplier => CompositeKind::LagrangeMultiplier,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CompositeStatistic::Phi(f) => f.to_string(),
            other => other.kind().to_string(),
        }
    }
}

/// Statistic for `H₀: CoV = ρ` under the built-in CoV model; `+∞` when the
/// restricted problem is infeasible.
pub fn cov_statistic(
    model: &EstimatingModel,
    sample: &Sample,
    unrestricted: &ELFit,
    rho: f64,
    stat: &CompositeStatistic,
) -> Result<f64> {
    if model.kind != ModelKind::CoefficientOfVariation {
        return Err(ElError::DomainError("CoV statistics need the built-in CoV model".into()));
    }
    let constraint = cov_constraint(rho);
    if let CompositeStatistic::Wald = stat {
        return wald_statistic(model, &constraint, sample, unrestricted);
    }
    let fits = CompositeFits {
        unrestricted: unrestricted.clone(),
        restricted: fit_restricted(model, &constraint, sample, &FitOptions::default()),
    };
    match stat {
        CompositeStatistic::Phi(f) => phi_statistic(f, &fits),
        CompositeStatistic::Score => score_statistic(model, &constraint, sample, &fits),
        CompositeStatistic::LagrangeMultiplier => lm_statistic(model, &constraint, sample, &fits),
        CompositeStatistic::Wald => unreachable!(),
    }
}

/// Confidence interval for the coefficient of variation `ρ > 0` obtained by
/// inverting the test of `v = (1+ρ²)u²` over `ρ`.
///
/// The scan starts at `ρ̂ = √(v̂ − û²)/|û|` and steps by a quarter of the
/// normal-theory standard error `ρ̂ √((1/2 + ρ̂²)/n)`.
pub fn composite_confidence_interval(
    model: &EstimatingModel,
    sample: &Sample,
    stat: &CompositeStatistic,
    level: f64,
) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ElError::DomainError(format!("level must lie in (0,1), got {level}")));
    }
    let fit = fit_unrestricted(model, sample, &FitOptions::default())?;
    let (u, v) = (fit.theta_hat[0], fit.theta_hat[1]);
    if u == 0.0 || !(v > u * u) {
        return Err(ElError::DomainError("coefficient of variation undefined at the estimate".into()));
    }
    let rho_hat = (v - u * u).sqrt() / u.abs();
    let n = sample.n() as f64;
    let crit = chi2_quantile(1.0, 1.0 - level)?;
    let step = 0.25 * rho_hat * ((0.5 + rho_hat * rho_hat) / n).sqrt();
    let f = |rho: f64| -> Result<f64> { Ok(cov_statistic(model, sample, &fit, rho, stat)? - crit) };

    let scan = |dir: f64| -> Result<(f64, EndpointStatus)> {
        let mut prev = (rho_hat, f(rho_hat)?);
        if prev.1 > 0.0 {
            return Ok((rho_hat, EndpointStatus::Converged));
        }
        for k in 1..=400 {
            let x = rho_hat + dir * step * k as f64;
            if x <= 0.0 {
                // ρ = 0 means zero variance: treat it as the edge of the hull
                return bracket(&f, prev, (0.0, f64::INFINITY));
            }
            let fx = f(x)?;
            if fx <= 0.0 {
                prev = (x, fx);
            } else {
                return bracket(&f, prev, (x, fx));
            }
        }
        Err(ElError::NoBracket { side: if dir < 0.0 { "lower" } else { "upper" } })
    };
    let (lower, lower_status) = scan(-1.0)?;
    let (upper, upper_status) = scan(1.0)?;
    Ok(ConfidenceInterval { lower, upper, level, family: stat.label(), lower_status, upper_status })
}

/// Bisection with false-position steps between an accepted and a rejected
/// point; an infinite statistic (infeasible null) only ever bisects, and a
/// bracket that never meets a finite rejected value ends at the hull edge.
fn bracket(
    f: &impl Fn(f64) -> Result<f64>,
    inside: (f64, f64),
    outside: (f64, f64),
) -> Result<(f64, EndpointStatus)> {
    let (mut a, mut fa) = inside;
    let (mut b, mut fb) = outside;
    let mut seen_finite = fb.is_finite();
    for _ in 0..200 {
        if (b - a).abs() <= 1e-6 {
            break;
        }
        let m = if fa.is_finite() && fb.is_finite() && fb != fa {
            let x = b - fb * (b - a) / (fb - fa);
            if (x - a).abs() < 0.01 * (b - a).abs() || (b - x).abs() < 0.01 * (b - a).abs() {
                0.5 * (a + b)
            } else {
                x
            }
        } else {
            0.5 * (a + b)
        };
        let fm = f(m)?;
        if fm <= 0.0 {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
            seen_finite |= fm.is_finite();
        }
    }
    if seen_finite {
        Ok((if fa.abs() <= fb.abs() || !fb.is_finite() { a } else { b }, EndpointStatus::Converged))
    } else {
        Ok((a, EndpointStatus::HullTruncated))
    }
}

/// `Q(θ)⁻¹ = C V Cᵀ`, exposed for reporting.
pub fn q_inverse(cov: &CovarianceEstimates) -> Option<DMatrix<f64>> {
    cov.c.as_ref().map(|c| c * &cov.v * c.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::StatisticKind;
    use crate::model::builtin_cov_model;

    fn normal_sample() -> Vec<f64> {
        vec![
            1.2, 0.4, 2.3, 1.9, -0.3, 0.8, 1.5, 2.7, 0.1, 1.1, 0.6, 1.8, 2.2, -0.5, 0.9, 1.4, 0.2, 1.7, 3.1, 0.7,
            1.0, 0.3, 2.0, 1.3, -0.1, 1.6, 0.5, 2.5, 1.25, 0.95,
        ]
    }

    #[test]
    fn wald_hand_value() {
        let (m, c) = builtin_cov_model();
        let x = Sample::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        let fit = fit_unrestricted(&m, &x, &FitOptions::default()).unwrap();
        let w = wald_statistic(&m, &c, &x, &fit).unwrap();
        assert!((w - 150.0 / 49.0).abs() < 1e-10);
        assert!((cov_closed_form::wald(&[1.0, 2.0, 3.0]) - 150.0 / 49.0).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_matrix_forms() {
        let (m, c) = builtin_cov_model();
        let xs = normal_sample();
        let x = Sample::from_scalars(&xs).unwrap();
        let fits = CompositeFits::new(&m, &c, &x).unwrap();
        let r = fits.restricted.as_ref().unwrap();
        let s = score_statistic(&m, &c, &x, &fits).unwrap();
        let l = lm_statistic(&m, &c, &x, &fits).unwrap();
        let w = wald_statistic(&m, &c, &x, &fits.unrestricted).unwrap();
        assert!((s - cov_closed_form::score(&xs, r)).abs() < 1e-9);
        assert!((l - cov_closed_form::lagrange_multiplier(&xs, r)).abs() < 1e-9);
        assert!((w - cov_closed_form::wald(&xs)).abs() < 1e-9);
        for lam in [-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 2.0] {
            let t = phi_statistic(&Family::power(lam, StatisticKind::T), &fits).unwrap();
            assert!((t - cov_closed_form::power_divergence(&xs, r, lam)).abs() < 1e-9, "lambda={lam}");
        }
    }

    #[test]
    fn kullback_is_log_el_ratio() {
        let (m, c) = builtin_cov_model();
        let x = Sample::from_scalars(&normal_sample()).unwrap();
        let fits = CompositeFits::new(&m, &c, &x).unwrap();
        let t = phi_statistic(&Family::power(0.0, StatisticKind::T), &fits).unwrap();
        let logel = fits.restricted.as_ref().unwrap().inner.logel;
        assert!((t + 2.0 * logel).abs() < 1e-10);
        let near = phi_statistic(&Family::power(1e-7, StatisticKind::T), &fits).unwrap();
        assert!((t - near).abs() < 1e-5);
    }

    #[test]
    fn satisfied_constraint_gives_zero() {
        // x² − 4x + 1 = 0 makes v̂ = 2û² on {0, 1, x}
        let (m, c) = builtin_cov_model();
        let xs = [0.0, 1.0, 2.0 + 3f64.sqrt()];
        let x = Sample::from_scalars(&xs).unwrap();
        let input = CompositeTestInput { model: &m, constraint: &c, sample: &x, family: Family::power(1.0, StatisticKind::T), alpha: 0.05 };
        for kind in [CompositeKind::PhiDivergence, CompositeKind::Wald, CompositeKind::Score, CompositeKind::LagrangeMultiplier] {
            let r = composite_test(kind, &input).unwrap();
            assert!(r.test.statistic.abs() < 1e-12, "{kind}");
            assert_eq!(r.test.df, 1);
        }
    }

    #[test]
    fn power_parameterizations_agree() {
        let (m, c) = builtin_cov_model();
        let x = Sample::from_scalars(&normal_sample()).unwrap();
        let cov = estimate_covariances(&m, &x, &[1.0, 2.0], Some(&c)).unwrap();
        let f = [0.0, 1.0];
        let b = composite_power_beta2(&cov, &f, 0.05).unwrap();
        let cf = cov.c.as_ref().unwrap() * DVector::from_column_slice(&f);
        assert!((b - composite_power_beta2_fbar(&cov, cf.as_slice(), 0.05).unwrap()).abs() < 1e-15);
        assert!(b > 0.05 && b < 1.0);
        let b2 = composite_power_beta2(&cov, &[0.0, 2.0], 0.05).unwrap();
        assert!(b2 > b);
        // C(1, 2) = (−4, 1): f = (1, 4) lies in its null space
        assert!((composite_power_beta2(&cov, &[1.0, 4.0], 0.05).unwrap() - 0.05).abs() < 1e-9);
    }

    #[test]
    fn rho_interval_brackets_estimate() {
        let (m, _) = builtin_cov_model();
        let xs = normal_sample();
        let x = Sample::from_scalars(&xs).unwrap();
        let ci = composite_confidence_interval(&m, &x, &CompositeStatistic::Wald, 0.9).unwrap();
        let [u, v, _, _] = cov_closed_form::moments(&xs);
        let rho_hat = (v - u * u).sqrt() / u;
        assert!(ci.lower < rho_hat && rho_hat < ci.upper);
        let fit = fit_unrestricted(&m, &x, &FitOptions::default()).unwrap();
        let crit = chi2_quantile(1.0, 0.1).unwrap();
        for e in [ci.lower, ci.upper] {
            assert!((cov_statistic(&m, &x, &fit, e, &CompositeStatistic::Wald).unwrap() - crit).abs() < 1e-4);
        }
    }
}
