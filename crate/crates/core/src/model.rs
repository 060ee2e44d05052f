//! Estimating-equation models.
//!
//! A model is a pair of callbacks: the estimating function `g(x, θ)` with
//! values in ℝʳ and its Jacobian `G(x, θ) = ∂g/∂θᵀ` (r×p, written row-major).
//! Three models ship with the crate:
//!
//! | model | p | r | g |
//! |---|---|---|---|
//! | mean | 1 | 1 | `x − θ` |
//! | mean–variance link | 1 | 2 | `x − θ`, `x² − 2θ² − 1` |
//! | coefficient of variation | 2 | 2 | `x − u`, `x² − v` (constraint `v − 2u² = 0`) |

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{ElError, Result};

/// Observations stored row-major: `n` rows of dimension `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    data: Vec<f64>,
    n: usize,
    k: usize,
}

impl Sample {
    pub fn new(data: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || data.len() != n * k {
            return Err(ElError::DomainError(format!(
                "sample needs n*k = {}*{} values, got {}",
                n,
                k,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(ElError::NumericalFailure { row: i / k });
        }
        Ok(Sample { data, n, k })
    }

    /// One-dimensional sample.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Sample::new(xs.to_vec(), xs.len(), 1)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != k) {
            return Err(ElError::DomainError("ragged rows".into()));
        }
        Sample::new(rows.concat(), rows.len(), k)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    /// All values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.k + j]).collect()
    }

    /// Sample mean and (n−1)-denominator standard deviation of column `j`.
    pub fn mean_sd(&self, j: usize) -> (f64, f64) {
        let col = self.column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let ss = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let sd = if col.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        (mean, sd)
    }
}

/// Callback writing `g(x, θ)` (length r) or `G(x, θ)` (r×p row-major) into `out`.
pub type ModelFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
/// Callback writing `c(θ)` (length q) or `C(θ)` (q×p row-major) into `out`.
pub type ConstraintFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
/// Open-set membership test on θ.
pub type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// Which built-in a model is, so solvers can pick specialised paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Mean,
    MeanVariance,
    CoefficientOfVariation,
    Custom,
}

/// An estimating-equation model with `p` parameters and `r ≥ p` equations.
#[derive(Clone)]
pub struct EstimatingModel {
    pub name: String,
    pub k: usize,
    pub p: usize,
    pub r: usize,
    pub kind: ModelKind,
    g: Arc<ModelFn>,
    jac: Arc<ModelFn>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for EstimatingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EstimatingModel({}, k={}, p={}, r={})", self.name, self.k, self.p, self.r)
    }
}

impl EstimatingModel {
    /// User-defined model. The domain defaults to all of ℝᵖ.
    pub fn new(
        name: impl Into<String>,
        k: usize,
        p: usize,
        r: usize,
        g: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        jac: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if p == 0 || k == 0 || r < p {
            return Err(ElError::DomainError(format!(
                "model dimensions must satisfy r >= p >= 1 (got p={p}, r={r})"
            )));
        }
        Ok(EstimatingModel {
            name: name.into(),
            k,
            p,
            r,
            kind: ModelKind::Custom,
            g: Arc::new(g),
            jac: Arc::new(jac),
            domain: Arc::new(|_| true),
        })
    }

    pub fn with_domain(mut self, domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(domain);
        self
    }

    fn with_kind(mut self, kind: ModelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.p && theta.iter().all(|v| v.is_finite()) && (self.domain)(theta)
    }

    /// `g(x, θ)` into a caller-provided buffer.
    #[inline]
    pub fn g_into(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        (self.g)(x, theta, out)
    }

    /// `G(x, θ)` (r×p, row-major) into a caller-provided buffer.
    #[inline]
    pub fn jac_into(&self, x: &[f64], theta: &[f64], out: &mut [f64]) {
        (self.jac)(x, theta, out)
    }

    pub fn g(&self, x: &[f64], theta: &[f64]) -> DVector<f64> {
        let mut out = vec![0.0; self.r];
        self.g_into(x, theta, &mut out);
        DVector::from_vec(out)
    }

    pub fn jacobian(&self, x: &[f64], theta: &[f64]) -> DMatrix<f64> {
        let mut out = vec![0.0; self.r * self.p];
        self.jac_into(x, theta, &mut out);
        DMatrix::from_row_slice(self.r, self.p, &out)
    }

    fn check(&self, sample: &Sample, theta: &[f64]) -> Result<()> {
        if sample.k() != self.k || theta.len() != self.p {
            return Err(ElError::DomainError(format!(
                "dimension mismatch: model (k={}, p={}) vs sample k={} and theta of length {}",
                self.k,
                self.p,
                sample.k(),
                theta.len()
            )));
        }
        if !self.in_domain(theta) {
            return Err(ElError::ParameterOutOfDomain { theta: theta.to_vec() });
        }
        Ok(())
    }

    /// Row-major n×r values of `g` over the sample, validated for finiteness.
    pub fn eval_flat(&self, sample: &Sample, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(sample, theta)?;
        let r = self.r;
        let mut out = vec![0.0; sample.n() * r];
        for i in 0..sample.n() {
            let slot = &mut out[i * r..(i + 1) * r];
            self.g_into(sample.row(i), theta, slot);
            if slot.iter().any(|v| !v.is_finite()) {
                return Err(ElError::NumericalFailure { row: i });
            }
        }
        Ok(out)
    }

    /// Row-major n×(r·p) values of `G` over the sample.
    pub fn jac_flat(&self, sample: &Sample, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(sample, theta)?;
        let m = self.r * self.p;
        let mut out = vec![0.0; sample.n() * m];
        for i in 0..sample.n() {
            let slot = &mut out[i * m..(i + 1) * m];
            self.jac_into(sample.row(i), theta, slot);
            if slot.iter().any(|v| !v.is_finite()) {
                return Err(ElError::NumericalFailure { row: i });
            }
        }
        Ok(out)
    }
}

/// Built-in constraint families, for specialised restricted solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstraintKind {
    /// `c(u, v) = v − κu²`; κ = 1 + ρ² with ρ the coefficient of variation.
    CovRatio { kappa: f64 },
    /// `c(θ) = θ − θ₀` (scalar parameter).
    Pin { theta0: f64 },
    Custom,
}

/// Equality restrictions `c(θ) = 0` with `q ≤ p` components.
#[derive(Clone)]
pub struct Constraint {
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub kind: ConstraintKind,
    c: Arc<ConstraintFn>,
    cjac: Arc<ConstraintFn>,
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Constraint({}, p={}, q={})", self.name, self.p, self.q)
    }
}

impl Constraint {
    pub fn new(
        name: impl Into<String>,
        p: usize,
        q: usize,
        c: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        cjac: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if q == 0 || q > p {
            return Err(ElError::DomainError(format!("constraint needs 1 <= q <= p (q={q}, p={p})")));
        }
        Ok(Constraint {
            name: name.into(),
            p,
            q,
            kind: ConstraintKind::Custom,
            c: Arc::new(c),
            cjac: Arc::new(cjac),
        })
    }

    pub fn c(&self, theta: &[f64]) -> DVector<f64> {
        let mut out = vec![0.0; self.q];
        (self.c)(theta, &mut out);
        DVector::from_vec(out)
    }

    /// q×p Jacobian `C(θ)`.
    pub fn jacobian(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut out = vec![0.0; self.q * self.p];
        (self.cjac)(theta, &mut out);
        DMatrix::from_row_slice(self.q, self.p, &out)
    }
}

/// Row i of the result is `g(X_i, θ)`.
pub fn eval_g_all(model: &EstimatingModel, sample: &Sample, theta: &[f64]) -> Result<DMatrix<f64>> {
    let flat = model.eval_flat(sample, theta)?;
    Ok(DMatrix::from_row_slice(sample.n(), model.r, &flat))
}

/// `ḡₙ(θ) = (1/n) Σ g(X_i, θ)`.
pub fn gbar(model: &EstimatingModel, sample: &Sample, theta: &[f64]) -> Result<DVector<f64>> {
    let flat = model.eval_flat(sample, theta)?;
    Ok(mean_rows(&flat, sample.n(), model.r))
}

pub(crate) fn mean_rows(flat: &[f64], n: usize, r: usize) -> DVector<f64> {
    let mut out = DVector::zeros(r);
    for row in flat.chunks_exact(r) {
        for j in 0..r {
            out[j] += row[j];
        }
    }
    out / n as f64
}

/// `(1/n) Σ G(X_i, θ)` as an r×p matrix.
pub fn gbar_jacobian(model: &EstimatingModel, sample: &Sample, theta: &[f64]) -> Result<DMatrix<f64>> {
    let flat = model.jac_flat(sample, theta)?;
    let m = mean_rows(&flat, sample.n(), model.r * model.p);
    Ok(DMatrix::from_row_slice(model.r, model.p, m.as_slice()))
}

/// `g = x − θ`.
pub fn builtin_mean_model() -> EstimatingModel {
    EstimatingModel::new(
        "mean",
        1,
        1,
        1,
        |x, th, out| out[0] = x[0] - th[0],
        |_, _, out| out[0] = -1.0,
    )
    .expect("valid dimensions")
    .with_kind(ModelKind::Mean)
}

/// `g₁ = x − θ`, `g₂ = x² − 2θ² − 1`: a normal mean θ with variance θ² + 1.
pub fn builtin_mean_variance_model() -> EstimatingModel {
    EstimatingModel::new(
        "meanvar",
        1,
        1,
        2,
        |x, th, out| {
            out[0] = x[0] - th[0];
            out[1] = x[0] * x[0] - 2.0 * th[0] * th[0] - 1.0;
        },
        |_, th, out| {
            out[0] = -1.0;
            out[1] = -4.0 * th[0];
        },
    )
    .expect("valid dimensions")
    .with_kind(ModelKind::MeanVariance)
}

/// First and second raw moments `θ = (u, v)` with the unit-CoV constraint.
///
/// The domain is `v > u²` so that the implied variance is positive.
pub fn builtin_cov_model() -> (EstimatingModel, Constraint) {
    let model = EstimatingModel::new(
        "cov",
        1,
        2,
        2,
        |x, th, out| {
            out[0] = x[0] - th[0];
            out[1] = x[0] * x[0] - th[1];
        },
        |_, _, out| {
            out.copy_from_slice(&[-1.0, 0.0, 0.0, -1.0]);
        },
    )
    .expect("valid dimensions")
    .with_kind(ModelKind::CoefficientOfVariation)
    .with_domain(|th| th[1] > th[0] * th[0]);
    (model, cov_constraint(1.0))
}

/// `c_ρ(u, v) = v − (1 + ρ²)u²`: the coefficient of variation equals ρ.
pub fn cov_constraint(rho: f64) -> Constraint {
    let kappa = 1.0 + rho * rho;
    let mut c = Constraint::new(
        format!("cov(rho={rho})"),
        2,
        1,
        move |th, out| out[0] = th[1] - kappa * th[0] * th[0],
        move |th, out| {
            out[0] = -2.0 * kappa * th[0];
            out[1] = 1.0;
        },
    )
    .expect("valid dimensions");
    c.kind = ConstraintKind::CovRatio { kappa };
    c
}

/// `c(θ) = θ − θ₀` for a scalar parameter.
pub fn pin_constraint(theta0: f64) -> Constraint {
    let mut c = Constraint::new(
        format!("pin({theta0})"),
        1,
        1,
        move |th, out| out[0] = th[0] - theta0,
        |_, out| out[0] = 1.0,
    )
    .expect("valid dimensions");
    c.kind = ConstraintKind::Pin { theta0 };
    c
}

/// A point at which Jacobians are probed.
#[derive(Clone, Debug)]
pub struct Probe {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Outcome of [`check_jacobians`].
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    pub max_rel_error: f64,
    /// (`"G"` or `"C"`, probe index, row, column) of the worst entry.
    pub worst: Option<(&'static str, usize, usize, usize)>,
    pub pass: bool,
}

/// Threshold separating correct analytic Jacobians from wrong ones.
pub const JACOBIAN_TOL: f64 = 1e-5;

/// Compare analytic `G` (and `C`) with central finite differences.
///
/// Step is `1e-6·max(1, |θ_j|)`; the discrepancy is relative to
/// `max(1, |analytic|)`.
pub fn check_jacobians(
    model: &EstimatingModel,
    constraint: Option<&Constraint>,
    probes: &[Probe],
) -> JacobianReport {
    let mut worst_err = 0.0_f64;
    let mut worst = None;
    let mut record = |err: f64, tag, pi, i, j| {
        if err > worst_err || !err.is_finite() {
            worst_err = if err.is_finite() { err } else { f64::INFINITY };
            worst = Some((tag, pi, i, j));
        }
    };
    for (pi, probe) in probes.iter().enumerate() {
        let th = &probe.theta;
        let analytic = model.jacobian(&probe.x, th);
        for j in 0..model.p {
            let h = 1e-6 * th[j].abs().max(1.0);
            let mut up = th.clone();
            let mut dn = th.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (model.g(&probe.x, &up) - model.g(&probe.x, &dn)) / (2.0 * h);
            for i in 0..model.r {
                let a = analytic[(i, j)];
                record((a - fd[i]).abs() / a.abs().max(1.0), "G", pi, i, j);
            }
        }
        if let Some(c) = constraint {
            let analytic = c.jacobian(th);
            for j in 0..c.p {
                let h = 1e-6 * th[j].abs().max(1.0);
                let mut up = th.clone();
                let mut dn = th.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (c.c(&up) - c.c(&dn)) / (2.0 * h);
                for i in 0..c.q {
                    let a = analytic[(i, j)];
                    record((a - fd[i]).abs() / a.abs().max(1.0), "C", pi, i, j);
                }
            }
        }
    }
    JacobianReport {
        max_rel_error: worst_err,
        worst,
        pass: worst_err <= JACOBIAN_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[f64]) -> Sample {
        Sample::from_scalars(xs).unwrap()
    }

    #[test]
    fn mean_model_values() {
        let m = builtin_mean_model();
        let g = eval_g_all(&m, &s(&[-1.0, 0.0, 2.0]), &[0.0]).unwrap();
        assert_eq!(g.as_slice(), &[-1.0, 0.0, 2.0]);
        let g = eval_g_all(&m, &s(&[-1.0, 0.0, 2.0]), &[1.0]).unwrap();
        assert_eq!(g.as_slice(), &[-2.0, -1.0, 1.0]);
    }

    #[test]
    fn mean_variance_values() {
        let m = builtin_mean_variance_model();
        assert_eq!(m.g(&[1.0], &[0.0]).as_slice(), &[1.0, 0.0]);
        assert_eq!(m.jacobian(&[0.3], &[1.0]).as_slice(), &[-1.0, -4.0]);
        let gb = gbar(&m, &s(&[1.0, -1.0]), &[0.0]).unwrap();
        assert_eq!(gb.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn gbar_is_sample_mean_residual() {
        let m = builtin_mean_model();
        let x = s(&[-1.0, 0.0, 2.0]);
        assert!(gbar(&m, &x, &[1.0 / 3.0]).unwrap()[0].abs() < 1e-15);
        assert!((gbar(&m, &x, &[0.0]).unwrap()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cov_model_jacobians() {
        let (m, c) = builtin_cov_model();
        assert_eq!(m.jacobian(&[5.0], &[0.3, 4.0]), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]));
        assert_eq!(c.jacobian(&[2.0, 9.0]).as_slice(), &[-8.0, 1.0]);
        assert!(!m.in_domain(&[2.0, 3.0]));
        assert!(matches!(
            gbar(&m, &s(&[1.0, 2.0]), &[2.0, 3.0]),
            Err(ElError::ParameterOutOfDomain { .. })
        ));
    }

    #[test]
    fn jacobian_check_builtins_pass() {
        for m in [builtin_mean_model(), builtin_mean_variance_model()] {
            let probes: Vec<Probe> = [-0.5, 0.0, 1.7]
                .iter()
                .map(|&t| Probe { x: vec![0.7], theta: vec![t] })
                .collect();
            assert!(check_jacobians(&m, None, &probes).pass);
        }
        let (m, c) = builtin_cov_model();
        let probes = vec![Probe { x: vec![1.3], theta: vec![1.0, 2.0] }];
        assert!(check_jacobians(&m, Some(&c), &probes).pass);
    }

    #[test]
    fn jacobian_check_catches_wrong_derivative() {
        let bad = EstimatingModel::new(
            "bad",
            1,
            1,
            2,
            |x, th, out| {
                out[0] = x[0] - th[0];
                out[1] = x[0] * x[0] - th[0] * th[0];
            },
            |_, _, out| {
                out[0] = -1.0;
                out[1] = 0.0;
            },
        )
        .unwrap();
        let rep = check_jacobians(&bad, None, &[Probe { x: vec![1.0], theta: vec![1.5] }]);
        assert!(!rep.pass);
        assert_eq!(rep.worst, Some(("G", 0, 1, 0)));
    }

    #[test]
    fn non_finite_sample_rejected() {
        assert!(Sample::from_scalars(&[1.0, f64::NAN]).is_err());
        assert!(builtin_mean_model().eval_flat(&s(&[1e308, 2.0]), &[-1e308]).is_err());
    }
}
