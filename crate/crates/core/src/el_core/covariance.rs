//! Sample versions of the asymptotic covariance matrices and influence
//! functions of the EL estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::sym_inverse;
use crate::model::{Constraint, EstimatingModel, Sample};

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEstimates {
    /// `(1/n) Σ g gᵀ`
    pub s11: DMatrix<f64>,
    /// `(1/n) Σ G`
    pub s12: DMatrix<f64>,
    pub s11_inv: DMatrix<f64>,
    /// `(S12ᵀ S11⁻¹ S12)⁻¹`
    pub v: DMatrix<f64>,
    /// `S11⁻¹ − S11⁻¹ S12 V S12ᵀ S11⁻¹`
    pub r: DMatrix<f64>,
    /// `(C V Cᵀ)⁻¹` when a constraint is supplied.
    pub q: Option<DMatrix<f64>>,
    /// `V − V Cᵀ Q C V` when a constraint is supplied.
    pub p: Option<DMatrix<f64>>,
    /// `C(θ)` when a constraint is supplied.
    pub c: Option<DMatrix<f64>>,
}

/// Uniformly weighted moments at `theta`.
pub fn estimate_covariances(
    model: &EstimatingModel,
    sample: &Sample,
    theta: &[f64],
    constraint: Option<&Constraint>,
) -> Result<CovarianceEstimates> {
    let w = vec![1.0 / sample.n() as f64; sample.n()];
    estimate_covariances_weighted(model, sample, theta, &w, constraint)
}

/// Same matrices with the moments taken under arbitrary weights `w`
/// (for example the EL weights `p_i(θ)`).
pub fn estimate_covariances_weighted(
    model: &EstimatingModel,
    sample: &Sample,
    theta: &[f64],
    w: &[f64],
    constraint: Option<&Constraint>,
) -> Result<CovarianceEstimates> {
    let (r, p) = (model.r, model.p);
    let g = model.eval_flat(sample, theta)?;
    let jac = model.jac_flat(sample, theta)?;
    let mut s11 = DMatrix::zeros(r, r);
    let mut s12 = DMatrix::zeros(r, p);
    for i in 0..sample.n() {
        let gi = DVector::from_column_slice(&g[i * r..(i + 1) * r]);
        s11 += &gi * gi.transpose() * w[i];
        s12 += DMatrix::from_row_slice(r, p, &jac[i * r * p..(i + 1) * r * p]) * w[i];
    }
    let s11_inv = sym_inverse(&s11)?;
    let v = sym_inverse(&(s12.transpose() * &s11_inv * &s12))?;
    let k = &s11_inv * &s12;
    let rm = &s11_inv - &k * &v * k.transpose();
    let (q, pm, cm) = match constraint {
        Some(c) => {
            let cm = c.jacobian(theta);
            let q = sym_inverse(&(&cm * &v * cm.transpose()))?;
            let pm = &v - &v * cm.transpose() * &q * &cm * &v;
            (Some(q), Some(pm), Some(cm))
        }
        None => (None, None, None),
    };
    Ok(CovarianceEstimates { s11, s12, s11_inv, v, r: rm, q, p: pm, c: cm })
}

/// First-order influence function of θ̂ at the point `x`.
///
/// Computed as `−V S12ᵀ S11⁻¹ g(x, θ₀)`; the sign makes the mean model's
/// influence function equal to `x − θ₀`.
pub fn influence_function(
    model: &EstimatingModel,
    x: &[f64],
    theta0: &[f64],
    cov: &CovarianceEstimates,
) -> DVector<f64> {
    let g = model.g(x, theta0);
    -(&cov.v * cov.s12.transpose() * &cov.s11_inv * g)
}

/// Second-order influence function `2 gᵀ S11⁻¹ S12 V S12ᵀ S11⁻¹ g ≥ 0`.
pub fn influence_function_2(
    model: &EstimatingModel,
    x: &[f64],
    theta0: &[f64],
    cov: &CovarianceEstimates,
) -> f64 {
    let g = model.g(x, theta0);
    let y = cov.s12.transpose() * &cov.s11_inv * g;
    (2.0 * y.dot(&(&cov.v * &y))).max(0.0)
}
