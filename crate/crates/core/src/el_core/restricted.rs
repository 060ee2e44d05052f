//! Restricted estimation: maximize `ℓ_{E,n}(θ)` subject to `c(θ) = 0`.
//!
//! The stationarity conditions in `(θ, t, ν)` are
//!
//! ```text
//! ξ₁ = (1/n) Σ g_i / A_i              = 0   (r equations)
//! ξ₂ = (1/n) Σ G_iᵀ t / A_i + Cᵀν     = 0   (p equations)
//! ξ₃ = c(θ)                           = 0   (q equations)
//! ```
//!
//! with `A_i = 1 + tᵀg(X_i, θ)`. The generic path solves all `p + r + q`
//! equations by damped Newton. The coefficient-of-variation family
//! `v = κu²` has a two-equation reduction in `(u, γ)` because there
//! `t = (−2κuγ, γ)` and `ν = γ`.

use nalgebra::{DMatrix, DVector};

use super::fit::{fit_unrestricted, newton_solve, FitOptions};
use super::inner::{solve_t_flat, solve_t_warm, ELSolution, InnerOptions};
use crate::error::{ElError, Result};
use crate::linalg::general_inverse;
use crate::model::{Constraint, ConstraintKind, EstimatingModel, ModelKind, Sample};

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedFit {
    pub theta_tilde: Vec<f64>,
    pub nu_tilde: DVector<f64>,
    pub inner: ELSolution,
    pub converged: bool,
    /// Max-norm of the stacked KKT residual at the solution.
    pub kkt_residual: f64,
}

const KKT_TOL: f64 = 1e-8;

/// Restricted EL estimator θ̃ with its multipliers.
///
/// Dispatches to the reduced solver for the built-in CoV model and to a
/// direct solve for a scalar pin constraint; everything else goes through
/// the stacked KKT Newton iteration.
pub fn fit_restricted(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    opts: &FitOptions,
) -> Result<RestrictedFit> {
    check_dims(model, constraint)?;
    match constraint.kind {
        ConstraintKind::CovRatio { kappa } if model.kind == ModelKind::CoefficientOfVariation => {
            fit_cov_reduced(model, sample, kappa)
        }
        ConstraintKind::Pin { theta0 } if model.p == 1 => fit_pinned(model, sample, theta0),
        _ => fit_restricted_kkt(model, constraint, sample, opts),
    }
}

fn check_dims(model: &EstimatingModel, constraint: &Constraint) -> Result<()> {
    if constraint.p != model.p {
        return Err(ElError::DomainError(format!(
            "constraint has p={} but the model has p={}",
            constraint.p, model.p
        )));
    }
    Ok(())
}

/// Stacked KKT residual at `(θ, t, ν)`; `None` outside the feasible region.
pub fn kkt_residual(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    theta: &[f64],
    t: &DVector<f64>,
    nu: &DVector<f64>,
) -> Option<DVector<f64>> {
    shifted_residual(model, constraint, sample, theta, t, nu, None)
}

/// Residual of the system with `ξ₃ = c(θ) − shift` (used for continuation).
fn shifted_residual(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    theta: &[f64],
    t: &DVector<f64>,
    nu: &DVector<f64>,
    shift: Option<&DVector<f64>>,
) -> Option<DVector<f64>> {
    let (p, r, q) = (model.p, model.r, constraint.q);
    if !model.in_domain(theta) {
        return None;
    }
    let n = sample.n();
    let nf = n as f64;
    let g = model.eval_flat(sample, theta).ok()?;
    let jac = model.jac_flat(sample, theta).ok()?;
    let mut out = DVector::zeros(p + r + q);
    for i in 0..n {
        let gi = &g[i * r..(i + 1) * r];
        let a = 1.0 + gi.iter().zip(t.iter()).map(|(x, y)| x * y).sum::<f64>();
        if !(a > 1.0 / nf) {
            return None;
        }
        for l in 0..r {
            out[l] += gi[l] / (a * nf);
        }
        let gm = &jac[i * r * p..(i + 1) * r * p];
        for j in 0..p {
            let mut s = 0.0;
            for l in 0..r {
                s += gm[l * p + j] * t[l];
            }
            out[r + j] += s / (a * nf);
        }
    }
    let cm = constraint.jacobian(theta);
    let ctn = cm.transpose() * nu;
    for j in 0..p {
        out[r + j] += ctn[j];
    }
    let c = constraint.c(theta);
    for k in 0..q {
        out[r + p + k] = c[k] - shift.map_or(0.0, |s| s[k]);
    }
    Some(out)
}

fn kkt_jacobian(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    theta: &[f64],
    t: &DVector<f64>,
    nu: &DVector<f64>,
) -> Option<DMatrix<f64>> {
    let (p, r, q) = (model.p, model.r, constraint.q);
    let n = sample.n();
    let nf = n as f64;
    let dim = r + p + q;
    let g = model.eval_flat(sample, theta).ok()?;
    let jac = model.jac_flat(sample, theta).ok()?;
    let mut jm = DMatrix::zeros(dim, dim);
    // variable order: (t, θ, ν) to match the residual layout (ξ₁, ξ₂, ξ₃)
    let (ti, thi, nui) = (0, r, r + p);
    for i in 0..n {
        let gi = DVector::from_column_slice(&g[i * r..(i + 1) * r]);
        let gm = DMatrix::from_row_slice(r, p, &jac[i * r * p..(i + 1) * r * p]);
        let a = 1.0 + gi.dot(t);
        let tg = gm.transpose() * t; // p-vector Gᵀt
        // ∂ξ₁/∂t = −(1/n) Σ g gᵀ/A²
        let block = &gi * gi.transpose() / (a * a * nf);
        {
            let mut v = jm.view_mut((0, ti), (r, r));
            v -= &block;
        }
        // ∂ξ₁/∂θ = (1/n) Σ [G/A − g (tᵀG)/A²]
        let block = &gm / (a * nf) - &gi * tg.transpose() / (a * a * nf);
        {
            let mut v = jm.view_mut((0, thi), (r, p));
            v += &block;
        }
        // ∂ξ₂/∂t = (1/n) Σ [Gᵀ/A − Gᵀt gᵀ/A²]
        let block = gm.transpose() / (a * nf) - &tg * gi.transpose() / (a * a * nf);
        {
            let mut v = jm.view_mut((r, ti), (p, r));
            v += &block;
        }
    }
    // ∂ξ₂/∂θ by central differences (it contains second derivatives of g and c)
    for j in 0..p {
        let h = 1e-6 * theta[j].abs().max(1.0);
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let fu = kkt_residual(model, constraint, sample, &up, t, nu)?;
        let fd = kkt_residual(model, constraint, sample, &dn, t, nu)?;
        for k in 0..p {
            jm[(r + k, thi + j)] = (fu[r + k] - fd[r + k]) / (2.0 * h);
        }
    }
    let cm = constraint.jacobian(theta);
    jm.view_mut((r, nui), (p, q)).copy_from(&cm.transpose());
    jm.view_mut((r + p, thi), (q, p)).copy_from(&cm);
    Some(jm)
}

/// Generic restricted solve on the full stacked system.
pub fn fit_restricted_kkt(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    opts: &FitOptions,
) -> Result<RestrictedFit> {
    check_dims(model, constraint)?;
    let (p, r, q) = (model.p, model.r, constraint.q);
    let start = fit_unrestricted(model, sample, opts)
        .map(|f| f.theta_hat)
        .or_else(|_| opts.initial.clone().ok_or(ElError::InfeasibleRegion))?;
    let direct = project_onto_constraint(model, constraint, &start)
        .ok()
        .and_then(|theta0| {
            let sol0 = solve_t_warm(model, sample, &theta0, None).ok()?;
            let nu0 = least_squares_nu(model, constraint, sample, &theta0, &sol0.t)?;
            let z = stack(&sol0.t, &theta0, &nu0);
            newton_kkt(model, constraint, sample, z, None)
        })
        .filter(|(_, res, _)| *res <= KKT_TOL);
    let (z, res, iters) = match direct {
        Some(out) => out,
        None => continuation(model, constraint, sample, &start)?,
    };
    let (t, th, nu) = unstack(&z, r, p, q);
    finish(model, sample, th, t, nu, res, iters)
}

fn stack(t: &DVector<f64>, theta: &[f64], nu: &DVector<f64>) -> DVector<f64> {
    let (r, p, q) = (t.len(), theta.len(), nu.len());
    let mut z = DVector::zeros(r + p + q);
    z.rows_mut(0, r).copy_from(t);
    z.rows_mut(r, p).copy_from_slice(theta);
    z.rows_mut(r + p, q).copy_from(nu);
    z
}

fn unstack(z: &DVector<f64>, r: usize, p: usize, q: usize) -> (DVector<f64>, Vec<f64>, DVector<f64>) {
    (
        z.rows(0, r).into_owned(),
        z.rows(r, p).iter().copied().collect(),
        z.rows(r + p, q).into_owned(),
    )
}

/// ν solving the ξ₂ equations in the least-squares sense for fixed (θ, t).
fn least_squares_nu(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    theta: &[f64],
    t: &DVector<f64>,
) -> Option<DVector<f64>> {
    let (p, r, q) = (model.p, model.r, constraint.q);
    let f = kkt_residual(model, constraint, sample, theta, t, &DVector::zeros(q))?;
    let b = f.rows(r, p).into_owned();
    let cm = constraint.jacobian(theta);
    let cct = &cm * cm.transpose();
    Some(general_inverse(&cct).map(|inv| -(inv * cm * b)).unwrap_or_else(|_| DVector::zeros(q)))
}

/// Damped Newton on the (optionally shifted) stacked system from `z`.
/// Returns the final point, its residual max-norm and the iteration count.
fn newton_kkt(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    mut z: DVector<f64>,
    shift: Option<&DVector<f64>>,
) -> Option<(DVector<f64>, f64, usize)> {
    let (p, r, q) = (model.p, model.r, constraint.q);
    let resid = |z: &DVector<f64>| {
        let (t, th, nu) = unstack(z, r, p, q);
        shifted_residual(model, constraint, sample, &th, &t, &nu, shift)
    };
    let mut f = resid(&z)?;
    let mut iters = 0;
    while f.amax() > KKT_TOL * 1e-3 && iters < 100 {
        iters += 1;
        let (t, th, nu) = unstack(&z, r, p, q);
        let jm = kkt_jacobian(model, constraint, sample, &th, &t, &nu)?;
        let d = newton_solve(&jm, &f)?;
        let merit = f.norm_squared();
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let cand = &z - &d * step;
            if let Some(fc) = resid(&cand) {
                if fc.norm_squared() < (1.0 - 1e-4 * step) * merit {
                    z = cand;
                    f = fc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let res = f.amax();
    Some((z, res, iters))
}

/// Track the solution of `c(θ) = (1 − s)·c(θ̂)` from `s = 0`, where
/// `(θ̂, t = 0, ν = 0)` solves it exactly when r = p, up to `s = 1`.
fn continuation(
    model: &EstimatingModel,
    constraint: &Constraint,
    sample: &Sample,
    start: &[f64],
) -> Result<(DVector<f64>, f64, usize)> {
    let q = constraint.q;
    let c0 = constraint.c(start);
    let sol = solve_t_warm(model, sample, start, None).map_err(|_| ElError::InfeasibleConstraint)?;
    let nu0 = least_squares_nu(model, constraint, sample, start, &sol.t).unwrap_or_else(|| DVector::zeros(q));
    let mut z = stack(&sol.t, start, &nu0);
    let mut s = 0.0_f64;
    let mut ds = 0.25_f64;
    let mut total = 0;
    while s < 1.0 {
        let next = (s + ds).min(1.0);
        let shift = &c0 * (1.0 - next);
        match newton_kkt(model, constraint, sample, z.clone(), Some(&shift)) {
            Some((zn, res, it)) if res <= KKT_TOL => {
                z = zn;
                s = next;
                total += it;
                ds = (ds * 2.0).min(0.5);
            }
            _ => {
                ds *= 0.5;
                if ds < 1e-6 {
                    return Err(ElError::NoConvergence {
                        iterations: total,
                        residual: f64::NAN,
                        on_boundary: false,
                        trace: vec![s],
                    });
                }
            }
        }
    }
    let f = {
        let (t, th, nu) = unstack(&z, model.r, model.p, q);
        kkt_residual(model, constraint, sample, &th, &t, &nu).ok_or(ElError::InfeasibleConstraint)?
    };
    Ok((z, f.amax(), total))
}

fn finish(
    model: &EstimatingModel,
    sample: &Sample,
    theta: Vec<f64>,
    t: DVector<f64>,
    nu: DVector<f64>,
    residual: f64,
    iters: usize,
) -> Result<RestrictedFit> {
    let mut fit = finish_checked(model, sample, theta, t, nu, iters)?;
    fit.kkt_residual = residual;
    Ok(fit)
}

/// Build the weights from `t` and reject anything that is not a proper
/// distribution on the sample with every `A_i > 1/n`.
fn finish_checked(
    model: &EstimatingModel,
    sample: &Sample,
    theta: Vec<f64>,
    t: DVector<f64>,
    nu: DVector<f64>,
    iters: usize,
) -> Result<RestrictedFit> {
    let g = model.eval_flat(sample, &theta)?;
    let inner = ELSolution::from_t(theta.clone(), t, &g, model.r, iters);
    let floor = 1.0 / sample.n() as f64;
    if let Some(row) = inner.denominators.iter().position(|&a| !(a > floor)) {
        return Err(ElError::WeightViolation { row });
    }
    let total: f64 = inner.weights.iter().sum();
    if !((total - 1.0).abs() <= 1e-8) || inner.t.amax() > 1e8 {
        return Err(ElError::InfeasibleConstraint);
    }
    let res = inner.gradient_norm;
    Ok(RestrictedFit { theta_tilde: theta, nu_tilde: nu, inner, converged: true, kkt_residual: res })
}

/// A few Gauss–Newton steps `θ ← θ − Cᵀ(CCᵀ)⁻¹c(θ)` towards `{c = 0}`.
fn project_onto_constraint(model: &EstimatingModel, constraint: &Constraint, start: &[f64]) -> Result<Vec<f64>> {
    let mut theta = start.to_vec();
    for _ in 0..50 {
        let c = constraint.c(&theta);
        if c.amax() <= 1e-14 * (1.0 + theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            break;
        }
        let cm = constraint.jacobian(&theta);
        let inv = general_inverse(&(&cm * cm.transpose())).map_err(|_| ElError::InfeasibleConstraint)?;
        let d = cm.transpose() * inv * c;
        let mut step = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(d.iter()).map(|(a, b)| a - step * b).collect();
            if model.in_domain(&cand) {
                theta = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-10 {
                return Err(ElError::InfeasibleConstraint);
            }
        }
    }
    Ok(theta)
}

fn fit_pinned(model: &EstimatingModel, sample: &Sample, theta0: f64) -> Result<RestrictedFit> {
    let sol = solve_t_warm(model, sample, &[theta0], None)?;
    let jac = model.jac_flat(sample, &[theta0])?;
    // ξ₂ = (1/n)Σ Gᵀt/A + ν = 0 with C = 1
    let r = model.r;
    let nf = sample.n() as f64;
    let mut s = 0.0;
    for (i, gm) in jac.chunks_exact(r).enumerate() {
        let dot: f64 = gm.iter().zip(sol.t.iter()).map(|(a, b)| a * b).sum();
        s += dot / (sol.denominators[i] * nf);
    }
    let res = sol.gradient_norm;
    Ok(RestrictedFit {
        theta_tilde: vec![theta0],
        nu_tilde: DVector::from_element(1, -s),
        inner: sol,
        converged: true,
        kkt_residual: res,
    })
}

/// Residuals `(f₁, f₂)/n` of the reduced CoV system and their Jacobian.
fn cov_system(xs: &[f64], kappa: f64, u: f64, gamma: f64) -> Option<([f64; 2], [[f64; 2]; 2])> {
    let nf = xs.len() as f64;
    let floor = 1.0 / nf;
    let mut f = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for &x in xs {
        let h = x * x - 2.0 * kappa * u * x + kappa * u * u;
        let d = 1.0 + gamma * h;
        if !(d > floor) {
            return None;
        }
        let e1 = x - u;
        let e2 = x * x - kappa * u * u;
        let id = 1.0 / d;
        let id2 = id * id;
        f[0] += e1 * id;
        f[1] += e2 * id;
        j[0][0] += -id + 2.0 * kappa * gamma * e1 * e1 * id2;
        j[0][1] += -e1 * h * id2;
        j[1][0] += -2.0 * kappa * u * id + 2.0 * kappa * gamma * e2 * e1 * id2;
        j[1][1] += -e2 * h * id2;
    }
    for v in f.iter_mut() {
        *v /= nf;
    }
    for row in j.iter_mut() {
        for v in row.iter_mut() {
            *v /= nf;
        }
    }
    Some((f, j))
}

/// Solve `f₁(u, γ) = f₂(u, γ) = 0` for the constraint `v = κu²`.
pub fn fit_cov_reduced(model: &EstimatingModel, sample: &Sample, kappa: f64) -> Result<RestrictedFit> {
    if !(kappa > 1.0) {
        return Err(ElError::DomainError(format!("kappa = 1 + rho^2 must exceed 1, got {kappa}")));
    }
    let xs = sample.column(0);
    let nf = xs.len() as f64;
    let m1 = xs.iter().sum::<f64>() / nf;
    let scale = 1.0 + xs.iter().fold(0.0_f64, |m, x| m.max(x * x));
    let tol = 1e-13 * scale;

    let newton = |mut u: f64, mut gamma: f64| -> Option<(f64, f64, f64)> {
        let (mut f, mut j) = cov_system(&xs, kappa, u, gamma)?;
        for _ in 0..100 {
            let norm = f[0].abs().max(f[1].abs());
            if norm <= tol {
                return Some((u, gamma, norm));
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let du = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
            let dg = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
            let merit = f[0] * f[0] + f[1] * f[1];
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..50 {
                let (cu, cg) = (u - step * du, gamma - step * dg);
                if cu != 0.0 {
                    if let Some((fc, jc)) = cov_system(&xs, kappa, cu, cg) {
                        if fc[0] * fc[0] + fc[1] * fc[1] < (1.0 - 1e-4 * step) * merit {
                            u = cu;
                            gamma = cg;
                            f = fc;
                            j = jc;
                            moved = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !moved {
                let norm = f[0].abs().max(f[1].abs());
                return (norm <= 1e-10 * scale).then_some((u, gamma, norm));
            }
        }
        None
    };

    // f₁ = f₂ = 0 also holds in the limit γ → ∞ where every 1/D vanishes, so a root
    // only counts when the implied weights still sum to one
    let genuine = |(u, gamma, r): (f64, f64, f64)| -> Option<(f64, f64, f64)> {
        let mut inv_sum = 0.0;
        for &x in &xs {
            inv_sum += 1.0 / (1.0 + gamma * (x * x - 2.0 * kappa * u * x + kappa * u * u));
        }
        ((inv_sum / nf - 1.0).abs() <= 1e-8 && gamma.abs() < 1e8).then_some((u, gamma, r))
    };
    let solved = match newton(m1, 0.0).and_then(genuine) {
        Some(s) => s,
        None => {
            // fall back to maximizing the profile ℓ(u, κu²) in u, then polish
            let (u, gamma) = cov_profile_search(model, sample, kappa, m1).ok_or(ElError::InfeasibleConstraint)?;
            newton(u, gamma).and_then(genuine).ok_or(ElError::NoConvergence {
                iterations: 0,
                residual: f64::NAN,
                on_boundary: false,
                trace: vec![u],
            })?
        }
    };
    let (u, gamma, _) = solved;
    let theta = vec![u, kappa * u * u];
    if !model.in_domain(&theta) {
        return Err(ElError::InfeasibleConstraint);
    }
    let t = DVector::from_vec(vec![-2.0 * kappa * u * gamma, gamma]);
    let nu = DVector::from_element(1, gamma);
    finish_checked(model, sample, theta, t, nu, 0)
}

/// Grid plus golden-section maximization of `u ↦ ℓ(u, κu²)`.
fn cov_profile_search(model: &EstimatingModel, sample: &Sample, kappa: f64, m1: f64) -> Option<(f64, f64)> {
    let (_, sd) = sample.mean_sd(0);
    let span = 6.0 * sd.max(m1.abs()).max(1e-6);
    let ell = |u: f64| -> f64 {
        let th = [u, kappa * u * u];
        if !model.in_domain(&th) {
            return f64::NEG_INFINITY;
        }
        model
            .eval_flat(sample, &th)
            .ok()
            .and_then(|g| solve_t_flat(&g, 2, &th, None, InnerOptions::default()).ok())
            .map(|s| s.logel)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let m = 241;
    let grid: Vec<f64> = (0..m).map(|i| m1 - span + 2.0 * span * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| ell(u)).collect();
    let (best, &bv) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !bv.is_finite() {
        return None;
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(m - 1)]);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (ell(c), ell(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = ell(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = ell(d);
        }
    }
    let u = 0.5 * (a + b);
    let th = [u, kappa * u * u];
    let g = model.eval_flat(sample, &th).ok()?;
    let sol = solve_t_flat(&g, 2, &th, None, InnerOptions::default()).ok()?;
    Some((u, sol.t[1]))
}
