//! Unrestricted empirical maximum likelihood estimation.

use nalgebra::{DMatrix, DVector};

use super::inner::{solve_t_flat, ELSolution, InnerOptions};
use crate::error::{ElError, Result};
use crate::linalg::{general_inverse, max_abs, spd_solve, sym_inverse};
use crate::model::{gbar_jacobian, mean_rows, EstimatingModel, ModelKind, Sample};

/// Result of [`fit_unrestricted`].
#[derive(Clone, Debug, PartialEq)]
pub struct ELFit {
    pub theta_hat: Vec<f64>,
    pub inner: ELSolution,
    pub converged: bool,
    /// Objective (−ℓ or ‖ḡ‖) per outer iteration.
    pub objective_trace: Vec<f64>,
}

/// Outer-solver settings.
#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Starting value; defaults are model-specific (sample moments for the
    /// built-ins, the origin for custom models).
    pub initial: Option<Vec<f64>>,
    pub max_iter: usize,
    /// Residual tolerance for the r = p root finder.
    pub root_tol: f64,
    /// Profile-gradient tolerance for the r > p maximizer.
    pub grad_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { initial: None, max_iter: 200, root_tol: 1e-10, grad_tol: 1e-8 }
    }
}

fn default_start(model: &EstimatingModel, sample: &Sample) -> Vec<f64> {
    match model.kind {
        ModelKind::Mean | ModelKind::MeanVariance => vec![sample.mean_sd(0).0],
        ModelKind::CoefficientOfVariation => {
            let xs = sample.column(0);
            let n = xs.len() as f64;
            let m1 = xs.iter().sum::<f64>() / n;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
            vec![m1, m2]
        }
        ModelKind::Custom => vec![0.0; model.p],
    }
}

/// `θ̂`: root of `ḡ(θ) = 0` when r = p, maximizer of `ℓ_{E,n}` when r > p.
pub fn fit_unrestricted(model: &EstimatingModel, sample: &Sample, opts: &FitOptions) -> Result<ELFit> {
    if sample.n() < 2 {
        return Err(ElError::DomainError("at least two observations are required".into()));
    }
    let start = opts.initial.clone().unwrap_or_else(|| default_start(model, sample));
    if model.r == model.p {
        let (theta, trace) = solve_moment_equations(model, sample, &start, model.r, opts)?;
        let g = model.eval_flat(sample, &theta)?;
        let inner = solve_t_flat(&g, model.r, &theta, None, InnerOptions::default())?;
        return Ok(ELFit { theta_hat: theta, inner, converged: true, objective_trace: trace });
    }
    // moment estimate from the first p estimating functions
    let init = solve_moment_equations(model, sample, &start, model.p, opts)
        .map(|(th, _)| th)
        .unwrap_or(start.clone());
    match maximize_profile(model, sample, &init, opts) {
        Ok(fit) => Ok(fit),
        Err(e) if model.p == 1 => grid_fallback(model, sample, &init, opts).map_err(|_| e),
        Err(e) => Err(e),
    }
}

/// Damped Newton on the first `m` components of `ḡ(θ) = 0` (m = p).
fn solve_moment_equations(
    model: &EstimatingModel,
    sample: &Sample,
    start: &[f64],
    m: usize,
    opts: &FitOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = model.p;
    let resid = |th: &[f64]| -> Option<DVector<f64>> {
        if !model.in_domain(th) {
            return None;
        }
        let flat = model.eval_flat(sample, th).ok()?;
        let gb = mean_rows(&flat, sample.n(), model.r);
        Some(gb.rows(0, m).into_owned())
    };
    let mut theta = start.to_vec();
    let mut f = resid(&theta).ok_or(ElError::ParameterOutOfDomain { theta: theta.clone() })?;
    let scale = 1.0 + max_abs(sample.values());
    let mut trace = vec![f.amax()];
    for _ in 0..opts.max_iter {
        if f.amax() <= opts.root_tol * scale {
            return Ok((theta, trace));
        }
        let jac = gbar_jacobian(model, sample, &theta)?.rows(0, m).into_owned();
        let jinv = general_inverse(&jac)?;
        let d = -(jinv * &f);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = (0..p).map(|j| theta[j] + step * d[j]).collect();
            if let Some(fc) = resid(&cand) {
                if fc.amax() < f.amax() || fc.amax() <= opts.root_tol * scale {
                    theta = cand;
                    f = fc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        trace.push(f.amax());
        if !moved {
            break;
        }
    }
    if f.amax() <= opts.root_tol * scale * 100.0 {
        return Ok((theta, trace));
    }
    Err(ElError::NoConvergence {
        iterations: trace.len(),
        residual: f.amax(),
        on_boundary: false,
        trace,
    })
}

/// Profile value and gradient: `ℓ(θ)` and `∂ℓ/∂θ = −Σ G_iᵀ t / A_i`.
fn profile(
    model: &EstimatingModel,
    sample: &Sample,
    theta: &[f64],
    warm: Option<&DVector<f64>>,
) -> Option<(ELSolution, DVector<f64>)> {
    if !model.in_domain(theta) {
        return None;
    }
    let g = model.eval_flat(sample, theta).ok()?;
    let sol = solve_t_flat(&g, model.r, theta, warm, InnerOptions::default()).ok()?;
    let jac = model.jac_flat(sample, theta).ok()?;
    let (r, p) = (model.r, model.p);
    let mut grad = DVector::zeros(p);
    for (i, gi) in jac.chunks_exact(r * p).enumerate() {
        let a = sol.denominators[i];
        for j in 0..p {
            let mut s = 0.0;
            for l in 0..r {
                s += gi[l * p + j] * sol.t[l];
            }
            grad[j] -= s / a;
        }
    }
    Some((sol, grad))
}

/// BFGS ascent on `ℓ_{E,n}` with the envelope gradient.
fn maximize_profile(model: &EstimatingModel, sample: &Sample, init: &[f64], opts: &FitOptions) -> Result<ELFit> {
    let p = model.p;
    let n = sample.n() as f64;
    let (mut sol, mut grad) = profile(model, sample, init, None).ok_or(ElError::InfeasibleRegion)?;
    let mut theta = init.to_vec();

    // initial inverse Hessian of −ℓ from the quadratic approximation n ḡᵀS11⁻¹ḡ/2
    let mut hinv = {
        let g = model.eval_flat(sample, &theta)?;
        let mut s11 = DMatrix::zeros(model.r, model.r);
        for row in g.chunks_exact(model.r) {
            let v = DVector::from_column_slice(row);
            s11 += &v * v.transpose();
        }
        s11 /= n;
        let gb = gbar_jacobian(model, sample, &theta)?;
        sym_inverse(&s11)
            .ok()
            .and_then(|s| sym_inverse(&(gb.transpose() * s * &gb * n)).ok())
            .unwrap_or_else(|| DMatrix::identity(p, p) / n)
    };
    let mut trace = vec![-sol.logel];
    let mut on_boundary = false;
    for _ in 0..opts.max_iter {
        if grad.amax() <= opts.grad_tol {
            return Ok(ELFit { theta_hat: theta, inner: sol, converged: true, objective_trace: trace });
        }
        // ascent direction for ℓ (descent for −ℓ): d = H⁻¹ ∇ℓ
        let mut d = &hinv * &grad;
        if d.dot(&grad) <= 0.0 {
            hinv = DMatrix::identity(p, p) / n;
            d = &hinv * &grad;
        }
        let slope = d.dot(&grad);
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand: Vec<f64> = (0..p).map(|j| theta[j] + step * d[j]).collect();
            match profile(model, sample, &cand, Some(&sol.t)) {
                Some((s, gr)) if s.logel >= sol.logel + 1e-4 * step * slope => {
                    next = Some((cand, s, gr));
                    break;
                }
                Some(_) => {}
                None => on_boundary = true,
            }
            step *= 0.5;
        }
        let Some((cand, s, gr)) = next else {
            // stalled: accept when the gradient is at rounding level
            if grad.amax() <= 1e-6 * n.max(1.0) {
                return Ok(ELFit { theta_hat: theta, inner: sol, converged: true, objective_trace: trace });
            }
            return Err(ElError::NoConvergence {
                iterations: trace.len(),
                residual: grad.amax(),
                on_boundary,
                trace,
            });
        };
        on_boundary = false;
        let sv = DVector::from_iterator(p, (0..p).map(|j| cand[j] - theta[j]));
        // gradient of −ℓ changes by −(gr − grad)
        let yv = -(&gr - &grad);
        let sy = sv.dot(&yv);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let id = DMatrix::<f64>::identity(p, p);
            let left = &id - &sv * yv.transpose() * rho;
            let right = &id - &yv * sv.transpose() * rho;
            hinv = left * &hinv * right + &sv * sv.transpose() * rho;
        }
        theta = cand;
        sol = s;
        grad = gr;
        trace.push(-sol.logel);
    }
    Err(ElError::NoConvergence {
        iterations: trace.len(),
        residual: grad.amax(),
        on_boundary,
        trace,
    })
}

/// Coarse scan of `ℓ` on a grid around the start (scalar θ only), then a
/// golden-section refinement of the best bracket.
fn grid_fallback(model: &EstimatingModel, sample: &Sample, init: &[f64], opts: &FitOptions) -> Result<ELFit> {
    let (_, sd) = sample.mean_sd(0);
    let width = 10.0 * sd.max(1e-8) + 1e-8 * init[0].abs();
    let m = 401;
    let grid: Vec<f64> = (0..m).map(|i| init[0] - width + 2.0 * width * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = grid
        .iter()
        .map(|&th| profile(model, sample, &[th], None).map(|(s, _)| s.logel).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let (best, &bv) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if !bv.is_finite() {
        return Err(ElError::InfeasibleRegion);
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(m - 1)];
    let f = |th: f64| profile(model, sample, &[th], None).map(|(s, _)| s.logel).unwrap_or(f64::NEG_INFINITY);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    let th = 0.5 * (a + b);
    let (sol, grad) = profile(model, sample, &[th], None).ok_or(ElError::InfeasibleRegion)?;
    let converged = grad.amax() <= opts.grad_tol.max(1e-6);
    Ok(ELFit { theta_hat: vec![th], inner: sol, converged, objective_trace: vals })
}

/// Newton direction helper shared with the restricted solver.
pub(crate) fn newton_solve(j: &DMatrix<f64>, f: &DVector<f64>) -> Option<DVector<f64>> {
    j.clone().lu().solve(f).filter(|d| d.iter().all(|v| v.is_finite())).or_else(|| {
        let jt = j.transpose();
        Some(spd_solve(&(&jt * j), &(&jt * f)))
    })
}
