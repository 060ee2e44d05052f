//! The inner Lagrange-multiplier problem.
//!
//! For fixed θ, `t(θ)` maximizes the concave map `t ↦ Σ log(1 + tᵀg_i)` on
//! the region where every `1 + tᵀg_i > 1/n` (each weight at most one). The
//! solver is damped Newton from `t = 0` with Armijo backtracking.

use nalgebra::{DMatrix, DVector};

use crate::error::{ElError, Result};
use crate::linalg::spd_solve;
use crate::model::{EstimatingModel, Sample};

/// Solution of the inner problem at one θ.
#[derive(Clone, Debug, PartialEq)]
pub struct ELSolution {
    pub theta: Vec<f64>,
    /// Lagrange multipliers (length r).
    pub t: DVector<f64>,
    /// `p_i = 1/(n(1 + tᵀg_i))`.
    pub weights: Vec<f64>,
    /// `A_i = 1 + tᵀg_i`, kept because most statistics are functions of it.
    pub denominators: Vec<f64>,
    /// `ℓ = −Σ log A_i`.
    pub logel: f64,
    pub iterations: usize,
    /// Final `max_j |(1/n) Σ g_ij / A_i|`.
    pub gradient_norm: f64,
}

impl ELSolution {
    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Build from an already-known multiplier vector (no solving).
    pub(crate) fn from_t(theta: Vec<f64>, t: DVector<f64>, g: &[f64], r: usize, iterations: usize) -> Self {
        let n = g.len() / r;
        let nf = n as f64;
        let mut denominators = Vec::with_capacity(n);
        let mut grad = vec![0.0; r];
        for row in g.chunks_exact(r) {
            let a = 1.0 + dot(t.as_slice(), row);
            for j in 0..r {
                grad[j] += row[j] / a;
            }
            denominators.push(a);
        }
        let weights = denominators.iter().map(|a| 1.0 / (nf * a)).collect();
        let logel = -denominators.iter().map(|a| a.ln()).sum::<f64>();
        let gradient_norm = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / nf;
        ELSolution { theta, t, weights, denominators, logel, iterations, gradient_norm }
    }
}

/// Tuning of the inner Newton iteration.
#[derive(Clone, Copy, Debug)]
pub struct InnerOptions {
    pub max_iter: usize,
    /// Convergence threshold on the mean-gradient max-norm.
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { max_iter: 100, tol: 1e-10, max_halvings: 50 }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `t(θ)`, weights and log-EL at `theta`.
pub fn solve_t(model: &EstimatingModel, sample: &Sample, theta: &[f64]) -> Result<ELSolution> {
    solve_t_warm(model, sample, theta, None)
}

/// As [`solve_t`], optionally starting from a previous multiplier vector.
///
/// An infeasible warm start is silently replaced by `t = 0`.
pub fn solve_t_warm(
    model: &EstimatingModel,
    sample: &Sample,
    theta: &[f64],
    warm: Option<&DVector<f64>>,
) -> Result<ELSolution> {
    let g = model.eval_flat(sample, theta)?;
    solve_t_flat(&g, model.r, theta, warm, InnerOptions::default())
}

/// `ℓ_{E,n}(θ) = −Σ log(1 + t(θ)ᵀg_i)`.
pub fn log_el(model: &EstimatingModel, sample: &Sample, theta: &[f64]) -> Result<f64> {
    Ok(solve_t(model, sample, theta)?.logel)
}

struct Eval {
    ln_sum: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

/// Objective pieces at `t`, or `None` when some `A_i ≤ 1/n`.
fn evaluate(g: &[f64], r: usize, t: &[f64], floor: f64) -> Option<Eval> {
    let mut ln_sum = 0.0;
    let mut grad = vec![0.0; r];
    let mut hess = vec![0.0; r * r];
    for row in g.chunks_exact(r) {
        let a = 1.0 + dot(t, row);
        if !(a > floor) {
            return None;
        }
        ln_sum += a.ln();
        let inv = 1.0 / a;
        for j in 0..r {
            let gj = row[j] * inv;
            grad[j] += gj;
            for l in 0..=j {
                hess[j * r + l] += gj * row[l] * inv;
            }
        }
    }
    for j in 0..r {
        for l in 0..j {
            hess[l * r + j] = hess[j * r + l];
        }
    }
    Some(Eval { ln_sum, grad, hess })
}

/// True when some `A_i` sits on the `1/n` floor: the constrained maximum is on
/// the boundary, so no interior stationary point exists.
fn pressed_to_floor(g: &[f64], r: usize, t: &[f64], floor: f64) -> bool {
    g.chunks_exact(r).any(|row| 1.0 + dot(t, row) - floor < 1e-10 * floor)
}

/// Core solver on a precomputed row-major n×r matrix of `g` values.
pub(crate) fn solve_t_flat(
    g: &[f64],
    r: usize,
    theta: &[f64],
    warm: Option<&DVector<f64>>,
    opts: InnerOptions,
) -> Result<ELSolution> {
    let n = g.len() / r;
    if n < 2 {
        return Err(ElError::DomainError("at least two observations are required".into()));
    }
    let nf = n as f64;
    let floor = 1.0 / nf;
    let infeasible = || ElError::InfeasibleTheta { theta: theta.to_vec() };

    if r == 1 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in g {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == 0.0 && hi == 0.0 {
            return Ok(ELSolution::from_t(theta.to_vec(), DVector::zeros(1), g, 1, 0));
        }
        if !(lo < 0.0 && hi > 0.0) {
            return Err(infeasible());
        }
    }

    let mut t: Vec<f64> = vec![0.0; r];
    let mut cur = evaluate(g, r, &t, floor).expect("t = 0 is always interior");
    if let Some(w) = warm {
        if w.len() == r {
            if let Some(e) = evaluate(g, r, w.as_slice(), floor) {
                if e.ln_sum >= cur.ln_sum {
                    t = w.as_slice().to_vec();
                    cur = e;
                }
            }
        }
    }

    let gnorm = |e: &Eval| e.grad.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / nf;
    let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);

    for iter in 0..opts.max_iter {
        let gn = gnorm(&cur);
        let hess = DMatrix::from_row_slice(r, r, &cur.hess);
        let grad = DVector::from_column_slice(&cur.grad);
        let d = spd_solve(&hess, &grad);
        let slope = grad.dot(&d);

        if gn <= opts.tol {
            // one polishing step: quadratic convergence brings the gradient
            // to rounding level, which the closed-form statistics rely on
            let cand: Vec<f64> = t.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
            if let Some(e) = evaluate(g, r, &cand, floor) {
                if gnorm(&e) < gn {
                    t = cand;
                }
            }
            return Ok(ELSolution::from_t(theta.to_vec(), DVector::from_vec(t), g, r, iter + 1));
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = t.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
            if let Some(e) = evaluate(g, r, &cand, floor) {
                // Near the optimum the objective change drops below the
                // rounding error of the log-sum and Armijo becomes a coin
                // toss; there, a smaller gradient is the acceptance test.
                let flat = (e.ln_sum - cur.ln_sum).abs() <= 64.0 * f64::EPSILON * cur.ln_sum.abs().max(1.0);
                if e.ln_sum >= cur.ln_sum + 1e-4 * step * slope || (flat && gnorm(&e) < gn) {
                    accepted = Some((cand, e));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, e)) => {
                t = cand;
                cur = e;
            }
            None => {
                // the line search collapsed: either we already sit at the
                // optimum up to rounding, or the optimum is not interior
                if gn <= 1e-8 * scale {
                    return Ok(ELSolution::from_t(theta.to_vec(), DVector::from_vec(t), g, r, iter + 1));
                }
                return Err(infeasible());
            }
        }
        let tn = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if tn > 1e8 || pressed_to_floor(g, r, &t, floor) {
            return Err(infeasible());
        }
    }
    let tn = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if tn > 1e6 {
        return Err(infeasible());
    }
    if gnorm(&cur) <= 1e-8 * scale {
        return Ok(ELSolution::from_t(theta.to_vec(), DVector::from_vec(t), g, r, opts.max_iter));
    }
    Err(ElError::MaxIterations { iterations: opts.max_iter })
}
