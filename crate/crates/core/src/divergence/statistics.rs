//! Divergences between weighted empirical distributions and the test
//! statistics built from them.
//!
//! Notation: `A_i = 1 + t(θ₀)ᵀg(X_i, θ₀)` on the null side and
//! `B_i = 1 + t(θ̂)ᵀg(X_i, θ̂)` on the fitted side. Both satisfy `Σ 1/A_i = n`
//! at a solved inner problem, which is what makes the power-divergence
//! closed forms below exact.

use std::fmt;

use serde::Serialize;

use super::h::HFunction;
use super::phi::{PhiFamily, LIMIT_EPS};
use crate::el_core::ELSolution;
use crate::error::{ElError, Result};

/// Which of the two statistic families to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StatisticKind {
    /// Difference of divergences from the empirical distribution.
    T,
    /// Divergence between the fitted and the null weighted empiricals.
    S,
}

/// A `(φ, h)` pair plus the T/S choice: indexes every simple-null statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub phi: PhiFamily,
    pub h: HFunction,
    pub kind: StatisticKind,
}

impl Family {
    pub fn power(lambda: f64, kind: StatisticKind) -> Self {
        Family { phi: PhiFamily::PowerDivergence(lambda), h: HFunction::Identity, kind }
    }

    /// Rényi statistic of order `a`: S-type with `φ_{a−1}` and the Rényi `h`.
    pub fn renyi(a: f64) -> Self {
        Family { phi: PhiFamily::PowerDivergence(a - 1.0), h: HFunction::Renyi(a), kind: StatisticKind::S }
    }

    pub fn sharma_mittal(a: f64, b: f64) -> Self {
        Family {
            phi: PhiFamily::PowerDivergence(a - 1.0),
            h: HFunction::SharmaMittal { a, b },
            kind: StatisticKind::S,
        }
    }

    pub fn bhattacharyya() -> Self {
        Family { phi: PhiFamily::Bhattacharyya, h: HFunction::Bhattacharyya, kind: StatisticKind::S }
    }

    pub fn with_kind(mut self, kind: StatisticKind) -> Self {
        self.kind = kind;
        self
    }

    /// `2n / (φ″(1) h′(0))` without the `n`.
    pub fn scale(&self) -> f64 {
        2.0 / (self.phi.phi_second_at_one() * self.h.h_prime_zero())
    }

    /// The Rényi order when this family is exactly the Rényi pair.
    pub fn renyi_order(&self) -> Option<f64> {
        match (&self.phi, &self.h) {
            (PhiFamily::PowerDivergence(l), HFunction::Renyi(a)) if (l - (a - 1.0)).abs() < 1e-15 => Some(*a),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            StatisticKind::T => "T",
            StatisticKind::S => "S",
        };
        if let Some(a) = self.renyi_order() {
            return write!(f, "{k}[renyi a={a}]");
        }
        match (&self.phi, &self.h) {
            (PhiFamily::PowerDivergence(l), HFunction::Identity) => write!(f, "{k}[lambda={l}]"),
            (phi, HFunction::Identity) => write!(f, "{k}[{phi}]"),
            (phi, h) => write!(f, "{k}[{phi}; {h}]"),
        }
    }
}

/// The weights of `F_{n,θ}` together with the denominators that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEmpirical {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    pub denominators: Vec<f64>,
}

impl From<&ELSolution> for WeightedEmpirical {
    fn from(el: &ELSolution) -> Self {
        WeightedEmpirical { theta: el.theta.clone(), weights: el.weights.clone(), denominators: el.denominators.clone() }
    }
}

/// Sum of `expm1(λ·ln x_i)·w_i`, i.e. `Σ w_i (x_i^λ − 1)`.
#[inline]
fn sum_pow_m1(l: f64, xs: impl Iterator<Item = (f64, f64)>) -> f64 {
    xs.map(|(x, w)| w * (l * x.ln()).exp_m1()).sum()
}

fn lambda_kind(l: f64) -> i8 {
    if l.abs() < LIMIT_EPS {
        0
    } else if (l + 1.0).abs() < LIMIT_EPS {
        -1
    } else {
        1
    }
}

/// `D_φ(Fₙ, F_{n,θ}) = (1/n) Σ φ(A_i)/A_i`, closed form for power divergences.
pub fn d_phi_uniform(phi: &PhiFamily, el: &ELSolution) -> f64 {
    d_uniform_from(phi, &el.denominators)
}

pub(crate) fn d_uniform_from(phi: &PhiFamily, a: &[f64]) -> f64 {
    let nf = a.len() as f64;
    match phi {
        PhiFamily::PowerDivergence(l) => {
            let l = *l;
            let s = match lambda_kind(l) {
                0 => a.iter().map(|v| v.ln()).sum::<f64>(),
                -1 => -a.iter().map(|v| v.ln() / v).sum::<f64>(),
                _ => sum_pow_m1(l, a.iter().map(|&v| (v, 1.0))) / (l * (l + 1.0)),
            };
            s / nf
        }
        _ => d_uniform_direct(phi, a),
    }
}

/// Direct summation `(1/n) Σ φ(A_i)/A_i` for any φ.
pub fn d_phi_uniform_direct(phi: &PhiFamily, el: &ELSolution) -> f64 {
    d_uniform_direct(phi, &el.denominators)
}

fn d_uniform_direct(phi: &PhiFamily, a: &[f64]) -> f64 {
    a.iter().map(|&v| phi.phi(v) / v).sum::<f64>() / a.len() as f64
}

/// `D_φ(F_{n,θ̂}, F_{n,θ₀}) = (1/n) Σ φ(A_i/B_i)/A_i` where `from` is the θ̂ side
/// (denominators `B`) and `to` the θ₀ side (denominators `A`).
pub fn d_phi_between(phi: &PhiFamily, from: &WeightedEmpirical, to: &WeightedEmpirical) -> Result<f64> {
    if from.denominators.len() != to.denominators.len() {
        return Err(ElError::SampleMismatch);
    }
    Ok(d_between_from(phi, &from.denominators, &to.denominators))
}

pub(crate) fn d_between_from(phi: &PhiFamily, b: &[f64], a: &[f64]) -> f64 {
    let nf = a.len() as f64;
    match phi {
        PhiFamily::PowerDivergence(l) => {
            let l = *l;
            let s = match lambda_kind(l) {
                0 => a.iter().zip(b).map(|(&ai, &bi)| (ai / bi).ln() / bi).sum::<f64>(),
                -1 => a.iter().zip(b).map(|(&ai, &bi)| (bi / ai).ln() / ai).sum::<f64>(),
                _ => sum_pow_m1(l, a.iter().zip(b).map(|(&ai, &bi)| (ai / bi, 1.0 / bi))) / (l * (l + 1.0)),
            };
            s / nf
        }
        _ => d_between_direct(phi, b, a),
    }
}

/// Direct summation version of [`d_phi_between`].
pub fn d_phi_between_direct(phi: &PhiFamily, from: &WeightedEmpirical, to: &WeightedEmpirical) -> Result<f64> {
    if from.denominators.len() != to.denominators.len() {
        return Err(ElError::SampleMismatch);
    }
    Ok(d_between_direct(phi, &from.denominators, &to.denominators))
}

fn d_between_direct(phi: &PhiFamily, b: &[f64], a: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&ai, &bi)| phi.phi(ai / bi) / ai).sum::<f64>() / a.len() as f64
}

/// `T^{φ,h} = 2n/(φ″(1)h′(0)) · (h(D_φ(Fₙ, F_{n,θ₀})) − h(D_φ(Fₙ, F_{n,θ̂})))`.
///
/// Can be negative when r > p.
pub fn statistic_t(phi: &PhiFamily, h: &HFunction, el_hat: &ELSolution, el0: &ELSolution) -> Result<f64> {
    if el_hat.n() != el0.n() {
        return Err(ElError::SampleMismatch);
    }
    h.validate()?;
    let nf = el0.n() as f64;
    let scale = 2.0 * nf / (phi.phi_second_at_one() * h.h_prime_zero());
    if h.is_identity() {
        if let PhiFamily::PowerDivergence(l) = phi {
            // difference taken inside one sum for accuracy
            let l = *l;
            let a = &el0.denominators;
            let b = &el_hat.denominators;
            let s = match lambda_kind(l) {
                0 => a.iter().zip(b).map(|(ai, bi)| ai.ln() - bi.ln()).sum::<f64>(),
                -1 => a.iter().zip(b).map(|(ai, bi)| bi.ln() / bi - ai.ln() / ai).sum::<f64>(),
                _ => a.iter().zip(b).map(|(ai, bi)| (l * ai.ln()).exp_m1() - (l * bi.ln()).exp_m1()).sum::<f64>()
                    / (l * (l + 1.0)),
            };
            return Ok(scale * s / nf);
        }
    }
    let d0 = d_phi_uniform(phi, el0);
    let dh = d_phi_uniform(phi, el_hat);
    Ok(scale * (h.h(d0) - h.h(dh)))
}

/// `S^{φ,h} = 2n/(φ″(1)h′(0)) · h(D_φ(F_{n,θ̂}, F_{n,θ₀}))`, always `≥ 0`.
pub fn statistic_s(phi: &PhiFamily, h: &HFunction, el_hat: &ELSolution, el0: &ELSolution) -> Result<f64> {
    if el_hat.n() != el0.n() {
        return Err(ElError::SampleMismatch);
    }
    h.validate()?;
    if let (PhiFamily::PowerDivergence(l), HFunction::Renyi(a)) = (phi, h) {
        if (l - (a - 1.0)).abs() < 1e-15 {
            return Ok(renyi_statistic(*a, el_hat, el0));
        }
    }
    let nf = el0.n() as f64;
    let scale = 2.0 * nf / (phi.phi_second_at_one() * h.h_prime_zero());
    let d = d_between_from(phi, &el_hat.denominators, &el0.denominators);
    Ok((scale * h.h(d)).max(0.0))
}

/// Dispatch on the family's kind.
pub fn statistic(family: &Family, el_hat: &ELSolution, el0: &ELSolution) -> Result<f64> {
    match family.kind {
        StatisticKind::T => statistic_t(&family.phi, &family.h, el_hat, el0),
        StatisticKind::S => statistic_s(&family.phi, &family.h, el_hat, el0),
    }
}

/// Empirical Rényi statistic of order `a`.
///
/// * `a ∉ {0, 1}`: `2n/(a(a−1)) · log((1/n) Σ A_i^{a−1} / B_i^a)`
/// * `a = 0`: `2 Σ log(B_i/A_i)/A_i`
/// * `a = 1`: `2 Σ log(A_i/B_i)/B_i`
///
/// With `t(θ̂) = 0` (so `B_i = 1`) the last branch is the EL ratio statistic
/// `2 Σ log A_i`.
pub fn renyi_statistic(a: f64, el_hat: &ELSolution, el0: &ELSolution) -> f64 {
    let aa = &el0.denominators;
    let bb = &el_hat.denominators;
    let nf = aa.len() as f64;
    let v = if a.abs() < LIMIT_EPS {
        2.0 * aa.iter().zip(bb).map(|(ai, bi)| (bi / ai).ln() / ai).sum::<f64>()
    } else if (a - 1.0).abs() < LIMIT_EPS {
        2.0 * aa.iter().zip(bb).map(|(ai, bi)| (ai / bi).ln() / bi).sum::<f64>()
    } else {
        // (1/n)Σ A^{a−1}/B^a − 1 = (1/n)Σ (1/B)·expm1((a−1)·log(A/B)), using Σ1/B = n
        let inner = aa.iter().zip(bb).map(|(ai, bi)| ((a - 1.0) * (ai / bi).ln()).exp_m1() / bi).sum::<f64>() / nf;
        2.0 * nf / (a * (a - 1.0)) * inner.ln_1p()
    };
    v.max(0.0)
}
