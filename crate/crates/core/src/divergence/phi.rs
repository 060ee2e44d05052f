//! Convex φ functions with `φ(1) = 0` and `φ″(1) > 0`.

use std::fmt;

/// Distance from a singular parameter value at which the limit branch is used.
pub const LIMIT_EPS: f64 = 1e-8;

/// A member of the φ class used by every divergence in the crate.
///
/// `PowerDivergence(λ)` is the canonical family:
///
/// * `φ_λ(x) = (x^{λ+1} − x − λ(x − 1)) / (λ(λ + 1))`
/// * λ = 0 gives `x log x − x + 1` (Kullback–Leibler)
/// * λ = −1 gives `−log x + x − 1` (modified Kullback–Leibler)
///
/// Freeman–Tukey (λ = −1/2), Cressie–Read (λ = 2/3) and Pearson (λ = 1) are
/// the usual named members. `Tilted` adds a linear term `−slope·(x − 1)`;
/// such a φ lies in the same equivalence class as its base.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiFamily {
    PowerDivergence(f64),
    /// `φ(x) = −√x + (x + 1)/2`.
    Bhattacharyya,
    Tilted { base: Box<PhiFamily>, slope: f64 },
}

impl PhiFamily {
    pub fn kullback() -> Self {
        PhiFamily::PowerDivergence(0.0)
    }
    pub fn modified_kullback() -> Self {
        PhiFamily::PowerDivergence(-1.0)
    }
    pub fn freeman_tukey() -> Self {
        PhiFamily::PowerDivergence(-0.5)
    }
    pub fn cressie_read() -> Self {
        PhiFamily::PowerDivergence(2.0 / 3.0)
    }
    pub fn pearson() -> Self {
        PhiFamily::PowerDivergence(1.0)
    }

    /// `ψ(x) = φ(x) − slope·(x − 1)`.
    pub fn tilted(self, slope: f64) -> Self {
        PhiFamily::Tilted { base: Box::new(self), slope }
    }

    /// The power-divergence index, if this is an untilted power divergence.
    pub fn lambda(&self) -> Option<f64> {
        match self {
            PhiFamily::PowerDivergence(l) => Some(*l),
            _ => None,
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        match self {
            PhiFamily::PowerDivergence(l) => power_phi(*l, x),
            PhiFamily::Bhattacharyya => -x.sqrt() + 0.5 * (x + 1.0),
            PhiFamily::Tilted { base, slope } => base.phi(x) - slope * (x - 1.0),
        }
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        match self {
            PhiFamily::PowerDivergence(l) => {
                let l = *l;
                if x == 0.0 {
                    return if l > 0.0 { -1.0 / l } else { f64::NEG_INFINITY };
                }
                if l.abs() < LIMIT_EPS {
                    x.ln()
                } else {
                    (l * x.ln()).exp_m1() / l
                }
            }
            PhiFamily::Bhattacharyya => 0.5 - 0.5 / x.sqrt(),
            PhiFamily::Tilted { base, slope } => base.phi_prime(x) - slope,
        }
    }

    /// `φ″(1)`; equal to 1 for every power divergence.
    pub fn phi_second_at_one(&self) -> f64 {
        match self {
            PhiFamily::PowerDivergence(_) => 1.0,
            PhiFamily::Bhattacharyya => 0.25,
            PhiFamily::Tilted { base, .. } => base.phi_second_at_one(),
        }
    }
}

/// `φ_λ(x)` with explicit handling of `x = 0` and of the two singular indices.
fn power_phi(l: f64, x: f64) -> f64 {
    if x == 0.0 {
        // limits as x → 0⁺
        return if l > -1.0 { 1.0 / (l + 1.0) } else { f64::INFINITY };
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let lx = x.ln();
    if l.abs() < LIMIT_EPS {
        x * lx - x + 1.0
    } else if (l + 1.0).abs() < LIMIT_EPS {
        -lx + x - 1.0
    } else {
        // x^{λ+1} − x = x·(x^λ − 1), computed with expm1 for small λ
        (x * (l * lx).exp_m1() - l * (x - 1.0)) / (l * (l + 1.0))
    }
}

impl fmt::Display for PhiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiFamily::PowerDivergence(l) => write!(f, "power(lambda={l})"),
            PhiFamily::Bhattacharyya => write!(f, "bhattacharyya"),
            PhiFamily::Tilted { base, slope } => write!(f, "{base}-{slope}(x-1)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_members() {
        let x: f64 = 1.7;
        assert!((PhiFamily::kullback().phi(x) - (x * x.ln() - x + 1.0)).abs() < 1e-15);
        assert!((PhiFamily::modified_kullback().phi(x) - (-x.ln() + x - 1.0)).abs() < 1e-15);
        assert!((PhiFamily::pearson().phi(x) - 0.5 * (x - 1.0).powi(2)).abs() < 1e-15);
        let ft = 4.0 * (x.sqrt() - 1.0).powi(2) / 2.0;
        assert!((PhiFamily::freeman_tukey().phi(x) - ft).abs() < 1e-14);
    }

    #[test]
    fn zero_at_one_and_convex() {
        let fams = [
            PhiFamily::PowerDivergence(-1.0),
            PhiFamily::PowerDivergence(-0.5),
            PhiFamily::PowerDivergence(0.0),
            PhiFamily::PowerDivergence(2.0 / 3.0),
            PhiFamily::PowerDivergence(1.0),
            PhiFamily::PowerDivergence(2.5),
            PhiFamily::Bhattacharyya,
        ];
        for f in &fams {
            assert!(f.phi(1.0).abs() < 1e-15);
            assert!(f.phi_prime(1.0).abs() < 1e-15);
            assert!(f.phi_second_at_one() > 0.0);
            for &(a, b) in &[(0.1, 3.0), (0.5, 0.9), (1.2, 7.0)] {
                assert!(f.phi(0.5 * (a + b)) <= 0.5 * (f.phi(a) + f.phi(b)) + 1e-15);
            }
        }
    }

    #[test]
    fn second_derivative_matches_fd() {
        for f in [PhiFamily::PowerDivergence(0.3), PhiFamily::PowerDivergence(-1.0), PhiFamily::Bhattacharyya] {
            let h = 1e-4;
            let fd = (f.phi(1.0 + h) - 2.0 * f.phi(1.0) + f.phi(1.0 - h)) / (h * h);
            assert!((fd - f.phi_second_at_one()).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_limits_are_continuous() {
        for &x in &[0.2, 0.9, 1.5, 4.0] {
            for &d in &[1e-6, -1e-6] {
                let near0 = PhiFamily::PowerDivergence(d).phi(x);
                assert!((near0 - PhiFamily::kullback().phi(x)).abs() < 1e-5);
                let near1 = PhiFamily::PowerDivergence(-1.0 + d).phi(x);
                assert!((near1 - PhiFamily::modified_kullback().phi(x)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn zero_argument_conventions() {
        assert_eq!(PhiFamily::kullback().phi(0.0), 1.0);
        assert_eq!(PhiFamily::pearson().phi(0.0), 0.5);
        assert_eq!(PhiFamily::modified_kullback().phi(0.0), f64::INFINITY);
    }
}
