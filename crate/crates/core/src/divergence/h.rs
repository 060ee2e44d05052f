//! Increasing transforms `h` with `h(0) = 0`, `h′(0) > 0`.

use std::fmt;

use super::phi::LIMIT_EPS;
use crate::error::{ElError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum HFunction {
    Identity,
    /// `h(x) = log(1 + a(a−1)x) / (a(a−1))`
    Renyi(f64),
    /// `h(x) = ((1 + a(a−1)x)^{(b−1)/(a−1)} − 1) / (b − 1)`
    SharmaMittal { a: f64, b: f64 },
    /// `h(x) = −log(1 − x)`
    Bhattacharyya,
}

impl HFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            HFunction::SharmaMittal { a, .. } if !(*a > 0.0) => Err(ElError::DomainError(format!(
                "Sharma-Mittal h'(0) = a must be positive, got a = {a}"
            ))),
            HFunction::Renyi(a) | HFunction::SharmaMittal { a, .. } if !a.is_finite() => {
                Err(ElError::DomainError("non-finite h parameter".into()))
            }
            _ => Ok(()),
        }
    }

    /// `log(1 + a(a−1)x)/(a − 1)`, tending to `a·x` as `a → 1`.
    fn sm_inner(a: f64, x: f64) -> f64 {
        if (a - 1.0).abs() < LIMIT_EPS {
            a * x
        } else {
            (a * (a - 1.0) * x).ln_1p() / (a - 1.0)
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        match self {
            HFunction::Identity => x,
            HFunction::Renyi(a) => {
                let c = a * (a - 1.0);
                if c.abs() < LIMIT_EPS {
                    x
                } else {
                    (c * x).ln_1p() / c
                }
            }
            HFunction::SharmaMittal { a, b } => {
                let u = Self::sm_inner(*a, x);
                if (b - 1.0).abs() < LIMIT_EPS {
                    u
                } else {
                    ((b - 1.0) * u).exp_m1() / (b - 1.0)
                }
            }
            HFunction::Bhattacharyya => -(-x).ln_1p(),
        }
    }

    pub fn h_prime(&self, x: f64) -> f64 {
        match self {
            HFunction::Identity => 1.0,
            HFunction::Renyi(a) => 1.0 / (1.0 + a * (a - 1.0) * x),
            HFunction::SharmaMittal { a, b } => {
                let du = a / (1.0 + a * (a - 1.0) * x);
                if (b - 1.0).abs() < LIMIT_EPS {
                    du
                } else {
                    ((b - 1.0) * Self::sm_inner(*a, x)).exp() * du
                }
            }
            HFunction::Bhattacharyya => 1.0 / (1.0 - x),
        }
    }

    pub fn h_prime_zero(&self) -> f64 {
        self.h_prime(0.0)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, HFunction::Identity)
    }
}

impl fmt::Display for HFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFunction::Identity => write!(f, "identity"),
            HFunction::Renyi(a) => write!(f, "renyi(a={a})"),
            HFunction::SharmaMittal { a, b } => write!(f, "sharma-mittal(a={a},b={b})"),
            HFunction::Bhattacharyya => write!(f, "bhattacharyya"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_at_zero_positive_slope() {
        let hs = [
            HFunction::Identity,
            HFunction::Renyi(2.5),
            HFunction::Renyi(0.5),
            HFunction::Renyi(1.0),
            HFunction::SharmaMittal { a: 2.0, b: 0.5 },
            HFunction::SharmaMittal { a: 0.7, b: 1.0 },
            HFunction::Bhattacharyya,
        ];
        for h in &hs {
            assert_eq!(h.h(0.0), 0.0);
            assert!(h.h_prime_zero() > 0.0);
            let d = 1e-6;
            let fd = (h.h(0.1 + d) - h.h(0.1 - d)) / (2.0 * d);
            assert!((fd - h.h_prime(0.1)).abs() < 1e-7, "{h}");
        }
        assert_eq!(HFunction::SharmaMittal { a: 2.0, b: 3.0 }.h_prime_zero(), 2.0);
    }

    #[test]
    fn limits_match() {
        let x = 0.3;
        let near = HFunction::Renyi(1.0 + 1e-7).h(x);
        assert!((near - x).abs() < 1e-6);
        let sm = HFunction::SharmaMittal { a: 2.0, b: 1.0 + 1e-9 }.h(x);
        assert!((sm - (2.0f64 * x).ln_1p()).abs() < 1e-7);
    }

    #[test]
    fn sharma_mittal_needs_positive_a() {
        assert!(HFunction::SharmaMittal { a: -1.0, b: 2.0 }.validate().is_err());
        assert!(HFunction::Renyi(-1.0).validate().is_ok());
    }
}
