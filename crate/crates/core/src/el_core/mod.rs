//! Empirical-likelihood core: the inner multiplier problem, unrestricted and
//! restricted estimators, covariance estimates and influence functions.

pub mod covariance;
pub mod fit;
pub mod inner;
pub mod restricted;

pub use covariance::{
    estimate_covariances, estimate_covariances_weighted, influence_function, influence_function_2,
    CovarianceEstimates,
};
pub use fit::{fit_unrestricted, ELFit, FitOptions};
pub use inner::{log_el, solve_t, solve_t_warm, ELSolution, InnerOptions};
pub use restricted::{fit_cov_reduced, fit_restricted, fit_restricted_kkt, kkt_residual, RestrictedFit};
