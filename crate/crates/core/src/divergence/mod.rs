//! φ functions, h transforms, empirical divergences and the T/S statistics.

pub mod h;
pub mod phi;
pub mod statistics;

pub use h::HFunction;
pub use phi::PhiFamily;
pub use statistics::{
    d_phi_between, d_phi_between_direct, d_phi_uniform, d_phi_uniform_direct, renyi_statistic, statistic,
    statistic_s, statistic_t, Family, StatisticKind, WeightedEmpirical,
};
