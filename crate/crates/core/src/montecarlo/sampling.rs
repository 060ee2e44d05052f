//! Seeded per-replication data generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Data-generating laws used by the coverage studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Distribution {
    /// `N(θ, θ² + 1)` with `θ` taken from the study's `theta0`.
    NormalThetaVariance,
    /// `1 + √0.6 · t₅`, which has mean 1 and variance 1.
    ShiftedStudentT,
    Poisson { lambda: f64 },
    Normal { mean: f64, sd: f64 },
}

/// `count` observations per sample drawn from `N(θ + √(θ²+1), θ² + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contamination {
    pub count: usize,
}

/// SplitMix64 finalizer applied to the master seed and replication index.
pub fn substream_seed(master_seed: u64, rep_index: u64) -> u64 {
    let mut z = master_seed ^ rep_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random source for one replication.
pub struct Substream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Substream {
    pub fn new(master_seed: u64, rep_index: u64) -> Self {
        Substream { rng: ChaCha8Rng::seed_from_u64(substream_seed(master_seed, rep_index)), spare: None }
    }

    /// Standard normal by Box–Muller; the second variate of each pair is kept.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − U lies in (0, 1], so the logarithm is finite
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        self.spare = Some(r * a.sin());
        r * a.cos()
    }

    /// Student t with `df` degrees of freedom as `Z / √(χ²_df / df)`.
    pub fn student_t(&mut self, df: usize) -> f64 {
        let z = self.normal();
        let chi2: f64 = (0..df).map(|_| self.normal().powi(2)).sum();
        z / (chi2 / df as f64).sqrt()
    }

    /// Poisson by sequential search of the CDF.
    pub fn poisson(&mut self, lambda: f64) -> f64 {
        let u: f64 = self.rng.random::<f64>();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u32;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        k as f64
    }

    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        xs.shuffle(&mut self.rng);
    }

    pub fn draw(&mut self, law: &Distribution, theta: f64) -> f64 {
        match *law {
            Distribution::NormalThetaVariance => theta + (theta * theta + 1.0).sqrt() * self.normal(),
            Distribution::ShiftedStudentT => 1.0 + 0.6f64.sqrt() * self.student_t(5),
            Distribution::Poisson { lambda } => self.poisson(lambda),
            Distribution::Normal { mean, sd } => mean + sd * self.normal(),
        }
    }
}

/// A full replication sample: contaminated positions first, then shuffled.
pub fn generate(
    law: &Distribution,
    theta: f64,
    n: usize,
    contamination: Option<Contamination>,
    master_seed: u64,
    rep_index: u64,
) -> Vec<f64> {
    generate_labeled(law, theta, n, contamination, master_seed, rep_index).into_iter().map(|(x, _)| x).collect()
}

/// As [`generate`], with each value flagged when it came from the shift law.
pub fn generate_labeled(
    law: &Distribution,
    theta: f64,
    n: usize,
    contamination: Option<Contamination>,
    master_seed: u64,
    rep_index: u64,
) -> Vec<(f64, bool)> {
    let mut s = Substream::new(master_seed, rep_index);
    let count = contamination.map_or(0, |c| c.count.min(n));
    let sd = (theta * theta + 1.0).sqrt();
    let mut xs = Vec::with_capacity(n);
    for _ in 0..count {
        xs.push((theta + sd + sd * s.normal(), true));
    }
    for _ in count..n {
        xs.push((s.draw(law, theta), false));
    }
    if count > 0 {
        s.shuffle(&mut xs);
    }
    xs
}
