//! Seeded coverage studies and null-calibration checks.
//!
//! Each replication draws its data from its own ChaCha8 substream, seeded by
//! mixing the master seed with the replication index, so results do not
//! depend on how replications are scheduled across threads. Aggregation runs
//! in replication order with compensated sums.

mod sampling;

pub use sampling::{generate, generate_labeled, substream_seed, Contamination, Distribution, Substream};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::composite::{composite_confidence_interval, cov_statistic, CompositeStatistic};
use crate::divergence::Family;
use crate::el_core::{fit_unrestricted, FitOptions};
use crate::error::{ElError, Result};
use crate::inference::{ScanOptions, SimpleTester};
use crate::model::{builtin_cov_model, builtin_mean_model, builtin_mean_variance_model, Sample};
use crate::special::{chi2_cdf, chi2_quantile, ks_pvalue, ks_statistic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Mean `θ` under the mean–variance model (`r = 2`, `p = 1`).
    SimpleMeanVariance,
    /// Coefficient of variation under the CoV model, truth `ρ = theta0`.
    CompositeCov,
}

/// A statistic evaluated in a study.
#[derive(Clone, Debug, PartialEq)]
pub enum SimFamily {
    Simple(Family),
    Composite(CompositeStatistic),
}

impl SimFamily {
    pub fn label(&self) -> String {
        match self {
            SimFamily::Simple(f) => f.to_string(),
            SimFamily::Composite(c) => c.label(),
        }
    }
}

impl Serialize for SimFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub distribution: Distribution,
    /// True parameter: the mean `θ` for simple studies, the CoV for composite ones.
    pub theta0: f64,
    pub n: usize,
    pub reps: usize,
    /// Confidence levels `1 − α`.
    pub levels: Vec<f64>,
    pub families: Vec<SimFamily>,
    pub contamination: Option<Contamination>,
    pub master_seed: u64,
    /// Composite studies decide coverage through the test at the true `ρ`;
    /// set this to also invert each statistic and report interval widths.
    pub composite_widths: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(ElError::DomainError("reps must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(ElError::DomainError("n must be at least 2".into()));
        }
        if let Some(c) = self.contamination {
            if c.count >= self.n {
                return Err(ElError::DomainError("contamination count must be below n".into()));
            }
        }
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(ElError::DomainError("levels must lie in (0,1)".into()));
        }
        if self.families.is_empty() {
            return Err(ElError::DomainError("at least one statistic is needed".into()));
        }
        let wrong = self.families.iter().any(|f| {
            matches!(
                (self.scenario, f),
                (Scenario::SimpleMeanVariance, SimFamily::Composite(_)) | (Scenario::CompositeCov, SimFamily::Simple(_))
            )
        });
        if wrong {
            return Err(ElError::DomainError("statistic does not match the scenario".into()));
        }
        Ok(())
    }

    pub fn sample(&self, rep_index: u64) -> Vec<f64> {
        generate(&self.distribution, self.theta0, self.n, self.contamination, self.master_seed, rep_index)
    }

    /// Coverage of the mean under `N(θ₀, θ₀² + 1)`.
    pub fn simple_coverage(theta0: f64, n: usize, reps: usize, families: Vec<Family>) -> Self {
        SimConfig {
            scenario: Scenario::SimpleMeanVariance,
            distribution: Distribution::NormalThetaVariance,
            theta0,
            n,
            reps,
            levels: vec![0.95],
            families: families.into_iter().map(SimFamily::Simple).collect(),
            contamination: None,
            master_seed: 20_240_601,
            composite_widths: false,
        }
    }

    /// Coverage of `ρ = 1` under a unit-CoV law.
    pub fn composite_coverage(distribution: Distribution, n: usize, reps: usize, stats: Vec<CompositeStatistic>) -> Self {
        SimConfig {
            scenario: Scenario::CompositeCov,
            distribution,
            theta0: 1.0,
            n,
            reps,
            levels: vec![0.90],
            families: stats.into_iter().map(SimFamily::Composite).collect(),
            contamination: None,
            master_seed: 20_240_601,
            composite_widths: false,
        }
    }
}

/// Named study presets; the `fast` variants run 5000 replications.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Clean normal data, `θ₀ = 0`, `n = 30`, 5000 replications.
    SimpleTheta0,
    /// Clean normal data, `θ₀ = 1`, `n = 30`, 5000 replications.
    SimpleTheta1,
    /// Two shifted observations out of 30, `θ₀ = 1`.
    Contaminated,
    /// CoV of `N(1, 1)`, `n = 30`, 20 000 replications at 0.90.
    CompositeNormal,
    /// CoV of Poisson(1), `n = 15`, 20 000 replications at 0.90.
    CompositePoisson,
    /// CoV of `1 + √0.6 t₅`, `n = 30`, 20 000 replications at 0.90.
    CompositeStudentT,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "simple-theta0" => Preset::SimpleTheta0,
            "simple-theta1" => Preset::SimpleTheta1,
            "contaminated" => Preset::Contaminated,
            "cov-normal" => Preset::CompositeNormal,
            "cov-poisson" => Preset::CompositePoisson,
            "cov-t5" => Preset::CompositeStudentT,
            _ => return None,
        })
    }

    pub fn names() -> &'static [&'static str] {
        &["simple-theta0", "simple-theta1", "contaminated", "cov-normal", "cov-poisson", "cov-t5"]
    }

    /// The five power-divergence parameters of the simple tables.
    pub fn simple_families() -> Vec<Family> {
        use crate::divergence::StatisticKind::{S, T};
        let lambdas = [-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0];
        [T, S].iter().flat_map(|&k| lambdas.iter().map(move |&l| Family::power(l, k))).collect()
    }

    pub fn composite_statistics() -> Vec<CompositeStatistic> {
        use crate::divergence::StatisticKind::T;
        let mut v: Vec<CompositeStatistic> = [-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 2.0]
            .iter()
            .map(|&l| CompositeStatistic::Phi(Family::power(l, T)))
            .collect();
        v.extend([CompositeStatistic::Wald, CompositeStatistic::Score, CompositeStatistic::LagrangeMultiplier]);
        v
    }

    pub fn config(self, fast: bool) -> SimConfig {
        let composite_reps = if fast { 5_000 } else { 20_000 };
        match self {
            Preset::SimpleTheta0 => SimConfig::simple_coverage(0.0, 30, 5_000, Self::simple_families()),
            Preset::SimpleTheta1 => SimConfig::simple_coverage(1.0, 30, 5_000, Self::simple_families()),
            Preset::Contaminated => SimConfig {
                contamination: Some(Contamination { count: 2 }),
                ..SimConfig::simple_coverage(1.0, 30, 5_000, Self::simple_families())
            },
            Preset::CompositeNormal => SimConfig::composite_coverage(
                Distribution::Normal { mean: 1.0, sd: 1.0 },
                30,
                composite_reps,
                Self::composite_statistics(),
            ),
            Preset::CompositePoisson => SimConfig::composite_coverage(
                Distribution::Poisson { lambda: 1.0 },
                15,
                composite_reps,
                Self::composite_statistics(),
            ),
            Preset::CompositeStudentT => SimConfig::composite_coverage(
                Distribution::ShiftedStudentT,
                30,
                composite_reps,
                Self::composite_statistics(),
            ),
        }
    }
}

/// One `(statistic, level)` cell of a study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub family: String,
    pub level: f64,
    /// Fraction of evaluated replications whose interval contains the truth.
    pub coverage: f64,
    /// `√(ĉ(1 − ĉ)/evaluated)`
    pub coverage_se: f64,
    pub average_width: Option<f64>,
    pub width_se: Option<f64>,
    /// Replications that produced a decision.
    pub evaluated: usize,
    pub covered: usize,
    /// Evaluated replications where the truth lay outside the convex hull
    /// (counted as not covered).
    pub infeasible: usize,
    /// Replications dropped because a fit or root search failed.
    pub failures: usize,
    /// Intervals with an endpoint stopped at the hull edge.
    pub hull_truncated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub cells: Vec<CellReport>,
}

impl SimReport {
    pub fn cell(&self, family: &str, level: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.family == family && (c.level - level).abs() < 1e-12)
    }
}

/// Outcome of one replication for one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Outcome {
    Decided { covered: bool, infeasible: bool, width: Option<f64>, truncated: bool },
    Failed,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Thread pool honoring `ELDIV_THREADS`.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = std::env::var("ELDIV_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        b = b.num_threads(k.max(1));
    }
    b.build().map_err(|e| ElError::DomainError(format!("thread pool: {e}")))
}

fn run_reps(config: &SimConfig, one: impl Fn(u64) -> Vec<Outcome> + Sync) -> Result<SimReport> {
    config.validate()?;
    let per_rep: Vec<Vec<Outcome>> = pool()?.install(|| (0..config.reps as u64).into_par_iter().map(&one).collect());
    let mut cells = Vec::new();
    let mut idx = 0;
    for fam in &config.families {
        for &level in &config.levels {
            let (mut evaluated, mut covered, mut infeasible, mut failures, mut truncated) = (0, 0, 0, 0, 0);
            let (mut ws, mut ws2, mut nw) = (Kahan::default(), Kahan::default(), 0usize);
            for rep in &per_rep {
                match rep[idx] {
                    Outcome::Failed => failures += 1,
                    Outcome::Decided { covered: c, infeasible: inf, width, truncated: t } => {
                        evaluated += 1;
                        covered += c as usize;
                        infeasible += inf as usize;
                        truncated += t as usize;
                        if let Some(w) = width {
                            ws.add(w);
                            ws2.add(w * w);
                            nw += 1;
                        }
                    }
                }
            }
            let coverage = if evaluated > 0 { covered as f64 / evaluated as f64 } else { f64::NAN };
            let (average_width, width_se) = if nw > 0 {
                let m = ws.value() / nw as f64;
                let var = (ws2.value() / nw as f64 - m * m).max(0.0);
                (Some(m), Some((var / nw as f64).sqrt()))
            } else {
                (None, None)
            };
            cells.push(CellReport {
                family: fam.label(),
                level,
                coverage,
                coverage_se: (coverage * (1.0 - coverage) / evaluated.max(1) as f64).sqrt(),
                average_width,
                width_se,
                evaluated,
                covered,
                infeasible,
                failures,
                hull_truncated: truncated,
            });
            idx += 1;
        }
    }
    Ok(SimReport { config: config.clone(), cells })
}

/// Coverage and average width of simple-null intervals for the mean.
pub fn run_coverage_study(config: &SimConfig) -> Result<SimReport> {
    if config.scenario != Scenario::SimpleMeanVariance {
        return Err(ElError::DomainError("run_coverage_study needs the simple scenario".into()));
    }
    let model = builtin_mean_variance_model();
    let cells = config.families.len() * config.levels.len();
    run_reps(config, |rep| {
        let xs = config.sample(rep);
        let sample = match Sample::from_scalars(&xs) {
            Ok(s) => s,
            Err(_) => return vec![Outcome::Failed; cells],
        };
        let fit = match fit_unrestricted(&model, &sample, &FitOptions::default()) {
            Ok(f) => f,
            Err(_) => return vec![Outcome::Failed; cells],
        };
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let outside = !(config.theta0 > lo && config.theta0 < hi);
        let mut out = Vec::with_capacity(cells);
        for fam in &config.families {
            let SimFamily::Simple(family) = fam else { unreachable!("validated") };
            let tester = SimpleTester::with_fit(&model, &sample, family, &fit);
            for &level in &config.levels {
                let ci = tester.as_ref().ok().and_then(|t| t.confidence_interval(level, &ScanOptions::default()).ok());
                out.push(match ci {
                    Some(ci) => Outcome::Decided {
                        covered: ci.contains(config.theta0),
                        infeasible: outside,
                        width: Some(ci.width()),
                        truncated: ci.lower_status != crate::inference::EndpointStatus::Converged
                            || ci.upper_status != crate::inference::EndpointStatus::Converged,
                    },
                    None => Outcome::Failed,
                });
            }
        }
        out
    })
}

/// Coverage of the true coefficient of variation. A replication covers the
/// truth exactly when the test of `ρ = θ₀` does not reject, which is the same
/// event as the inverted interval containing `θ₀`.
pub fn run_composite_coverage_study(config: &SimConfig) -> Result<SimReport> {
    if config.scenario != Scenario::CompositeCov {
        return Err(ElError::DomainError("run_composite_coverage_study needs the composite scenario".into()));
    }
    let (model, _) = builtin_cov_model();
    let cells = config.families.len() * config.levels.len();
    let crits: Vec<f64> = config.levels.iter().map(|l| chi2_quantile(1.0, 1.0 - l)).collect::<Result<_>>()?;
    run_reps(config, |rep| {
        let xs = config.sample(rep);
        let Ok(sample) = Sample::from_scalars(&xs) else { return vec![Outcome::Failed; cells] };
        let Ok(fit) = fit_unrestricted(&model, &sample, &FitOptions::default()) else {
            return vec![Outcome::Failed; cells];
        };
        let mut out = Vec::with_capacity(cells);
        for fam in &config.families {
            let SimFamily::Composite(stat) = fam else { unreachable!("validated") };
            let s = cov_statistic(&model, &sample, &fit, config.theta0, stat);
            for (li, &level) in config.levels.iter().enumerate() {
                out.push(match s {
                    Ok(s) => {
                        let (width, truncated) = if config.composite_widths {
                            match composite_confidence_interval(&model, &sample, stat, level) {
                                Ok(ci) => (
                                    Some(ci.width()),
                                    ci.lower_status != crate::inference::EndpointStatus::Converged
                                        || ci.upper_status != crate::inference::EndpointStatus::Converged,
                                ),
                                Err(_) => (None, false),
                            }
                        } else {
                            (None, false)
                        };
                        Outcome::Decided { covered: s <= crits[li], infeasible: s == f64::INFINITY, width, truncated }
                    }
                    Err(_) => Outcome::Failed,
                });
            }
        }
        out
    })
}

/// Dispatch on the scenario.
pub fn run_study(config: &SimConfig) -> Result<SimReport> {
    match config.scenario {
        Scenario::SimpleMeanVariance => run_coverage_study(config),
        Scenario::CompositeCov => run_composite_coverage_study(config),
    }
}

/// Which null distribution to simulate.
#[derive(Clone, Debug, PartialEq)]
pub enum NullScenario {
    /// Mean model, `N(0, 1)` data, `H₀: θ = 0`.
    SimpleMean(Family),
    /// CoV model, `N(1, 1)` data, `H₀: ρ = 1`.
    CompositeCov(CompositeStatistic),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub pvalue: f64,
    /// Degrees of freedom of the reference `χ²`.
    pub reference_df: usize,
    pub used: usize,
    pub failures: usize,
}

/// Simulate the statistic under `H₀` and compare it with `χ²_reference_df`
/// by a Kolmogorov–Smirnov test.
pub fn null_distribution_check(
    scenario: &NullScenario,
    n: usize,
    reps: usize,
    master_seed: u64,
    reference_df: usize,
) -> Result<KsReport> {
    if reps == 0 || n < 2 || reference_df == 0 {
        return Err(ElError::DomainError("need reps >= 1, n >= 2 and df >= 1".into()));
    }
    let mean_model = builtin_mean_model();
    let (cov_model, _) = builtin_cov_model();
    let stats: Vec<Option<f64>> = pool()?.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let mut s = Substream::new(master_seed, rep);
                match scenario {
                    NullScenario::SimpleMean(family) => {
                        let xs: Vec<f64> = (0..n).map(|_| s.normal()).collect();
                        let sample = Sample::from_scalars(&xs).ok()?;
                        let t = SimpleTester::new(&mean_model, &sample, family).ok()?;
                        t.statistic_at(&[0.0]).ok()
                    }
                    NullScenario::CompositeCov(stat) => {
                        let xs: Vec<f64> = (0..n).map(|_| 1.0 + s.normal()).collect();
                        let sample = Sample::from_scalars(&xs).ok()?;
                        let fit = fit_unrestricted(&cov_model, &sample, &FitOptions::default()).ok()?;
                        cov_statistic(&cov_model, &sample, &fit, 1.0, stat).ok()
                    }
                }
                .filter(|v| v.is_finite())
            })
            .collect()
    });
    let used: Vec<f64> = stats.iter().flatten().copied().collect();
    if used.is_empty() {
        return Err(ElError::InfeasibleRegion);
    }
    let df = reference_df as f64;
    let d = ks_statistic(&used, |x| chi2_cdf(x, df).unwrap_or(f64::NAN));
    Ok(KsReport {
        statistic: d,
        pvalue: ks_pvalue(d, used.len()),
        reference_df,
        used: used.len(),
        failures: reps - used.len(),
    })
}
