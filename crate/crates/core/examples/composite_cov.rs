//! Testing and estimating a coefficient of variation with the composite
//! statistics: the φ-divergence family, Wald, score and Lagrange multiplier.

use eldiv::composite::{
    composite_confidence_interval, composite_test_with, CompositeFits, CompositeStatistic, CompositeTestInput,
};
use eldiv::divergence::{Family, StatisticKind};
use eldiv::model::{builtin_cov_model, cov_constraint, Sample};

fn main() -> eldiv::Result<()> {
    let xs = [1.2, 0.4, 2.5, 0.9, 1.7, 0.3, 1.1, 2.2, 0.6, 1.4, 0.8, 1.9, 0.5, 1.0, 2.9, 0.7, 1.3, 0.2, 1.6, 1.1];
    let sample = Sample::from_scalars(&xs)?;
    let (model, _) = builtin_cov_model();
    let stats = [
        CompositeStatistic::Phi(Family::power(0.0, StatisticKind::T)),
        CompositeStatistic::Phi(Family::power(1.0, StatisticKind::T)),
        CompositeStatistic::Phi(Family::renyi(2.5)),
        CompositeStatistic::Wald,
        CompositeStatistic::Score,
        CompositeStatistic::LagrangeMultiplier,
    ];

    let constraint = cov_constraint(1.0);
    let fits = CompositeFits::new(&model, &constraint, &sample)?;
    let (u, v) = (fits.unrestricted.theta_hat[0], fits.unrestricted.theta_hat[1]);
    println!("estimated CoV: {:.4}", (v - u * u).sqrt() / u);
    if let Ok(r) = &fits.restricted {
        println!("restricted fit under CoV = 1: u = {:.4}, v = {:.4}", r.theta_tilde[0], r.theta_tilde[1]);
    }
    println!("\n{:<22} {:>10} {:>10} {:>20}", "statistic", "H0: CoV=1", "p-value", "90% interval");
    for s in &stats {
        let family = match s {
            CompositeStatistic::Phi(f) => f.clone(),
            _ => Family::power(0.0, StatisticKind::T),
        };
        let input = CompositeTestInput { model: &model, constraint: &constraint, sample: &sample, family, alpha: 0.10 };
        let t = composite_test_with(s.kind(), &input, &fits)?;
        let ci = composite_confidence_interval(&model, &sample, s, 0.90)?;
        println!(
            "{:<22} {:>10.4} {:>10.4} {:>20}",
            s.label(),
            t.test.statistic,
            t.test.pvalue,
            format!("({:.3}, {:.3})", ci.lower, ci.upper)
        );
    }
    Ok(())
}
