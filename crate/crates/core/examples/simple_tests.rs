//! Simple-null tests with T- and S-type power-divergence statistics.
//!
//! Under the mean model (one equation, one parameter) the fitted weights are
//! uniform and T equals S. The mean–variance model adds a second equation,
//! and then the two families differ.

use eldiv::divergence::{Family, StatisticKind};
use eldiv::inference::SimpleTester;
use eldiv::model::{builtin_mean_model, builtin_mean_variance_model, Sample};

fn main() -> eldiv::Result<()> {
    let xs = [-1.5, 0.2, 1.8, -0.4, 2.6, 0.1, -2.2, 1.0, 0.7, -0.9, 0.4, 1.3, -0.6, 2.1, -1.1];
    let sample = Sample::from_scalars(&xs)?;
    let theta0 = [0.8];
    for (name, model) in [("mean", builtin_mean_model()), ("mean-variance", builtin_mean_variance_model())] {
        println!("{name} model, H0: theta = {}", theta0[0]);
        println!("  {:>8} {:>12} {:>12} {:>10}", "lambda", "T", "S", "p(T)");
        for lambda in [-1.0, -0.5, 0.0, 2.0 / 3.0, 1.0, 2.0] {
            let t = SimpleTester::new(&model, &sample, &Family::power(lambda, StatisticKind::T))?;
            let s = SimpleTester::new(&model, &sample, &Family::power(lambda, StatisticKind::S))?;
            let rt = t.test(&theta0, 0.05)?;
            let rs = s.statistic_at(&theta0)?;
            println!("  {lambda:>8.3} {:>12.6} {rs:>12.6} {:>10.4}", rt.statistic, rt.pvalue);
        }
        println!();
    }
    Ok(())
}
