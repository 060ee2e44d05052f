//! Approximate power of the Rényi tests for Newcomb's first day, with the null
//! placed at the estimate. Prints a (mu*, beta) grid per order, ready for an
//! external plotter, followed by the order-free noncentral approximation.

use eldiv::cli::data::NEWCOMB_DAY1;
use eldiv::divergence::Family;
use eldiv::inference::{default_power_grid, power_curve, PowerMethod, ThresholdMode};
use eldiv::model::{builtin_mean_model, Sample};

fn main() -> eldiv::Result<()> {
    let model = builtin_mean_model();
    let sample = Sample::from_scalars(&NEWCOMB_DAY1)?;
    let mu0 = NEWCOMB_DAY1.iter().sum::<f64>() / NEWCOMB_DAY1.len() as f64;
    let grid: Vec<f64> = default_power_grid(&model, &sample, mu0)?.into_iter().step_by(8).collect();
    let orders = [-1.0, 0.0, 1.0, 2.5];
    print!("{:>10}", "mu*");
    for a in orders {
        print!("{:>12}", format!("a = {a}"));
    }
    println!("{:>12}", "beta2");
    let curves = orders
        .iter()
        .map(|&a| {
            power_curve(&model, &sample, mu0, &Family::renyi(a), &grid, PowerMethod::Beta1, 0.05, ThresholdMode::Consistent)
        })
        .collect::<eldiv::Result<Vec<_>>>()?;
    let beta2 = power_curve(&model, &sample, mu0, &Family::renyi(1.0), &grid, PowerMethod::Beta2, 0.05, ThresholdMode::Consistent)?;
    for (i, x) in beta2.grid.iter().enumerate() {
        print!("{x:>10.3}");
        for c in &curves {
            match c.grid.iter().position(|g| g == x) {
                Some(j) => print!("{:>12.4e}", c.beta[j]),
                None => print!("{:>12}", "-"),
            }
        }
        println!("{:>12.4}", beta2.beta[i]);
    }
    println!("\n'-' marks the null itself, where the first-order approximation is undefined");
    Ok(())
}
