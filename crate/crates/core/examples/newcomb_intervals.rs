//! 95% confidence intervals for the mean of Newcomb's passage-time data,
//! from the empirical Rényi statistics of several orders.
//!
//! Run with `cargo run --release --example newcomb_intervals`.

use eldiv::cli::data::newcomb;
use eldiv::divergence::Family;
use eldiv::inference::{EndpointStatus, ScanOptions, SimpleTester};
use eldiv::model::{builtin_mean_model, Sample};

fn main() -> eldiv::Result<()> {
    let model = builtin_mean_model();
    let orders = [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.5];
    print!("{:<6}", "day");
    for a in orders {
        print!("{:>18}", format!("a = {a}"));
    }
    println!();
    for day in ["day1", "day2", "day3"] {
        let sample = Sample::from_scalars(&newcomb(day).expect("embedded"))?;
        print!("{day:<6}");
        for a in orders {
            let ci = SimpleTester::new(&model, &sample, &Family::renyi(a))?
                .confidence_interval(0.95, &ScanOptions::default())?;
            let mark = if ci.lower_status == EndpointStatus::HullTruncated || ci.upper_status == EndpointStatus::HullTruncated {
                "*"
            } else {
                " "
            };
            print!("{:>18}", format!("({:.2}, {:.2}){mark}", ci.lower, ci.upper));
        }
        println!();
    }
    println!("\n* an endpoint stopped at the edge of the convex hull");
    Ok(())
}
