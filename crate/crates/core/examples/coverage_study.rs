//! A small Monte Carlo coverage study, clean and contaminated.
//!
//! `cargo run --release --example coverage_study -- 2000` sets the number of
//! replications (default 500). `ELDIV_THREADS` caps the worker threads.

use eldiv::divergence::{Family, StatisticKind};
use eldiv::montecarlo::{run_study, Contamination, SimConfig};

fn main() -> eldiv::Result<()> {
    let reps = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(500);
    let families = vec![
        Family::power(-1.0, StatisticKind::S),
        Family::power(0.0, StatisticKind::T),
        Family::power(1.0, StatisticKind::T),
    ];
    let clean = SimConfig { levels: vec![0.90, 0.95], ..SimConfig::simple_coverage(1.0, 30, reps, families) };
    let dirty = SimConfig { contamination: Some(Contamination { count: 2 }), ..clean.clone() };
    for (name, cfg) in [("clean", clean), ("2 of 30 shifted", dirty)] {
        let report = run_study(&cfg)?;
        println!("{name}: N(1, 2), n = 30, {reps} replications");
        println!("  {:<14} {:>6} {:>9} {:>8} {:>9} {:>9}", "family", "level", "coverage", "se", "width", "failures");
        for c in &report.cells {
            println!(
                "  {:<14} {:>6.2} {:>9.4} {:>8.4} {:>9.4} {:>9}",
                c.family,
                c.level,
                c.coverage,
                c.coverage_se,
                c.average_width.unwrap_or(f64::NAN),
                c.failures
            );
        }
        println!();
    }
    Ok(())
}
