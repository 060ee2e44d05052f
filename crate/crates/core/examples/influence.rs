//! Influence of each observation on the EL estimate of the mean, for
//! Newcomb's first day, where two measurements are far below the rest.

use eldiv::cli::data::NEWCOMB_DAY1;
use eldiv::el_core::{estimate_covariances, fit_unrestricted, influence_function, influence_function_2, FitOptions};
use eldiv::model::{builtin_mean_model, Sample};

fn main() -> eldiv::Result<()> {
    let model = builtin_mean_model();
    let sample = Sample::from_scalars(&NEWCOMB_DAY1)?;
    let theta = fit_unrestricted(&model, &sample, &FitOptions::default())?.theta_hat;
    let cov = estimate_covariances(&model, &sample, &theta, None)?;
    let mut rows: Vec<(f64, f64, f64)> = (0..sample.n())
        .map(|i| {
            let x = sample.row(i);
            (x[0], influence_function(&model, x, &theta, &cov)[0], influence_function_2(&model, x, &theta, &cov))
        })
        .collect();
    rows.sort_by(|a, b| b.2.total_cmp(&a.2));
    println!("estimate {:.3}; observations by second-order influence", theta[0]);
    println!("{:>8} {:>10} {:>10}", "x", "IF", "IF2");
    for (x, if1, if2) in rows {
        println!("{x:>8.1} {if1:>10.3} {if2:>10.4}");
    }
    Ok(())
}
