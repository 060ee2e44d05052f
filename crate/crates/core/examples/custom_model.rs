//! A user-defined, over-identified model: two paired measurements of the same
//! quantity, `E[X − θ] = E[Y − θ] = 0`. With two equations for one parameter
//! the EL weights are no longer uniform at the estimate, so T and S differ.

use eldiv::divergence::{Family, StatisticKind};
use eldiv::el_core::{fit_unrestricted, FitOptions};
use eldiv::inference::{ScanOptions, SimpleTester};
use eldiv::model::{check_jacobians, EstimatingModel, Probe, Sample};

fn main() -> eldiv::Result<()> {
    let model = EstimatingModel::new(
        "common mean",
        2,
        1,
        2,
        |x, th, out| {
            out[0] = x[0] - th[0];
            out[1] = x[1] - th[0];
        },
        // r × p Jacobian, row-major
        |_, _, out| {
            out[0] = -1.0;
            out[1] = -1.0;
        },
    )?;
    let probes = [Probe { x: vec![1.0, 2.0], theta: vec![0.5] }];
    let report = check_jacobians(&model, None, &probes);
    println!("Jacobian check: max relative error {:.1e}, pass = {}", report.max_rel_error, report.pass);

    let rows = vec![
        vec![10.2, 10.9],
        vec![9.7, 9.4],
        vec![10.5, 11.2],
        vec![9.9, 10.0],
        vec![10.8, 10.3],
        vec![10.1, 10.4],
        vec![9.4, 10.3],
        vec![10.6, 10.2],
        vec![10.0, 11.0],
        vec![10.3, 9.8],
        vec![10.9, 11.1],
        vec![9.6, 9.9],
    ];
    let sample = Sample::from_rows(&rows)?;
    let fit = fit_unrestricted(&model, &sample, &FitOptions::default())?;
    println!("theta_hat = {:.4}, log EL at the estimate = {:.4}", fit.theta_hat[0], fit.inner.logel);
    for kind in [StatisticKind::T, StatisticKind::S] {
        let tester = SimpleTester::with_fit(&model, &sample, &Family::power(0.0, kind), &fit)?;
        let test = tester.test(&[10.5], 0.05)?;
        let ci = tester.confidence_interval(0.95, &ScanOptions::default())?;
        println!(
            "{:?}: statistic at 10.5 = {:.4} (p = {:.4}), 95% interval ({:.3}, {:.3})",
            kind, test.statistic, test.pvalue, ci.lower, ci.upper
        );
    }
    Ok(())
}
