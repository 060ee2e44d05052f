use serde_json::{json, Value};

use super::data::{load_dataset, Dataset};
use super::output::{Cell, Table};
use super::{
    CiArgs, Command, DataArgs, DistributionArg, EstimateArgs, FamilyArgs, InfluenceArgs, MethodArg, ModelArg,
    PowerArgs, ScenarioArg, SimulateArgs, TestArgs,
};
use crate::composite::{
    composite_confidence_interval, composite_test_with, CompositeFits, CompositeStatistic, CompositeTestInput,
};
use crate::divergence::{Family, StatisticKind};
use crate::el_core::{estimate_covariances, fit_unrestricted, influence_function, influence_function_2, ELFit, FitOptions};
use crate::error::{ElError, Result};
use crate::inference::{default_power_grid, power_curve, PowerMethod, ScanOptions, SimpleTester, ThresholdMode};
use crate::model::{
    builtin_cov_model, builtin_mean_model, builtin_mean_variance_model, cov_constraint, EstimatingModel, Sample,
};
use crate::montecarlo::{run_study, Contamination, Distribution, Preset, SimConfig, SimFamily};

pub(super) struct CommandOutput {
    pub config: Value,
    pub results: Value,
    pub table: Table,
}

pub(super) fn execute(cmd: &Command) -> Result<CommandOutput> {
    match cmd {
        Command::Estimate(a) => estimate(a),
        Command::Test(a) => test(a),
        Command::Ci(a) => ci(a),
        Command::Power(a) => power(a),
        Command::Influence(a) => influence(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn usage(msg: impl Into<String>) -> ElError {
    ElError::Usage(msg.into())
}

/// `None` when the flag was absent; a usage error when it was given but empty.
fn parse_list(flag: &str, raw: Option<&Vec<String>>) -> Result<Option<Vec<f64>>> {
    let Some(raw) = raw else { return Ok(None) };
    let mut out = Vec::new();
    for s in raw.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let v: f64 = s.parse().map_err(|_| usage(format!("--{flag}: '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(usage(format!("--{flag}: '{s}' is not finite")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(usage(format!("--{flag} needs at least one value")));
    }
    Ok(Some(out))
}

fn parse_levels(raw: Option<&Vec<String>>, default: f64) -> Result<Vec<f64>> {
    let levels = parse_list("level", raw)?.unwrap_or_else(|| vec![default]);
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(usage(format!("--level: {l} is not in (0, 1)")));
    }
    Ok(levels)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--alpha: {alpha} is not in (0, 1)")))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum StatName {
    T,
    S,
    Wald,
    Score,
    Lm,
}

fn parse_statistics(raw: Option<&Vec<String>>) -> Result<Option<Vec<StatName>>> {
    let Some(raw) = raw else { return Ok(None) };
    let mut out = Vec::new();
    for s in raw.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let v = match s.to_ascii_lowercase().as_str() {
            "t" => StatName::T,
            "s" => StatName::S,
            "wald" | "w" => StatName::Wald,
            "score" => StatName::Score,
            "lm" => StatName::Lm,
            _ => return Err(usage(format!("--statistic: unknown statistic '{s}' (T, S, wald, score, lm)"))),
        };
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(usage("--statistic needs at least one value"));
    }
    Ok(Some(out))
}

/// Power-divergence families for every requested kind, followed by the
/// Rényi families.
fn simple_families(f: &FamilyArgs) -> Result<Vec<Family>> {
    let kinds = match parse_statistics(f.statistic.as_ref())? {
        None => vec![StatisticKind::T],
        Some(names) => names
            .into_iter()
            .map(|s| match s {
                StatName::T => Ok(StatisticKind::T),
                StatName::S => Ok(StatisticKind::S),
                _ => Err(usage("wald, score and lm need --model cov")),
            })
            .collect::<Result<_>>()?,
    };
    let lambdas = parse_list("lambda", f.lambda.as_ref())?;
    let renyi = parse_list("renyi", f.renyi.as_ref())?;
    let lambdas = match (&lambdas, &renyi) {
        (None, None) => vec![0.0],
        (l, _) => l.clone().unwrap_or_default(),
    };
    let mut out: Vec<Family> = kinds.iter().flat_map(|&k| lambdas.iter().map(move |&l| Family::power(l, k))).collect();
    out.extend(renyi.unwrap_or_default().into_iter().map(Family::renyi));
    Ok(out)
}

/// Statistics for the CoV model. T and S coincide there (r = p), so either
/// name selects the φ-divergence statistic once.
fn composite_statistics(f: &FamilyArgs) -> Result<Vec<CompositeStatistic>> {
    let names = parse_statistics(f.statistic.as_ref())?
        .unwrap_or_else(|| vec![StatName::T, StatName::Wald, StatName::Score, StatName::Lm]);
    let lambdas = parse_list("lambda", f.lambda.as_ref())?;
    let renyi = parse_list("renyi", f.renyi.as_ref())?;
    let mut phi: Vec<Family> = match (&lambdas, &renyi) {
        (None, None) => vec![Family::power(0.0, StatisticKind::T)],
        (l, _) => l.clone().unwrap_or_default().into_iter().map(|l| Family::power(l, StatisticKind::T)).collect(),
    };
    phi.extend(renyi.unwrap_or_default().into_iter().map(Family::renyi));
    let mut out = Vec::new();
    let mut phi_done = false;
    for n in names {
        match n {
            StatName::T | StatName::S if !phi_done => {
                phi_done = true;
                out.extend(phi.iter().cloned().map(CompositeStatistic::Phi));
            }
            StatName::T | StatName::S => {}
            StatName::Wald => out.push(CompositeStatistic::Wald),
            StatName::Score => out.push(CompositeStatistic::Score),
            StatName::Lm => out.push(CompositeStatistic::LagrangeMultiplier),
        }
    }
    Ok(out)
}

fn model_for(m: ModelArg) -> EstimatingModel {
    match m {
        ModelArg::Mean => builtin_mean_model(),
        ModelArg::Meanvar => builtin_mean_variance_model(),
        ModelArg::Cov => builtin_cov_model().0,
    }
}

fn load(a: &DataArgs) -> Result<(Dataset, EstimatingModel)> {
    let ds = load_dataset(&a.data, a.header)?;
    if ds.sample.k() != 1 {
        return Err(usage(format!(
            "the built-in models take one column, '{}' has {}",
            ds.name,
            ds.sample.k()
        )));
    }
    Ok((ds, model_for(a.model)))
}

fn dataset_json(ds: &Dataset) -> Value {
    json!({ "name": ds.name, "source": ds.source, "n": ds.sample.n(), "k": ds.sample.k() })
}

fn data_config(a: &DataArgs) -> Value {
    json!({ "data": a.data, "model": a.model.name(), "header": a.header })
}

fn fit(model: &EstimatingModel, sample: &Sample) -> Result<ELFit> {
    fit_unrestricted(model, sample, &FitOptions::default())
}

fn cov_hat(theta: &[f64]) -> f64 {
    (theta[1] - theta[0] * theta[0]).max(0.0).sqrt() / theta[0].abs()
}

fn estimate(a: &EstimateArgs) -> Result<CommandOutput> {
    let (ds, model) = load(&a.data)?;
    let fit = fit(&model, &ds.sample)?;
    let cov = estimate_covariances(&model, &ds.sample, &fit.theta_hat, None)?;
    let n = ds.sample.n() as f64;
    let names: &[&str] = if a.data.model == ModelArg::Cov { &["m1", "m2"] } else { &["mean"] };
    let mut table = Table::new(&["parameter", "estimate", "std_error"]);
    table.title.push(format!("# {} (n = {}), model {}", ds.name, ds.sample.n(), a.data.model.name()));
    let mut params = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let se = (cov.v[(j, j)] / n).sqrt();
        table.push(vec![(*name).into(), fit.theta_hat[j].into(), se.into()]);
        params.push(json!({ "name": name, "estimate": fit.theta_hat[j], "std_error": se }));
    }
    let mut results = json!({
        "dataset": dataset_json(&ds),
        "model": a.data.model.name(),
        "theta_hat": fit.theta_hat,
        "parameters": params,
        "log_el": fit.inner.logel,
        "converged": fit.converged,
        "covariance": (0..cov.v.nrows()).map(|i| cov.v.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    if a.data.model == ModelArg::Cov {
        let r = cov_hat(&fit.theta_hat);
        results["cov_hat"] = json!(r);
        table.push(vec!["cov".into(), r.into(), Cell::Empty]);
    }
    table.title.push(format!("# log EL = {:.6}, converged = {}", fit.inner.logel, fit.converged));
    Ok(CommandOutput { config: data_config(&a.data), results, table })
}

fn test(a: &TestArgs) -> Result<CommandOutput> {
    check_alpha(a.alpha)?;
    let (ds, model) = load(&a.data)?;
    let theta0 = parse_list("theta0", a.theta0.as_ref())?;
    let mut config = data_config(&a.data);
    config["alpha"] = json!(a.alpha);
    let mut table = Table::new(&["family", "statistic", "df", "pvalue", "reject", "infeasible"]);
    let rows: Vec<Value>;
    if a.data.model == ModelArg::Cov {
        if theta0.is_some() {
            return Err(usage("with --model cov the null is set by --rho"));
        }
        let rho = a.rho.unwrap_or(1.0);
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(usage(format!("--rho: {rho} must be positive")));
        }
        let stats = composite_statistics(&a.families)?;
        let constraint = cov_constraint(rho);
        let fits = CompositeFits::new(&model, &constraint, &ds.sample)?;
        config["rho"] = json!(rho);
        config["statistics"] = json!(stats.iter().map(CompositeStatistic::label).collect::<Vec<_>>());
        table.title.push(format!("# {} (n = {}), H0: CoV = {rho}", ds.name, ds.sample.n()));
        let mut out = Vec::new();
        for s in &stats {
            let family = match s {
                CompositeStatistic::Phi(f) => f.clone(),
                _ => Family::power(0.0, StatisticKind::T),
            };
            let input =
                CompositeTestInput { model: &model, constraint: &constraint, sample: &ds.sample, family, alpha: a.alpha };
            let r = composite_test_with(s.kind(), &input, &fits)?;
            let t = &r.test;
            table.push(vec![
                t.family.clone().into(),
                t.statistic.into(),
                t.df.into(),
                t.pvalue.into(),
                t.reject.into(),
                t.infeasible.into(),
            ]);
            out.push(serde_json::to_value(&r).expect("serializable"));
        }
        rows = out;
    } else {
        if a.rho.is_some() {
            return Err(usage("--rho needs --model cov"));
        }
        let theta0 = theta0.ok_or_else(|| usage("--theta0 is required"))?;
        if theta0.len() != model.p {
            return Err(usage(format!("--theta0 needs {} value(s)", model.p)));
        }
        let families = simple_families(&a.families)?;
        let fit = fit(&model, &ds.sample)?;
        config["theta0"] = json!(theta0);
        config["families"] = json!(families.iter().map(Family::to_string).collect::<Vec<_>>());
        table.title.push(format!("# {} (n = {}), H0: theta = {:?}", ds.name, ds.sample.n(), theta0));
        let mut out = Vec::new();
        for f in &families {
            let t = SimpleTester::with_fit(&model, &ds.sample, f, &fit)?.test(&theta0, a.alpha)?;
            table.push(vec![
                t.family.clone().into(),
                t.statistic.into(),
                t.df.into(),
                t.pvalue.into(),
                t.reject.into(),
                t.infeasible.into(),
            ]);
            out.push(serde_json::to_value(&t).expect("serializable"));
        }
        rows = out;
    }
    let results = json!({ "dataset": dataset_json(&ds), "tests": rows });
    Ok(CommandOutput { config, results, table })
}

fn ci(a: &CiArgs) -> Result<CommandOutput> {
    let (ds, model) = load(&a.data)?;
    let levels = parse_levels(a.level.as_ref(), 0.95)?;
    let mut config = data_config(&a.data);
    config["levels"] = json!(levels);
    let mut table = Table::new(&["family", "level", "lower", "upper", "width", "lower_status", "upper_status"]);
    let mut intervals = Vec::new();
    let mut push = |ci: crate::inference::ConfidenceInterval, table: &mut Table| {
        table.push(vec![
            ci.family.clone().into(),
            ci.level.into(),
            ci.lower.into(),
            ci.upper.into(),
            ci.width().into(),
            status(&ci.lower_status).into(),
            status(&ci.upper_status).into(),
        ]);
        let mut v = serde_json::to_value(&ci).expect("serializable");
        v["width"] = json!(ci.width());
        intervals.push(v);
    };
    let parameter;
    if a.data.model == ModelArg::Cov {
        let stats = composite_statistics(&a.families)?;
        config["statistics"] = json!(stats.iter().map(CompositeStatistic::label).collect::<Vec<_>>());
        parameter = "cov";
        for s in &stats {
            for &l in &levels {
                push(composite_confidence_interval(&model, &ds.sample, s, l)?, &mut table);
            }
        }
    } else {
        let families = simple_families(&a.families)?;
        config["families"] = json!(families.iter().map(Family::to_string).collect::<Vec<_>>());
        parameter = "mean";
        let fit = fit(&model, &ds.sample)?;
        for f in &families {
            let tester = SimpleTester::with_fit(&model, &ds.sample, f, &fit)?;
            for &l in &levels {
                push(tester.confidence_interval(l, &ScanOptions::default())?, &mut table);
            }
        }
    }
    table.title.push(format!("# {} (n = {}), intervals for the {parameter}", ds.name, ds.sample.n()));
    let results = json!({ "dataset": dataset_json(&ds), "parameter": parameter, "intervals": intervals });
    Ok(CommandOutput { config, results, table })
}

fn status(s: &crate::inference::EndpointStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn scalar(flag: &str, raw: Option<&Vec<String>>) -> Result<Option<f64>> {
    match parse_list(flag, raw)? {
        None => Ok(None),
        Some(v) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(usage(format!("--{flag} takes one value for a scalar parameter"))),
    }
}

fn power(a: &PowerArgs) -> Result<CommandOutput> {
    check_alpha(a.alpha)?;
    if a.data.model == ModelArg::Cov {
        return Err(usage("power curves are available for the scalar mean models"));
    }
    let (ds, model) = load(&a.data)?;
    let families = simple_families(&a.families)?;
    let fit = fit(&model, &ds.sample)?;
    let theta0 = scalar("theta0", a.theta0.as_ref())?.unwrap_or(fit.theta_hat[0]);
    let grid = match parse_list("grid", a.grid.as_ref())? {
        Some(g) => g,
        None => default_power_grid(&model, &ds.sample, theta0)?,
    };
    let (method, method_name) = match a.method {
        MethodArg::Beta1 => (PowerMethod::Beta1, "beta1"),
        MethodArg::Beta2 => (PowerMethod::Beta2, "beta2"),
    };
    let mode = if a.paper_strict { ThresholdMode::Strict } else { ThresholdMode::Consistent };
    let mut config = data_config(&a.data);
    config["theta0"] = json!(theta0);
    config["grid"] = json!(grid);
    config["method"] = json!(method_name);
    config["alpha"] = json!(a.alpha);
    config["paper_strict"] = json!(a.paper_strict);
    config["families"] = json!(families.iter().map(Family::to_string).collect::<Vec<_>>());
    let mut table = Table::new(&["family", "theta_star", "beta"]);
    table.title.push(format!("# {} (n = {}), {method_name}, mu0 = {theta0}", ds.name, ds.sample.n()));
    let mut curves = Vec::new();
    for f in &families {
        let c = power_curve(&model, &ds.sample, theta0, f, &grid, method, a.alpha, mode)?;
        let label = f.to_string();
        for (x, b) in c.grid.iter().zip(&c.beta) {
            table.push(vec![label.clone().into(), (*x).into(), (*b).into()]);
        }
        curves.push(json!({
            "family": label,
            "points": c.grid.iter().zip(&c.beta).map(|(x, b)| json!({ "theta_star": x, "beta": b })).collect::<Vec<_>>(),
            "skipped": c.skipped,
        }));
    }
    let results = json!({
        "dataset": dataset_json(&ds),
        "theta0": theta0,
        "method": method_name,
        "threshold_mode": mode,
        "curves": curves,
    });
    Ok(CommandOutput { config, results, table })
}

fn influence(a: &InfluenceArgs) -> Result<CommandOutput> {
    let (ds, model) = load(&a.data)?;
    let theta0 = match parse_list("theta0", a.theta0.as_ref())? {
        Some(t) if t.len() != model.p => return Err(usage(format!("--theta0 needs {} value(s)", model.p))),
        Some(t) => t,
        None => fit(&model, &ds.sample)?.theta_hat,
    };
    let cov = estimate_covariances(&model, &ds.sample, &theta0, None)?;
    let mut table = if model.p == 1 {
        Table::new(&["index", "x", "influence", "influence2"])
    } else {
        Table::new(&["index", "x", "influence_m1", "influence_m2", "influence2"])
    };
    table.title.push(format!("# {} (n = {}), theta0 = {:?}", ds.name, ds.sample.n(), theta0));
    let mut rows = Vec::new();
    for i in 0..ds.sample.n() {
        let x = ds.sample.row(i);
        let if1 = influence_function(&model, x, &theta0, &cov);
        let if2 = influence_function_2(&model, x, &theta0, &cov);
        let mut cells: Vec<Cell> = vec![(i + 1).into(), x[0].into()];
        cells.extend(if1.iter().map(|v| Cell::from(*v)));
        cells.push(if2.into());
        table.push(cells);
        rows.push(json!({ "index": i + 1, "x": x, "influence": if1.as_slice(), "influence2": if2 }));
    }
    let mut config = data_config(&a.data);
    config["theta0"] = json!(theta0);
    let results = json!({ "dataset": dataset_json(&ds), "theta0": theta0, "observations": rows });
    Ok(CommandOutput { config, results, table })
}

fn simulate(a: &SimulateArgs) -> Result<CommandOutput> {
    let mut cfg = match &a.preset {
        Some(name) => {
            let preset = Preset::parse(name).ok_or_else(|| {
                usage(format!("unknown preset '{name}' (expected one of {})", Preset::names().join(", ")))
            })?;
            if a.scenario.is_some() || a.distribution.is_some() {
                return Err(usage("--scenario and --distribution cannot be combined with --preset"));
            }
            preset.config(a.fast)
        }
        None => custom_config(a)?,
    };
    if a.preset.is_some() {
        if let Some(t) = a.theta0 {
            cfg.theta0 = t;
        }
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(c) = a.contaminate {
        cfg.contamination = if c == 0 { None } else { Some(Contamination { count: c }) };
    }
    if a.level.is_some() {
        cfg.levels = parse_levels(a.level.as_ref(), 0.95)?;
    }
    if a.families.given() {
        cfg.families = study_families(&cfg, &a.families)?;
    }
    cfg.composite_widths |= a.widths;
    cfg.validate().map_err(|e| match e {
        ElError::DomainError(m) => usage(m),
        other => other,
    })?;
    let report = run_study(&cfg)?;
    let mut table = Table::new(&[
        "family",
        "level",
        "coverage",
        "coverage_se",
        "average_width",
        "evaluated",
        "covered",
        "infeasible",
        "failures",
    ]);
    table.title.push(format!("# {} replications, n = {}, seed {}", cfg.reps, cfg.n, cfg.master_seed));
    for c in &report.cells {
        table.push(vec![
            c.family.clone().into(),
            c.level.into(),
            c.coverage.into(),
            c.coverage_se.into(),
            c.average_width.into(),
            c.evaluated.into(),
            c.covered.into(),
            c.infeasible.into(),
            c.failures.into(),
        ]);
    }
    let config = serde_json::to_value(&cfg).expect("serializable");
    let results = serde_json::to_value(&report).expect("serializable");
    Ok(CommandOutput { config, results, table })
}

fn study_families(cfg: &SimConfig, f: &FamilyArgs) -> Result<Vec<SimFamily>> {
    Ok(match cfg.scenario {
        crate::montecarlo::Scenario::SimpleMeanVariance => {
            simple_families(f)?.into_iter().map(SimFamily::Simple).collect()
        }
        crate::montecarlo::Scenario::CompositeCov => {
            composite_statistics(f)?.into_iter().map(SimFamily::Composite).collect()
        }
    })
}

fn custom_config(a: &SimulateArgs) -> Result<SimConfig> {
    let n = a.n.unwrap_or(30);
    let reps = a.reps.unwrap_or(1000);
    match a.scenario.unwrap_or(ScenarioArg::Simple) {
        ScenarioArg::Simple => {
            if !matches!(a.distribution, None | Some(DistributionArg::NormalTheta)) {
                return Err(usage("the simple scenario draws from N(theta, theta^2 + 1) only"));
            }
            Ok(SimConfig::simple_coverage(a.theta0.unwrap_or(0.0), n, reps, Preset::simple_families()))
        }
        ScenarioArg::Cov => {
            let dist = match a.distribution.unwrap_or(DistributionArg::Normal) {
                DistributionArg::Normal => Distribution::Normal { mean: 1.0, sd: 1.0 },
                DistributionArg::Poisson => Distribution::Poisson { lambda: 1.0 },
                DistributionArg::T5 => Distribution::ShiftedStudentT,
                DistributionArg::NormalTheta => {
                    return Err(usage("the cov scenario uses normal, poisson or t5 (all with CoV 1)"))
                }
            };
            let mut cfg = SimConfig::composite_coverage(dist, n, reps, Preset::composite_statistics());
            if let Some(t) = a.theta0 {
                cfg.theta0 = t;
            }
            Ok(cfg)
        }
    }
}
