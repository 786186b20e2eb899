//! One function per subcommand; each returns the document to write.

use lapnet::bounds::{
    loglog_slope, lower_bound_unweighted_graph, lower_bound_weighted_graph, path_cycle_ratio_experiment,
    survey_ratio_r1, Bound,
};
use lapnet::composite::{composite_oracle, composite_threshold, flattened_oracle, proportional_factor, rho_nn};
use lapnet::design::{
    default_eps_schedule, design_gain, design_observer, lambda_tilde, lambda_tilde_observer,
    lambda_tilde_state_feedback, performance_floor, FloorSide, GainDesign, ThresholdOptions, ThresholdResult,
};
use lapnet::fit::{default_samples, fit_rational, log_samples};
use lapnet::fixtures::{fixture_defaults, FIXTURE_NAMES};
use lapnet::graph::MAX_ENUMERATION_NODES;
use lapnet::io::model_to_json;
use lapnet::model::{assemble_full, augment_observer, CompositeSpec};
use lapnet::simulate::{simulate_trajectory, simulate_variance, SimulationConfig};
use lapnet::spectral::{
    mu_oracle, rho_of, rho_oracle, rho_u_oracle, PerformanceFunction, PhiValue, SpectralSum, Variant,
};
use lapnet::Error;
use serde_json::{json, Value};

use crate::input::{load_graph, load_model, parse_list, parse_matrix, parse_params, rows, LoadedModel};
use crate::{CliError, Command, Family, Format, Measure, Output, Report, Side, SimMeasure};

pub fn dispatch(cmd: Command) -> Result<(Output, String), CliError> {
    match cmd {
        Command::Analyze { model, graph, measure, oracle, out } => {
            Ok((analyze(&load_model(&model)?, &graph, measure, oracle)?, out.out))
        }
        Command::Sweep { model, measure, lambda_min, lambda_max, points, format, out } => {
            Ok((sweep(&load_model(&model)?, measure, lambda_min, lambda_max, points, format)?, out.out))
        }
        Command::Threshold { model, family, scan_min, scan_max, points, out } => {
            let mut opts = ThresholdOptions::default();
            opts.scan_min = scan_min.unwrap_or(opts.scan_min);
            opts.scan_max = scan_max.unwrap_or(opts.scan_max);
            opts.points = points.unwrap_or(opts.points);
            Ok((threshold(&load_model(&model)?, family, &opts)?, out.out))
        }
        Command::DesignGain { model, c, save_model, out } => {
            Ok((design(&load_model(&model)?, c, false, save_model.as_deref())?, out.out))
        }
        Command::DesignObserver { model, c, save_model, out } => {
            Ok((design(&load_model(&model)?, c, true, save_model.as_deref())?, out.out))
        }
        Command::Floor { model, side, eps, out } => Ok((floor(&load_model(&model)?, side, eps.as_deref())?, out.out)),
        Command::Bounds { model, graph, format, out } => Ok((bounds(&load_model(&model)?, &graph, format)?, out.out)),
        Command::Asymptotics { model, n, format, out } => Ok((asymptotics(&load_model(&model)?, &n, format)?, out.out)),
        Command::Survey { model, nodes, allow_large, format, out } => {
            Ok((survey(&load_model(&model)?, nodes, allow_large, format)?, out.out))
        }
        Command::Composite { model, g1, g2, k2, alpha, port, oracle, threshold, out } => {
            let m = load_model(&model)?;
            Ok((composite(&m, &g1, &g2, k2.as_deref(), alpha, port, oracle, threshold)?, out.out))
        }
        Command::Simulate { model, graph, measure, seed, paths, dt, t_end, burn_in, trajectory, record_every, out } => {
            let m = load_model(&model)?;
            let opts = SimOptions { seed, paths, dt, t_end, burn_in, trajectory, record_every };
            Ok((simulate(&m, &graph, measure, &opts)?, out.out))
        }
        Command::Fit { model, measure, max_degree, lambda_min, lambda_max, points, out } => {
            let m = load_model(&model)?;
            Ok((fit(&m, measure, max_degree, lambda_min, lambda_max, points)?, out.out))
        }
        Command::Fixtures { list, show, params, out } => Ok((fixtures(list, show.as_deref(), &params)?, out.out)),
    }
}

fn performance_function(m: &LoadedModel, measure: Measure) -> Result<PerformanceFunction<f64>, CliError> {
    Ok(match measure {
        Measure::Feedback => PerformanceFunction::state_feedback(&m.model, m.k()?)?,
        Measure::Observer => PerformanceFunction::observer(&m.model, m.k()?, m.f()?)?,
        Measure::Input => PerformanceFunction::input(&m.model, m.k()?)?,
        Measure::Estimation => PerformanceFunction::estimation(&m.model, m.f()?)?,
    })
}

fn measure_name(measure: Measure) -> &'static str {
    match measure {
        Measure::Feedback => "feedback",
        Measure::Observer => "observer",
        Measure::Input => "input",
        Measure::Estimation => "estimation",
    }
}

fn term(lambda: f64, v: &PhiValue<f64>) -> Value {
    json!({ "lambda": lambda, "phi": v.total, "phi_xi": v.xi, "phi_eta": v.eta })
}

fn threshold_json(t: &ThresholdResult<f64>) -> Value {
    json!({
        "lambda_tilde": t.lambda_tilde,
        "finite": t.is_finite(),
        "scan_max": t.scan_max,
        "refined": t.refined,
        "unstable_witness": t.unstable_witness,
    })
}

fn analyze(m: &LoadedModel, graph: &str, measure: Measure, oracle: bool) -> Result<Output, CliError> {
    let (g, grec) = load_graph(graph)?;
    let pf = performance_function(m, measure)?;
    let sum: SpectralSum<f64> = rho_of(&pf, &g)?;
    let xi: f64 = sum.terms.iter().map(|t| t.1.xi).sum();
    let eta: f64 = sum.terms.iter().map(|t| t.1.eta).sum();
    let mut body = json!({
        "measure": measure_name(measure),
        "rho": sum.total,
        "rho_xi": xi,
        "rho_eta": eta,
        "valid_from": pf.valid_from(),
        "per_eigenvalue": sum.terms.iter().map(|(l, v)| term(*l, v)).collect::<Vec<_>>(),
    });
    if oracle {
        let o = match measure {
            Measure::Feedback => rho_oracle(&m.model, &g, m.k()?, Variant::State)?,
            Measure::Observer => rho_oracle(&m.model, &g, m.k()?, Variant::Observer(m.f()?))?,
            Measure::Input => rho_u_oracle(&m.model, &g, m.k()?)?,
            Measure::Estimation => mu_oracle(&m.model, &g, m.f()?)?,
        };
        body["oracle"] = json!(o);
        body["oracle_rel_diff"] = json!((sum.total - o).abs() / o.abs().max(f64::MIN_POSITIVE));
    }
    Ok(Output::Json(Report::new("analyze", body).input("model", m.record.clone()).input("graph", grec)))
}

fn check_range(lo: f64, hi: f64, points: usize) -> Result<(), CliError> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(CliError::Validation(format!("need 0 < lambda-min < lambda-max, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(CliError::Validation("need at least 2 points".into()));
    }
    Ok(())
}

fn sweep(m: &LoadedModel, measure: Measure, lo: f64, hi: f64, points: usize, format: Format) -> Result<Output, CliError> {
    check_range(lo, hi, points)?;
    let pf = performance_function(m, measure)?;
    let inf = PhiValue { total: f64::INFINITY, xi: f64::INFINITY, eta: f64::INFINITY };
    let grid = log_samples(lo, hi, points);
    let mut values = Vec::with_capacity(grid.len());
    for &l in &grid {
        let v = if l <= pf.valid_from() {
            inf
        } else {
            match pf.value(l) {
                Ok(v) => v,
                Err(Error::BelowThreshold(_)) => inf,
                Err(e) => return Err(e.into()),
            }
        };
        values.push(v);
    }
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("lambda,phi,phi_xi,phi_eta\n");
            for (l, v) in grid.iter().zip(&values) {
                s.push_str(&format!("{},{},{},{}\n", f17(*l), f17(v.total), f17(v.xi), f17(v.eta)));
            }
            Output::Text(s)
        }
        Format::Json => {
            let body = json!({
                "measure": measure_name(measure),
                "valid_from": pf.valid_from(),
                "points": grid.iter().zip(&values).map(|(l, v)| term(*l, v)).collect::<Vec<_>>(),
            });
            Output::Json(Report::new("sweep", body).input("model", m.record.clone()))
        }
    })
}

/// Seventeen significant digits; `inf` for infinities.
fn f17(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn threshold(m: &LoadedModel, family: Family, opts: &ThresholdOptions) -> Result<Output, CliError> {
    if !(opts.scan_min > 0.0 && opts.scan_max > opts.scan_min && opts.scan_max.is_finite()) {
        return Err(CliError::Validation(format!(
            "need 0 < scan-min < scan-max, got [{}, {}]",
            opts.scan_min, opts.scan_max
        )));
    }
    let (t, name) = match family {
        Family::Output => (lambda_tilde(&m.model, m.k()?, opts)?, "output"),
        Family::State => (lambda_tilde_state_feedback(&m.model, m.k()?, opts)?, "state"),
        Family::Observer => (lambda_tilde_observer(&m.model, m.f()?, opts)?, "observer"),
    };
    let mut body = threshold_json(&t);
    body["family"] = json!(name);
    Ok(Output::Json(Report::new("threshold", body).input("model", m.record.clone())))
}

fn design(m: &LoadedModel, c: f64, observer: bool, save: Option<&str>) -> Result<Output, CliError> {
    let d: GainDesign<f64> = if observer { design_observer(&m.model, c)? } else { design_gain(&m.model, c)? };
    let name = if observer { "F" } else { "K" };
    let body = json!({
        "c": c,
        name: rows(&d.gain),
        "lambda_tilde": threshold_json(&d.threshold),
        "certificate_max_eig": d.certificate_max_eig,
        "certificate_holds": d.certificate_max_eig < 0.0,
        "riccati": rows(&d.riccati),
    });
    if let Some(path) = save {
        let text = if observer {
            model_to_json(&m.model, m.k.as_ref(), Some(&d.gain))
        } else {
            model_to_json(&m.model, Some(&d.gain), m.f.as_ref())
        };
        std::fs::write(path, text).map_err(|e| CliError::Validation(format!("cannot write {path}: {e}")))?;
    }
    let cmd = if observer { "design-observer" } else { "design-gain" };
    Ok(Output::Json(Report::new(cmd, body).input("model", m.record.clone())))
}

fn floor(m: &LoadedModel, side: Side, eps: Option<&str>) -> Result<Output, CliError> {
    let schedule = match eps {
        Some(text) => parse_list::<f64>(text, "eps")?,
        None => default_eps_schedule(),
    };
    let (side, name) = match side {
        Side::Control => (FloorSide::Control, "control"),
        Side::Estimation => (FloorSide::Estimation, "estimation"),
    };
    let f = performance_floor(&m.model, side, &schedule)?;
    let body = json!({
        "side": name,
        "floor": f.floor,
        "p0": rows(&f.p0),
        "extrapolated": f.extrapolated.as_ref().map(rows),
        "epsilon_trace": f.epsilon_trace.iter().map(|(e, t)| json!({"eps": e, "trace": t})).collect::<Vec<_>>(),
        "converged": f.converged,
        "failure": f.failure.as_ref().map(|e| e.to_string()),
    });
    Ok(Output::Json(Report::new("floor", body).input("model", m.record.clone())))
}

fn bound_json(b: &Result<Bound<f64>, Error>) -> Value {
    match b {
        Ok(b) => json!({ "value": b.value, "equality_case": b.equality_case }),
        Err(e) => json!({ "value": null, "skipped": e.to_string() }),
    }
}

fn bounds(m: &LoadedModel, graph: &str, format: Format) -> Result<Output, CliError> {
    let (g, grec) = load_graph(graph)?;
    let pf = performance_function(m, Measure::Feedback)?;
    let rho = rho_of(&pf, &g)?.total;
    let unit = g.edges().iter().all(|e| e.2 == 1.0);
    let unweighted = if unit {
        Ok(lower_bound_unweighted_graph(&pf, &g)?)
    } else {
        Err(Error::Invalid("graph has non-unit weights".into()))
    };
    let weighted = lower_bound_weighted_graph(&pf, &g)?;
    let n = g.n_nodes();
    let sparsity = pf.value(g.total_weight() * 2.0 / (n - 1) as f64)?.total * (n - 1) as f64;
    let body = json!({
        "n": n,
        "edges": g.n_edges(),
        "max_degree": g.max_degree(),
        "total_weight": g.total_weight(),
        "rho": rho,
        "unweighted": bound_json(&unweighted),
        "weighted": bound_json(&Ok(weighted)),
        "r1": unweighted.as_ref().ok().map(|b| rho / b.value),
        "sparsity_bound": sparsity,
    });
    if format == Format::Csv {
        let opt = |v: Option<f64>| v.map_or(String::new(), f17);
        let unweighted = unweighted.as_ref().ok().map(|b| b.value);
        return Ok(Output::Text(format!(
            "n,edges,max_degree,total_weight,rho,unweighted_bound,weighted_bound,r1,sparsity_bound\n{},{},{},{},{},{},{},{},{}\n",
            n,
            g.n_edges(),
            g.max_degree(),
            f17(g.total_weight()),
            f17(rho),
            opt(unweighted),
            f17(weighted.value),
            opt(unweighted.map(|u| rho / u)),
            f17(sparsity),
        )));
    }
    Ok(Output::Json(Report::new("bounds", body).input("model", m.record.clone()).input("graph", grec)))
}

fn asymptotics(m: &LoadedModel, ns: &str, format: Format) -> Result<Output, CliError> {
    let ns: Vec<usize> = parse_list(ns, "n")?;
    if ns.iter().any(|&n| n < 3) {
        return Err(CliError::Validation("every n must be at least 3".into()));
    }
    let pf = performance_function(m, Measure::Feedback)?;
    let rows = path_cycle_ratio_experiment(&pf, &ns)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rho_path).collect();
    let slope = (ns.len() >= 2).then(|| loglog_slope(&xs, &ys));
    Ok(match format {
        Format::Csv => {
            let mut csv = String::from("n,rho_path,rho_cycle,gamma_n,n_gamma,ratio\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    f17(r.rho_path),
                    f17(r.rho_cycle),
                    f17(r.gamma_n),
                    f17(r.n_gamma),
                    f17(r.ratio)
                ));
            }
            Output::Text(csv)
        }
        Format::Json => {
            let body = json!({
                "rows": rows.iter().map(|r| json!({
                    "n": r.n, "rho_path": r.rho_path, "rho_cycle": r.rho_cycle,
                    "gamma_n": r.gamma_n, "n_gamma": r.n_gamma, "ratio": r.ratio,
                })).collect::<Vec<_>>(),
                "loglog_slope_rho_path": slope,
            });
            Output::Json(Report::new("asymptotics", body).input("model", m.record.clone()))
        }
    })
}

fn survey(m: &LoadedModel, nodes: usize, allow_large: bool, format: Format) -> Result<Output, CliError> {
    if nodes >= MAX_ENUMERATION_NODES && !allow_large {
        return Err(CliError::Validation(format!(
            "surveying {nodes} nodes enumerates close to a million graphs; pass --allow-large"
        )));
    }
    let pf = performance_function(m, Measure::Feedback)?;
    let entries = survey_ratio_r1(&pf, nodes)?;
    let total = entries.len();
    let below_two = entries.iter().filter(|e| e.r1 < 2.0).count() as f64 / total as f64;
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("r1,cdf,rho,bound,edges\n");
            for (i, e) in entries.iter().enumerate() {
                let edges: Vec<String> = e.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    f17(e.r1),
                    f17((i + 1) as f64 / total as f64),
                    f17(e.rho),
                    f17(e.bound),
                    edges.join(" ")
                ));
            }
            Output::Text(s)
        }
        Format::Json => {
            let body = json!({
                "nodes": nodes,
                "graphs": total,
                "fraction_r1_below_2": below_two,
                "entries": entries.iter().map(|e| json!({
                    "edges": e.edges, "rho": e.rho, "bound": e.bound, "r1": e.r1,
                })).collect::<Vec<_>>(),
            });
            Output::Json(Report::new("survey", body).input("model", m.record.clone()))
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn composite(
    m: &LoadedModel,
    g1: &str,
    g2: &str,
    k2: Option<&str>,
    alpha: f64,
    port: Option<usize>,
    oracle: bool,
    threshold: bool,
) -> Result<Output, CliError> {
    let (g1, r1) = load_graph(g1)?;
    let (g2, r2) = load_graph(g2)?;
    let k1 = m.k()?.clone();
    let k2 = match k2 {
        Some(text) => parse_matrix(text)?,
        None => &k1 * alpha,
    };
    let mut cs = CompositeSpec::new(m.model.clone(), g1, k1, g2, k2);
    if let Some(p) = port {
        cs = cs.with_port(p);
    }
    let sum = rho_nn(&cs)?;
    let mut body = json!({
        "port": cs.port,
        "rho_nn": sum.total,
        "inner": sum.inner,
        "higher": sum.higher,
        "per_eigenvalue": sum.terms.iter().map(|(l, v)| term(*l, v)).collect::<Vec<_>>(),
    });
    if oracle {
        let direct = composite_oracle(&cs)?;
        body["oracle"] = json!(direct);
        if proportional_factor(&cs.k1, &cs.k2).is_some() {
            body["flattened_oracle"] = json!(flattened_oracle(&cs)?);
        }
    }
    if threshold {
        body["threshold"] = threshold_json(&composite_threshold(&cs, &ThresholdOptions::default())?);
    }
    Ok(Output::Json(
        Report::new("composite", body)
            .input("model", m.record.clone())
            .input("g1", r1)
            .input("g2", r2),
    ))
}

struct SimOptions {
    seed: u64,
    paths: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    burn_in: Option<f64>,
    trajectory: bool,
    record_every: usize,
}

fn simulate(m: &LoadedModel, graph: &str, measure: SimMeasure, o: &SimOptions) -> Result<Output, CliError> {
    let (g, grec) = load_graph(graph)?;
    let (net, analytic) = match measure {
        SimMeasure::Feedback => (
            assemble_full(&m.model, &g, m.k()?)?,
            rho_of(&PerformanceFunction::state_feedback(&m.model, m.k()?)?, &g)?.total,
        ),
        SimMeasure::Observer => {
            let aug = augment_observer(&m.model, m.k()?, m.f()?)?;
            (
                assemble_full(&aug.model, &g, &aug.gain)?,
                rho_of(&PerformanceFunction::observer(&m.model, m.k()?, m.f()?)?, &g)?.total,
            )
        }
    };
    let mut cfg = SimulationConfig::default_for(&net, o.seed)?;
    cfg.dt = o.dt.unwrap_or(cfg.dt);
    cfg.t_end = o.t_end.unwrap_or(cfg.t_end);
    cfg.burn_in = o.burn_in.unwrap_or(if o.t_end.is_some() { cfg.t_end / 10.0 } else { cfg.burn_in });
    cfg.n_paths = o.paths.unwrap_or(cfg.n_paths);
    if o.trajectory {
        let x0 = vec![0.0; net.a_cl.nrows()];
        let tr = simulate_trajectory(&net, &cfg, &x0, o.record_every)?;
        return Ok(Output::Text(tr.to_csv()));
    }
    cfg.validate()?;
    let est = simulate_variance(&net, &cfg)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let body = json!({
        "estimate": est.estimate,
        "stderr": est.stderr,
        "analytic_rho": analytic,
        "z": (est.estimate - analytic) / est.stderr,
        "per_path": est.per_path,
        "warnings": est.warnings,
        "config": {
            "dt": cfg.dt, "t_end": cfg.t_end, "burn_in": cfg.burn_in,
            "paths": cfg.n_paths, "seed": cfg.seed,
        },
    });
    Ok(Output::Json(Report::new("simulate", body).input("model", m.record.clone()).input("graph", grec)))
}

fn fit(
    m: &LoadedModel,
    measure: Measure,
    max_degree: usize,
    lo: Option<f64>,
    hi: Option<f64>,
    points: Option<usize>,
) -> Result<Output, CliError> {
    let pf = performance_function(m, measure)?;
    let samples = match (lo, hi) {
        (None, None) if points.is_none() => default_samples(pf.valid_from(), max_degree),
        _ => {
            let d = default_samples(pf.valid_from(), max_degree);
            let (lo, hi) = (lo.unwrap_or(d[0]), hi.unwrap_or(d[d.len() - 1]));
            let n = points.unwrap_or(d.len());
            check_range(lo, hi, n)?;
            log_samples(lo, hi, n)
        }
    };
    let r = fit_rational(&pf, &samples, max_degree)?;
    let body = json!({
        "measure": measure_name(measure),
        "numerator": r.numerator,
        "denominator": r.denominator,
        "numerator_degree": r.numerator_degree(),
        "denominator_degree": r.denominator_degree(),
        "residual": r.residual,
        "validation_error": r.validation_error,
        "condition": r.condition,
        "samples": samples.len(),
    });
    Ok(Output::Json(Report::new("fit", body).input("model", m.record.clone())))
}

fn fixtures(list: bool, show: Option<&str>, params: &[String]) -> Result<Output, CliError> {
    if let Some(name) = show {
        let fx = lapnet::fixtures::fixture::<f64>(name, &parse_params(params)?)?;
        return Ok(Output::Text(model_to_json(&fx.model, Some(&fx.gains.k), fx.gains.f.as_ref())));
    }
    if !list {
        return Err(CliError::Usage("fixtures needs --list or --show NAME".into()));
    }
    let entries: Vec<Value> = FIXTURE_NAMES
        .iter()
        .map(|name| {
            let defaults: serde_json::Map<String, Value> = fixture_defaults(name)
                .unwrap()
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            json!({ "name": name, "params": defaults })
        })
        .collect();
    Ok(Output::Json(Report::new("fixtures", json!({ "fixtures": entries }))))
}
