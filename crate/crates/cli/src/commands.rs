use std::path::Path;

use fracfit::fractional_calculus::{
    solve_fde, FdeBasis, FdeProblem, FdeQuadrature, FdeSolution, FracFunction, Rhs, MAX_FDE_UNKNOWNS,
};
use fracfit::least_squares::{
    add_noise, fit_continuous_normal, fit_discrete_normal, fit_discrete_projection, fit_projection,
    fit_weighted_normal, BasisDescriptor, DataSet, FitDomain, FitMethod, FitResult, Target, MAX_UNKNOWNS,
};
use fracfit::option_pricing::{price_american_put, GbmConfig, LsmcJob, LsmcResult};
use fracfit::orthogonal_basis::{build_continuous, build_discrete, Measure, OrthogonalBasis, WeightSpec};
use fracfit::quadrature::{gauss_jacobi_fractional, MAX_POINTS};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{FitArgs, Method, NoiseArgs, OrthpolyArgs, PredictArgs, PriceArgs, SolveFdeArgs, TrialBasis};
use crate::builtin::{self, common_step, NamedFunction};
use crate::error::{CliError, CliResult};
use crate::io::{emit, read_data, read_points, to_json, write_data, write_table};

fn check_lambda(lambda: f64) -> CliResult<()> {
    if lambda > 0.0 && lambda <= 2.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("lambda must lie in (0, 2], got {lambda}")))
    }
}

fn check_lambdas(lambdas: &[f64]) -> CliResult<()> {
    if lambdas.is_empty() {
        return Err(CliError::Input("at least one lambda is required".into()));
    }
    lambdas.iter().try_for_each(|&l| check_lambda(l))
}

fn check_degree(n: usize, max_unknowns: usize) -> CliResult<()> {
    if n + 1 > max_unknowns {
        return Err(CliError::Input(format!("degree must be at most {}, got {n}", max_unknowns - 1)));
    }
    Ok(())
}

fn check_quad_points(m: usize) -> CliResult<()> {
    if m == 0 || m > MAX_POINTS {
        return Err(CliError::Input(format!("quadrature size must be in 1..={MAX_POINTS}, got {m}")));
    }
    Ok(())
}

fn check_abscissae(xs: &[f64]) -> CliResult<()> {
    match xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        Some(x) => Err(CliError::Input(format!("prediction points must be non-negative, got {x}"))),
        None => Ok(()),
    }
}

fn weight_label(w: &WeightSpec) -> String {
    match w {
        WeightSpec::Unit => "unit".into(),
        WeightSpec::Jacobi { beta_left, beta_right } => format!("jacobi:{beta_left}:{beta_right}"),
        other => format!("{other:?}"),
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

/// Scalar for one result, array for a sweep.
fn per_lambda(values: Vec<Value>) -> Value {
    if values.len() == 1 {
        values.into_iter().next().unwrap_or(Value::Null)
    } else {
        Value::Array(values)
    }
}

fn write_curve(path: &Path, lambdas: &[f64], models: &[&FitResult], lo: f64, hi: f64, points: usize) -> CliResult<()> {
    if points < 2 {
        return Err(CliError::Input(format!("curve needs at least 2 points, got {points}")));
    }
    let mut header = vec!["x".to_string()];
    if lambdas.len() == 1 {
        header.push("y_fit".into());
    } else {
        header.extend(lambdas.iter().map(|l| format!("y_fit_l{l}")));
    }
    let rows = linspace(lo, hi, points)
        .into_iter()
        .map(|x| {
            let mut row = vec![x];
            for m in models {
                row.push(m.predict(x)?);
            }
            Ok(row)
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_table(Some(path), &header, &rows)
}

enum Source {
    Data(DataSet),
    Function(NamedFunction),
}

fn fit_one(source: &Source, a: &FitArgs, lambda: f64) -> CliResult<FitResult> {
    let n = a.degree;
    match source {
        Source::Data(data) => {
            if !matches!(a.weight, WeightSpec::Unit) {
                return Err(CliError::Input(
                    "--weight applies to built-in functions; give data weights in a w column".into(),
                ));
            }
            Ok(match a.method {
                Method::Normal => fit_discrete_normal(data, lambda, n)?,
                Method::Projection => fit_discrete_projection(data, lambda, n)?,
            })
        }
        Source::Function(named) => {
            let (lo, hi) = (a.interval.lo, a.interval.hi);
            let y = |x: f64| named.eval(x);
            let step = common_step(&[lambda, named.grid]).unwrap_or(lambda);
            let rule = a.weight.rule(step, lo, hi, a.quad_points)?;
            Ok(match (a.method, &a.weight) {
                (Method::Normal, WeightSpec::Unit) => fit_continuous_normal(&y, lo, hi, lambda, n, &rule)?,
                (Method::Normal, w) => fit_weighted_normal(&y, w, lambda, n, &rule)?,
                (Method::Projection, w) => {
                    let basis = build_continuous(w, lambda, n, &rule)?;
                    let measure = Measure::continuous(w, &rule)?;
                    fit_projection(Target::Function(&y), &basis, &measure)?
                }
            })
        }
    }
}

fn prediction_rows(lambdas: &[f64], fits: &[FitResult], xs: &[f64]) -> CliResult<Vec<Value>> {
    let mut out = Vec::new();
    for (lambda, fit) in lambdas.iter().zip(fits) {
        for &x in xs {
            out.push(json!({ "lambda": lambda, "x": x, "y": fit.predict(x)? }));
        }
    }
    Ok(out)
}

fn fit_document(job: &str, params: Value, fits: &[FitResult], predictions: Vec<Value>, extra: Value) -> Value {
    json!({
        "job": job,
        "params": params,
        "coeffs": per_lambda(fits.iter().map(|f| json!(f.coeffs)).collect()),
        "error": per_lambda(fits.iter().map(|f| json!(f.error)).collect()),
        "cond": per_lambda(fits.iter().map(|f| json!(f.cond)).collect()),
        "predictions": predictions,
        "diagnostics": { "fits": fits, "details": extra },
    })
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    check_lambdas(&a.lambda)?;
    check_degree(a.degree, MAX_UNKNOWNS)?;
    check_quad_points(a.quad_points)?;
    check_abscissae(&a.predict)?;
    let source = match (&a.data, &a.function) {
        (Some(path), _) => Source::Data(read_data(path)?),
        (None, Some(name)) => Source::Function(builtin::function(name)?),
        (None, None) => return Err(CliError::Input("give --data or --function".into())),
    };
    let fits = a
        .lambda
        .iter()
        .map(|&l| fit_one(&source, a, l))
        .collect::<CliResult<Vec<_>>>()?;

    let (source_desc, lo, hi, extra) = match &source {
        Source::Data(d) => {
            let lo = d.xs().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = d.xs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let path = a.data.as_ref().map(|p| p.display().to_string());
            (json!({ "data": path }), lo, hi, json!({ "points": d.len(), "weighted": d.weights().is_some() }))
        }
        Source::Function(f) => (
            json!({ "function": f.name, "formula": f.formula }),
            a.interval.lo,
            a.interval.hi,
            json!({ "quad_points": a.quad_points }),
        ),
    };
    let params = json!({
        "source": source_desc,
        "lambda": a.lambda,
        "degree": a.degree,
        "interval": [lo, hi],
        "weight": weight_label(&a.weight),
        "method": format!("{:?}", a.method).to_lowercase(),
    });
    let predictions = prediction_rows(&a.lambda, &fits, &a.predict)?;
    let doc = fit_document("fit", params, &fits, predictions, extra);
    emit(a.output.out.as_deref(), &to_json(&doc))?;
    if let Some(path) = &a.output.curve_out {
        let models: Vec<&FitResult> = fits.iter().collect();
        write_curve(path, &a.lambda, &models, lo, hi, a.output.curve_points)?;
    }
    Ok(())
}

fn basis_document(basis: &OrthogonalBasis, params: Value) -> Value {
    json!({
        "job": "orthpoly",
        "params": params,
        "coeffs": basis.polys().iter().map(|p| p.coeffs().to_vec()).collect::<Vec<_>>(),
        "error": null,
        "cond": null,
        "predictions": [],
        "diagnostics": {
            "mode": basis.mode(),
            "b": basis.b(),
            "c": basis.c(),
            "sq_norms": basis.sq_norms(),
        },
    })
}

pub fn cmd_orthpoly(a: &OrthpolyArgs) -> CliResult<()> {
    check_lambda(a.lambda)?;
    check_degree(a.degree, MAX_UNKNOWNS)?;
    check_quad_points(a.quad_points)?;
    let (basis, params) = match &a.points {
        Some(path) => {
            if !matches!(a.weight, WeightSpec::Unit) {
                return Err(CliError::Input("discrete weights go in the points file as x,w".into()));
            }
            let (xs, ws) = read_points(path)?;
            let basis = build_discrete(ws.as_deref(), &xs, a.lambda, a.degree)?;
            let params = json!({
                "lambda": a.lambda,
                "degree": a.degree,
                "points": path.display().to_string(),
                "weighted": ws.is_some(),
            });
            (basis, params)
        }
        None => {
            let (lo, hi) = (a.interval.lo, a.interval.hi);
            let rule = a.weight.rule(a.lambda, lo, hi, a.quad_points)?;
            let basis = build_continuous(&a.weight, a.lambda, a.degree, &rule)?;
            let params = json!({
                "lambda": a.lambda,
                "degree": a.degree,
                "interval": [lo, hi],
                "weight": weight_label(&a.weight),
                "quad_points": a.quad_points,
            });
            (basis, params)
        }
    };
    emit(a.out.as_deref(), &to_json(&basis_document(&basis, params)))
}

fn parse_pairs(items: &[String], what: &str) -> CliResult<Vec<(f64, f64)>> {
    items
        .iter()
        .map(|item| {
            let bad = || CliError::Input(format!("{what}: expected a:b, got {item:?}"));
            let (a, b) = item.split_once(':').ok_or_else(bad)?;
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok((a, b))
        })
        .collect()
}

fn custom_problem(a: &SolveFdeArgs) -> CliResult<FdeProblem> {
    if a.interval.lo != 0.0 {
        return Err(CliError::Input(format!("equations are posed on 0:b, got lower bound {}", a.interval.lo)));
    }
    let terms = parse_pairs(&a.terms, "--terms")?;
    if terms.is_empty() {
        return Err(CliError::Input("at least one derivative term is required".into()));
    }
    if let Some((order, _)) = terms.iter().find(|(o, _)| !(*o > 0.0 && *o < 1.0)) {
        return Err(CliError::Input(format!("derivative orders must lie in (0, 1), got {order}")));
    }
    let rhs = parse_pairs(&a.rhs, "--rhs")?;
    let rhs = FracFunction::new(rhs).map_err(|e| CliError::Input(format!("--rhs: {e}")))?;
    FdeProblem::new(terms, a.reaction, Rhs::Frac(rhs), a.y0, a.interval.hi)
        .map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_solve_fde(a: &SolveFdeArgs) -> CliResult<()> {
    check_lambdas(&a.lambda)?;
    check_degree(a.degree, MAX_FDE_UNKNOWNS)?;
    check_abscissae(&a.predict)?;
    if let Some(m) = a.quad_points {
        check_quad_points(m)?;
    }
    let (problem, exact) = match &a.problem {
        Some(name) => {
            let named = builtin::problem(name)?;
            (named.problem, Some(named.exact))
        }
        None => (custom_problem(a)?, None),
    };
    let b = problem.b();
    let basis = match a.basis {
        TrialBasis::Monomial => FdeBasis::Monomial,
        TrialBasis::MuntzLegendre => FdeBasis::MuntzLegendre,
    };
    let solutions = a
        .lambda
        .iter()
        .map(|&lambda| {
            let quadrature = match a.quad_points {
                Some(m) => FdeQuadrature::Rule(gauss_jacobi_fractional(m, lambda, 0.0, 0.0, 0.0, b)?),
                None => FdeQuadrature::Auto,
            };
            Ok(solve_fde(&problem, lambda, a.degree, basis, &quadrature)?)
        })
        .collect::<CliResult<Vec<FdeSolution>>>()?;

    let fits: Vec<FitResult> = solutions.iter().map(|s| s.fit.clone()).collect();
    let mut predictions = Vec::new();
    for (lambda, fit) in a.lambda.iter().zip(&fits) {
        for &x in &a.predict {
            let y = fit.predict(x)?;
            let mut row = json!({ "lambda": lambda, "x": x, "y": y });
            if let Some(exact) = exact {
                row["exact"] = json!(exact(x));
                row["abs_error"] = json!((exact(x) - y).abs());
            }
            predictions.push(row);
        }
    }
    let details: Vec<Value> = solutions
        .iter()
        .map(|s| {
            let mut d = json!({
                "rank": s.rank,
                "quadrature": s.quadrature,
                "solution_terms": s.solution.terms(),
            });
            if let Some(exact) = exact {
                d["abs_error_at_b"] = json!((exact(b) - s.fit.predict(b).unwrap_or(f64::NAN)).abs());
            }
            d
        })
        .collect();
    let params = json!({
        "problem": a.problem,
        "terms": problem.terms(),
        "reaction": problem.reaction(),
        "initial_value": problem.initial_value(),
        "interval": [0.0, b],
        "lambda": a.lambda,
        "degree": a.degree,
        "basis": format!("{:?}", a.basis).to_lowercase(),
        "quad_points": a.quad_points,
    });
    let doc = fit_document("solve-fde", params, &fits, predictions, json!(details));
    emit(a.output.out.as_deref(), &to_json(&doc))?;
    if let Some(path) = &a.output.curve_out {
        let models: Vec<&FitResult> = fits.iter().collect();
        write_curve(path, &a.lambda, &models, 0.0, b, a.output.curve_points)?;
    }
    Ok(())
}

pub fn price_jobs(a: &PriceArgs) -> CliResult<Vec<LsmcJob>> {
    check_lambdas(&a.lambda)?;
    a.lambda
        .iter()
        .map(|&lambda| {
            let mut gbm = GbmConfig::new(a.s0, a.rate, a.sigma, a.horizon, a.steps, a.paths, a.seed);
            gbm.budget = a.budget;
            let job = LsmcJob {
                gbm,
                strike: a.strike,
                lambda,
                basis_degree: a.degree,
            };
            job.validate().map_err(|e| CliError::Input(e.to_string()))?;
            Ok(job)
        })
        .collect()
}

pub fn cmd_price(a: &PriceArgs) -> CliResult<()> {
    let jobs = price_jobs(a)?;
    let results = jobs
        .iter()
        .map(|job| Ok(price_american_put(job)?))
        .collect::<CliResult<Vec<LsmcResult>>>()?;
    let predictions: Vec<Value> = jobs
        .iter()
        .zip(&results)
        .map(|(job, r)| {
            json!({
                "lambda": job.lambda,
                "price": r.price,
                "std_error": r.std_error,
                "european": r.european,
                "european_std_error": r.european_std_error,
            })
        })
        .collect();
    let diagnostics: Vec<Value> = jobs
        .iter()
        .zip(&results)
        .map(|(job, r)| {
            json!({
                "lambda": job.lambda,
                "skipped_dates": r.skipped_dates,
                "exercise_at_start": r.exercise_at_start,
            })
        })
        .collect();
    let doc = json!({
        "job": "price",
        "params": {
            "s0": a.s0, "strike": a.strike, "rate": a.rate, "sigma": a.sigma, "horizon": a.horizon,
            "steps": a.steps, "paths": a.paths, "seed": a.seed, "lambda": a.lambda, "degree": a.degree,
        },
        "coeffs": null,
        "error": per_lambda(results.iter().map(|r| json!(r.std_error)).collect()),
        "cond": null,
        "predictions": predictions,
        "diagnostics": diagnostics,
    });
    emit(a.out.as_deref(), &to_json(&doc))
}

pub fn cmd_noise(a: &NoiseArgs) -> CliResult<()> {
    if !(a.percent.is_finite() && a.percent >= 0.0) {
        return Err(CliError::Input(format!("noise percentage must be non-negative, got {}", a.percent)));
    }
    let data = read_data(&a.data)?;
    let noisy = add_noise(&data, a.percent, a.seed)?;
    write_data(a.out.as_deref(), &noisy)
}

#[derive(Deserialize)]
struct SavedFit {
    basis: BasisDescriptor,
    coeffs: Vec<f64>,
    domain: FitDomain,
    method: FitMethod,
    error: Option<f64>,
    cond: Option<f64>,
}

/// Rebuilds the fits stored in a `fit` or `solve-fde` document.
pub fn load_fits(path: &Path) -> CliResult<Vec<FitResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: not JSON: {e}", path.display())))?;
    let fits = doc
        .pointer("/diagnostics/fits")
        .cloned()
        .ok_or_else(|| CliError::Input(format!("{}: no diagnostics.fits entry", path.display())))?;
    let saved: Vec<SavedFit> = serde_json::from_value(fits)
        .map_err(|e| CliError::Input(format!("{}: malformed fit entry: {e}", path.display())))?;
    Ok(saved
        .into_iter()
        .map(|s| FitResult {
            basis: s.basis,
            coeffs: s.coeffs,
            error: s.error.unwrap_or(f64::NAN),
            cond: s.cond.unwrap_or(f64::INFINITY),
            domain: s.domain,
            method: s.method,
        })
        .collect())
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    check_abscissae(&a.at)?;
    let fits = load_fits(&a.model)?;
    let lambdas: Vec<f64> = fits.iter().map(FitResult::lambda).collect();
    let predictions = prediction_rows(&lambdas, &fits, &a.at)?;
    let doc = json!({
        "job": "predict",
        "params": { "model": a.model.display().to_string(), "at": a.at },
        "coeffs": per_lambda(fits.iter().map(|f| json!(f.coeffs)).collect()),
        "error": null,
        "cond": null,
        "predictions": predictions,
        "diagnostics": { "fits": fits.len() },
    });
    emit(a.out.as_deref(), &to_json(&doc))
}
