//! Recomputes reference tables and compares each figure against its tolerance.

use fracfit::fractional_calculus::{fde_abs_error, solve_fde, FdeBasis, FdeQuadrature};
use fracfit::least_squares::{
    add_noise, fit_continuous_normal, fit_discrete_normal, fit_discrete_projection, DataSet,
};
use fracfit::option_pricing::{price_american_put, GbmConfig, LsmcJob};
use fracfit::quadrature::gauss_jacobi_fractional;
use serde::Serialize;
use serde_json::json;

use crate::args::{ReproduceArgs, TableId};
use crate::builtin::{self, function};
use crate::error::CliResult;
use crate::io::{emit, to_json};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub table: &'static str,
    pub label: String,
    pub reference: String,
    pub computed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    fn new(table: &'static str, label: impl Into<String>, reference: impl Into<String>) -> Self {
        Self {
            table,
            label: label.into(),
            reference: reference.into(),
            computed: String::new(),
            tolerance: String::new(),
            pass: false,
        }
    }

    fn result(mut self, computed: String, tolerance: impl Into<String>, pass: bool) -> Self {
        self.computed = computed;
        self.tolerance = tolerance.into();
        self.pass = pass;
        self
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<4} {}: reference {}, computed {}, tolerance {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.table,
            self.label,
            self.reference,
            self.computed,
            self.tolerance
        )
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

fn rel_check(table: &'static str, label: String, reference: f64, value: f64, rel: f64) -> Check {
    Check::new(table, label, format!("{reference:e}")).result(
        format!("{value:.4e}"),
        format!("±{}%", rel * 100.0),
        (value - reference).abs() <= rel * reference.abs(),
    )
}

fn magnitude_check(table: &'static str, label: String, reference: f64, value: f64) -> Check {
    let ratio = value / reference;
    Check::new(table, label, format!("{reference:e}")).result(
        format!("{value:.4e}"),
        "same order of magnitude (ratio in [0.1, 10])",
        (0.1..=10.0).contains(&ratio),
    )
}

fn bound_check(table: &'static str, label: String, reference: &str, value: f64, bound: f64) -> Check {
    Check::new(table, label, reference).result(format!("{value:.3e}"), format!("≤ {bound:e}"), value <= bound)
}

fn coeff_check(table: &'static str, label: String, reference: &[f64], coeffs: &[f64], tol: f64) -> Check {
    let diff = reference.iter().zip(coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let shown: Vec<String> = coeffs.iter().map(|c| format!("{c:.6}")).collect();
    Check::new(table, label, format!("{reference:?}")).result(format!("[{}]", shown.join(", ")), format!("±{tol:e} each"), diff <= tol)
}

fn table1() -> CliResult<Vec<Check>> {
    let y = function("mixed-power")?;
    let f = |x: f64| y.eval(x);
    let rule = gauss_jacobi_fractional(64, 0.25, 0.0, 0.0, 0.0, 1.0)?;
    let mut out = Vec::new();
    let rows: [(f64, [f64; 3], f64, Option<f64>); 3] = [
        (0.75, [0.0, 1.0, 1.0], 1e-8, None),
        (1.0, [0.0329, 1.7039, 0.2597], 5e-4, Some(1.40e-5)),
        (1.5, [0.1388, 2.5269, -0.7126], 5e-4, Some(8.78e-4)),
    ];
    for (lambda, coeffs, tol, err) in rows {
        let fit = fit_continuous_normal(&f, 0.0, 1.0, lambda, 2, &rule)?;
        out.push(coeff_check("T1", format!("λ={lambda} coefficients"), &coeffs, &fit.coeffs, tol));
        out.push(match err {
            None => bound_check("T1", format!("λ={lambda} E^C"), "2.70e-24", fit.error, 1e-18),
            Some(e) => rel_check("T1", format!("λ={lambda} E^C"), e, fit.error, 0.10),
        });
    }
    Ok(out)
}

fn table2(qualitative: bool, seed: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let data = DataSet::from_fn(linspace(10.0, 20.0, 20), |x| x.powf(1.5))?;
    let fit = fit_discrete_normal(&data, 1.5, 1)?;
    out.push(coeff_check("T2", "λ=1.5 coefficients (20 points)".into(), &[0.0, 1.0], &fit.coeffs, 1e-8));
    out.push(bound_check("T2", "λ=1.5 E^D (20 points)".into(), "8.20e-28", fit.error, 1e-18));
    // the printed λ=1.25 and λ=1 rows come from 11 equispaced points
    let coarse = DataSet::from_fn(linspace(10.0, 20.0, 11), |x| x.powf(1.5))?;
    for (lambda, reference) in [(1.25, 2.02), (1.0, 8.17)] {
        let fit = fit_discrete_normal(&coarse, lambda, 1)?;
        out.push(rel_check("T2", format!("λ={lambda} E^D (11 points)"), reference, fit.error, 0.10));
    }
    if qualitative {
        let rows = [(5.0, [(1.5, 2.20e-2), (1.25, 2.05), (1.0, 8.19)]), (10.0, [(1.5, 8.80e-2), (1.25, 2.10), (1.0, 8.26)])];
        for (pct, entries) in rows {
            let noisy = add_noise(&data, pct, seed)?;
            for (lambda, reference) in entries {
                let fit = fit_discrete_normal(&noisy, lambda, 1)?;
                out.push(magnitude_check("T2", format!("{pct}% noise (seed {seed}) λ={lambda} E^D"), reference, fit.error));
            }
        }
    }
    Ok(out)
}

fn table4() -> CliResult<Vec<Check>> {
    let named = builtin::problem("linear-solution")?;
    let mut out = Vec::new();
    let sol = solve_fde(&named.problem, 0.5, 2, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto)?;
    out.push(bound_check("T4", "λ=0.5 E^C".into(), "0", sol.fit.error, 1e-18));
    let worst = linspace(0.0, 1.0, 101)
        .into_iter()
        .map(|x| sol.solution.eval(x).map(|v| (v - x).abs()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(bound_check("T4", "λ=0.5 max |ŷ(x) - x| on [0,1]".into(), "y = x", worst, 1e-8));
    for (lambda, reference) in [(0.75, 6.11e-4), (1.0, 5.19e-4), (1.25, 2.70e-3), (1.5, 8.60e-3)] {
        let sol = solve_fde(&named.problem, lambda, 2, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto)?;
        out.push(rel_check("T4", format!("λ={lambda} E^C"), reference, sol.fit.error, 0.15));
    }
    Ok(out)
}

fn table6() -> CliResult<Vec<Check>> {
    // 2014..2017 coded 0..3, 2018 predicted at 4
    let data = DataSet::new(vec![0.0, 1.0, 2.0, 3.0], vec![10_000.0, 21_000.0, 50_000.0, 70_000.0])?;
    let mut out = Vec::new();
    for (lambda, reference) in [(0.5, 69692.0), (0.75, 80546.0), (1.0, 90000.0), (1.25, 98307.0), (1.5, 105870.0)] {
        let predicted = fit_discrete_normal(&data, lambda, 1)?.predict(4.0)?.round();
        out.push(Check::new("T6", format!("λ={lambda} predicted sales"), format!("{reference}")).result(
            format!("{predicted}"),
            "±1",
            (predicted - reference).abs() <= 1.0,
        ));
    }
    Ok(out)
}

fn table7(seed: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let clean = DataSet::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.0, 0.1340, 0.3660, 0.6589, 0.6589])?;
    let rows: [(f64, [(f64, f64); 3]); 3] = [
        (0.0, [(1.5, 1.3042e-4), (1.0, 1.64e-2), (0.5, 1.232e-1)]),
        (5.0, [(1.5, 4.7e-3), (1.0, 4.3e-3), (0.5, 3.1e-3)]),
        (10.0, [(1.5, 3.5e-2), (1.0, 2.54e-2), (0.5, 1.113e-2)]),
    ];
    for (pct, entries) in rows {
        let data = if pct > 0.0 { add_noise(&clean, pct, seed)? } else { clean.clone() };
        for (lambda, reference) in entries {
            let fit = fit_discrete_normal(&data, lambda, 1)?;
            let label = if pct > 0.0 { format!("{pct}% noise (seed {seed}) λ={lambda} E^D") } else { format!("no noise λ={lambda} E^D") };
            out.push(magnitude_check("T7", label, reference, fit.error));
        }
    }

    // weight (1-x) against unit weight on x^0.75 with 10% noise beyond 0.8
    let xs: Vec<f64> = (0..30).map(|k| k as f64 / 30.0).collect();
    let (near, far): (Vec<f64>, Vec<f64>) = xs.iter().partition(|&&x| x <= 0.8);
    let far_noisy = add_noise(&DataSet::from_fn(far.clone(), |x| x.powf(0.75))?, 10.0, seed)?;
    let mut ys: Vec<f64> = near.iter().map(|x| x.powf(0.75)).collect();
    ys.extend_from_slice(far_noisy.ys());
    let all_x: Vec<f64> = near.iter().chain(&far).copied().collect();
    let weights: Vec<f64> = all_x.iter().map(|x| 1.0 - x).collect();
    let weighted = fit_discrete_projection(&DataSet::with_weights(all_x.clone(), ys.clone(), weights)?, 0.75, 1)?;
    let unit = fit_discrete_projection(&DataSet::new(all_x, ys)?, 0.75, 1)?;
    out.push(
        Check::new("T7", "weight (1-x) vs unit, λ=0.75: E^D", "2.020e-2 < 4.2040e-1").result(
            format!("{:.4e} vs {:.4e}", weighted.error, unit.error),
            "weighted < unweighted",
            weighted.error < unit.error,
        ),
    );
    Ok(out)
}

fn table8() -> CliResult<Vec<Check>> {
    let named = builtin::problem("two-term")?;
    let exact = named.exact;
    let mut out = Vec::new();
    let sol = solve_fde(&named.problem, 0.5, 8, FdeBasis::Monomial, &FdeQuadrature::Auto)?;
    out.push(bound_check("T8", "λ=0.5 n=8 E^C".into(), "3.08e-45", sol.fit.error, 1e-30));
    let ae = fde_abs_error(&sol.fit, &exact, 1.0)?;
    out.push(bound_check("T8", "λ=0.5 n=8 A.E.(1)".into(), "4.40e-16", ae, 1e-12));
    let mut errors = Vec::new();
    for n in [2, 4, 6, 8, 10] {
        let sol = solve_fde(&named.problem, 0.75, n, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto)?;
        if n == 6 {
            let ae = fde_abs_error(&sol.fit, &exact, 1.0)?;
            out.push(Check::new("T8", "λ=0.75 n=6 A.E.(1)", "8.81e-6").result(
                format!("{ae:.3e}"),
                "within a factor of 5",
                (8.81e-6 / 5.0..=5.0 * 8.81e-6).contains(&ae),
            ));
        }
        errors.push(sol.fit.error);
    }
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
    out.push(Check::new("T8", "λ=0.75 E^C over n=2,4,6,8,10", "decreasing").result(
        format!("[{}]", shown.join(", ")),
        "strictly decreasing",
        errors.windows(2).all(|w| w[1] < w[0]),
    ));
    Ok(out)
}

fn table9(seed: u64) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for (lambda, reference) in [(0.25, 10.743), (0.5, 10.730), (0.75, 10.790), (1.0, 10.714)] {
        let gbm = GbmConfig::new(38.0, 0.05, 0.71, 1.0 / 6.0, 60, 10_000, seed);
        let res = price_american_put(&LsmcJob::new(gbm, 48.0, lambda))?;
        out.push(Check::new("T9", format!("λ={lambda} price (seed {seed})"), format!("{reference}")).result(
            format!("{:.4} ± {:.4}", res.price, res.std_error),
            "3·std_error",
            (res.price - reference).abs() <= 3.0 * res.std_error,
        ));
        out.push(Check::new("T9", format!("λ={lambda} price ≥ K - S0"), "10").result(
            format!("{:.4}", res.price),
            "≥ 10",
            res.price >= 10.0,
        ));
        out.push(Check::new("T9", format!("λ={lambda} American ≥ European"), "-").result(
            format!("{:.4} vs {:.4}", res.price, res.european),
            "American ≥ European",
            res.price >= res.european,
        ));
    }
    Ok(out)
}

fn table10() -> CliResult<Vec<Check>> {
    let y = function("population")?;
    let data = DataSet::from_fn(linspace(0.0, 1.0, 11), |x| y.eval(x))?;
    let target = y.eval(0.55);
    let mut out = Vec::new();
    for (path, projection) in [("non-orthogonal", false), ("orthogonal", true)] {
        for n in 2..=6 {
            let ae = |lambda: f64| -> CliResult<f64> {
                let fit = if projection {
                    fit_discrete_projection(&data, lambda, n)?
                } else {
                    fit_discrete_normal(&data, lambda, n)?
                };
                Ok((fit.predict(0.55)? - target).abs())
            };
            let best = ae(builtin::POPULATION_ORDER)?;
            let others = [ae(0.5)?, ae(1.0)?, ae(1.5)?];
            out.push(Check::new("T10", format!("{path} n={n} A.E.(0.55)"), "λ=1.39 best").result(
                format!("λ=1.39 {best:.2e}; λ=0.5/1/1.5 {:.2e}/{:.2e}/{:.2e}", others[0], others[1], others[2]),
                "≥ 10³ gap",
                others.iter().all(|&o| best * 1e3 <= o),
            ));
        }
    }
    Ok(out)
}

pub fn checks(table: TableId, qualitative: bool, seed: u64) -> CliResult<Vec<Check>> {
    Ok(match table {
        TableId::T1 => table1()?,
        TableId::T2 => table2(qualitative, seed)?,
        TableId::T4 => table4()?,
        TableId::T6 => table6()?,
        TableId::T7 => table7(seed)?,
        TableId::T8 => table8()?,
        TableId::T9 => table9(seed)?,
        TableId::T10 => table10()?,
        TableId::All => {
            let mut all = Vec::new();
            for id in [TableId::T1, TableId::T2, TableId::T4, TableId::T6, TableId::T8, TableId::T9, TableId::T10] {
                all.extend(checks(id, qualitative, seed)?);
            }
            if qualitative {
                all.extend(table7(seed)?);
            }
            all
        }
    })
}

/// Prints the report; returns whether every check passed.
pub fn cmd_reproduce(a: &ReproduceArgs) -> CliResult<bool> {
    if a.table == TableId::T7 && !a.qualitative {
        return Err(crate::error::CliError::Input(
            "T7 has only noisy rows and example data; run it with --qualitative".into(),
        ));
    }
    let checks = checks(a.table, a.qualitative, a.seed)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed", checks.len());
    if let Some(path) = &a.out {
        let doc = json!({
            "job": "reproduce",
            "params": { "table": format!("{:?}", a.table), "qualitative": a.qualitative, "seed": a.seed },
            "coeffs": null,
            "error": null,
            "cond": null,
            "predictions": checks,
            "diagnostics": { "passed": passed, "failed": checks.len() - passed },
        });
        emit(Some(path), &to_json(&doc))?;
    }
    Ok(passed == checks.len())
}
