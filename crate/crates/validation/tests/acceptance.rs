//! Acceptance suite. Prints one PASS/FAIL line per check and exits non-zero
//! if any check fails. Run with `cargo test -p fracfit-validation --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;

use fracfit::fractional_calculus::{
    apply_operator, caputo_derivative, fde_abs_error, solve_fde, FdeBasis, FdeProblem, FdeQuadrature, FracFunction,
    Rhs,
};
use fracfit::fractional_poly::{muntz_legendre_coeffs, muntz_legendre_eval};
use fracfit::least_squares::{
    add_noise, fit_continuous_normal, fit_discrete_normal, fit_discrete_projection, fit_projection,
    normal_matrix_discrete, DataSet, FitMethod, Target,
};
use fracfit::option_pricing::{price_american_put, GbmConfig, LsmcJob};
use fracfit::orthogonal_basis::{build_continuous, build_discrete, Measure, WeightSpec};
use fracfit::quadrature::{gauss_jacobi_fractional, gauss_legendre};
use fracfit::special_functions::{gamma, ln_gamma, mittag_leffler};
use nalgebra::{DMatrix, DVector};

struct Report {
    passed: usize,
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        let status = if ok { "PASS" } else { "FAIL" };
        println!("{status} [{id}] {detail}");
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO [{id}] {detail}");
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn continuous_table(r: &mut Report) {
    let y = |x: f64| x.powf(0.75) + x.powf(1.5);
    // u = x^0.25 turns every integrand exponent into an integer power
    let rule = gauss_jacobi_fractional(64, 0.25, 0.0, 0.0, 0.0, 1.0).unwrap();
    let rows: [(f64, [f64; 3], f64, Option<f64>); 3] = [
        (0.75, [0.0, 1.0, 1.0], 1e-8, None),
        (1.0, [0.0329, 1.7039, 0.2597], 5e-4, Some(1.40e-5)),
        (1.5, [0.1388, 2.5269, -0.7126], 5e-4, Some(8.78e-4)),
    ];
    for (lambda, expected, tol, err) in rows {
        let fit = fit_continuous_normal(&y, 0.0, 1.0, lambda, 2, &rule).unwrap();
        let diff = max_abs_diff(&fit.coeffs, &expected);
        r.check(
            "1",
            diff <= tol,
            format!("continuous fit λ={lambda}: coeffs {:?} vs {expected:?} (max diff {diff:.2e}, tol {tol:.0e})", fit.coeffs),
        );
        match err {
            None => r.check("1", fit.error <= 1e-18, format!("continuous fit λ={lambda}: E^C = {:.3e} ≤ 1e-18", fit.error)),
            Some(target) => r.check(
                "1",
                within_rel(fit.error, target, 0.10),
                format!("continuous fit λ={lambda}: E^C = {:.4e} vs {target:.2e} ± 10%", fit.error),
            ),
        }
    }
}

fn discrete_table(r: &mut Report) {
    let data = DataSet::from_fn(linspace(10.0, 20.0, 20), |x| x.powf(1.5)).unwrap();
    let fit = fit_discrete_normal(&data, 1.5, 1).unwrap();
    let diff = max_abs_diff(&fit.coeffs, &[0.0, 1.0]);
    r.check("2", diff <= 1e-8, format!("x^1.5 on 20 points, λ=1.5: coeffs {:?} (max diff {diff:.2e}, tol 1e-8)", fit.coeffs));
    r.check("2", fit.error <= 1e-18, format!("x^1.5 on 20 points, λ=1.5: E^D = {:.3e} ≤ 1e-18", fit.error));

    let coarse = DataSet::from_fn(linspace(10.0, 20.0, 11), |x| x.powf(1.5)).unwrap();
    for (lambda, target) in [(1.25, 2.02), (1.0, 8.17)] {
        let fit = fit_discrete_normal(&coarse, lambda, 1).unwrap();
        r.check(
            "2",
            within_rel(fit.error, target, 0.10),
            format!("x^1.5 on 11 points, λ={lambda}: E^D = {:.4} vs {target} ± 10%", fit.error),
        );
    }
    for (pct, seed) in [(5.0, 5_u64), (10.0, 10)] {
        let noisy = add_noise(&data, pct, seed).unwrap();
        let fit = fit_discrete_normal(&noisy, 1.5, 1).unwrap();
        r.info("2", format!("{pct}% noise (seed {seed}), λ=1.5: E^D = {:.3e} (qualitative only)", fit.error));
    }
}

fn singular_weight_basis(r: &mut Report) {
    let weight = WeightSpec::Jacobi {
        beta_left: 0.0,
        beta_right: -0.5,
    };
    let rule = weight.rule(0.5, 0.0, 1.0, 64).unwrap();
    let basis = build_continuous(&weight, 0.5, 1, &rule).unwrap();
    let b1 = basis.b()[0];
    r.check("3", (b1 - PI / 4.0).abs() <= 1e-9, format!("weight (1-x)^-0.5, λ=0.5: B_1 = {b1:.15} vs π/4 (tol 1e-9)"));
    let measure = Measure::continuous(&weight, &rule).unwrap();
    let y = |x: f64| x.sqrt() - PI / 4.0;
    let fit = fit_projection(Target::Function(&y), &basis, &measure).unwrap();
    let diff = max_abs_diff(&fit.coeffs, &[0.0, 1.0]);
    r.check(
        "3",
        diff <= 1e-9 && fit.method == FitMethod::Projection,
        format!("projection of x^0.5 - π/4: coeffs {:?} via {:?} (max diff {diff:.2e}, tol 1e-9)", fit.coeffs, fit.method),
    );
}

fn linear_solution_problem() -> FdeProblem {
    let rhs = FracFunction::monomial(1.0 / gamma(1.5).unwrap(), 0.5).unwrap();
    FdeProblem::new(vec![(0.5, 1.0)], 0.0, Rhs::Frac(rhs), 0.0, 1.0).unwrap()
}

fn linear_solution_table(r: &mut Report) {
    let prob = linear_solution_problem();
    let sol = solve_fde(&prob, 0.5, 2, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto).unwrap();
    r.check("4", sol.fit.error <= 1e-18, format!("α=0.5, λ=0.5, n=2: E^C = {:.3e} ≤ 1e-18", sol.fit.error));
    let worst = linspace(0.0, 1.0, 101)
        .into_iter()
        .map(|x| (sol.solution.eval(x).unwrap() - x).abs())
        .fold(0.0, f64::max);
    r.check("4", worst <= 1e-8, format!("α=0.5, λ=0.5, n=2: max |ŷ(x) - x| on [0,1] = {worst:.3e} ≤ 1e-8"));
    for (lambda, target) in [(0.75, 6.11e-4), (1.0, 5.19e-4), (1.25, 2.70e-3), (1.5, 8.60e-3)] {
        let sol = solve_fde(&prob, lambda, 2, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto).unwrap();
        r.check(
            "4",
            within_rel(sol.fit.error, target, 0.15),
            format!("α=0.5, λ={lambda}, n=2: E^C = {:.4e} vs {target:.2e} ± 15%", sol.fit.error),
        );
    }
}

fn two_term_problem() -> FdeProblem {
    let exact = FracFunction::new(vec![(1.0, 3.5), (1.0, 4.0)]).unwrap();
    let homogeneous =
        FdeProblem::new(vec![(0.5, 1.0), (0.25, 1.0)], 1.0, Rhs::Frac(FracFunction::zero()), 0.0, 1.0).unwrap();
    let rhs = apply_operator(&homogeneous, &exact).unwrap();
    FdeProblem::new(vec![(0.5, 1.0), (0.25, 1.0)], 1.0, Rhs::Frac(rhs), 0.0, 1.0).unwrap()
}

fn two_term_table(r: &mut Report) {
    let prob = two_term_problem();
    let exact = |x: f64| x.powf(3.5) + x.powi(4);
    let sol = solve_fde(&prob, 0.5, 8, FdeBasis::Monomial, &FdeQuadrature::Auto).unwrap();
    let ae = fde_abs_error(&sol.fit, &exact, 1.0).unwrap();
    r.check("5", sol.fit.error <= 1e-30, format!("two-term, λ=0.5, n=8: E^C = {:.3e} ≤ 1e-30", sol.fit.error));
    r.check("5", ae <= 1e-12, format!("two-term, λ=0.5, n=8: |y(1) - ŷ(1)| = {ae:.3e} ≤ 1e-12"));

    let mut errors = Vec::new();
    let mut ae6 = f64::NAN;
    for n in [2, 4, 6, 8, 10] {
        let sol = solve_fde(&prob, 0.75, n, FdeBasis::MuntzLegendre, &FdeQuadrature::Auto).unwrap();
        if n == 6 {
            ae6 = fde_abs_error(&sol.fit, &exact, 1.0).unwrap();
        }
        errors.push(sol.fit.error);
    }
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    r.check("5", decreasing, format!("two-term, λ=0.75: E^C over n=2,4,6,8,10 strictly decreasing [{}]", shown.join(", ")));
    let target = 8.81e-6;
    r.check(
        "5",
        ae6 <= 5.0 * target && ae6 >= target / 5.0,
        format!("two-term, λ=0.75, n=6: A.E.(1) = {ae6:.3e} vs {target:.2e} within a factor of 5"),
    );
}

fn sales_table(r: &mut Report) {
    // years coded from 0; see README for the coding choice
    let data = DataSet::new(vec![0.0, 1.0, 2.0, 3.0], vec![10_000.0, 21_000.0, 50_000.0, 70_000.0]).unwrap();
    for (lambda, expected) in [(0.5, 69692.0), (0.75, 80546.0), (1.0, 90000.0), (1.25, 98307.0), (1.5, 105870.0)] {
        let fit = fit_discrete_normal(&data, lambda, 1).unwrap();
        let predicted = fit.predict(4.0).unwrap();
        r.check(
            "6",
            (predicted.round() - expected).abs() <= 1.0,
            format!("sales, λ={lambda}: prediction {:.0} vs {expected:.0} (±1)", predicted.round()),
        );
    }
}

fn lsmc_table(r: &mut Report) {
    for (lambda, expected) in [(0.25, 10.743), (0.5, 10.730), (0.75, 10.790), (1.0, 10.714)] {
        let gbm = GbmConfig::new(38.0, 0.05, 0.71, 1.0 / 6.0, 60, 10_000, 20240601);
        let res = price_american_put(&LsmcJob::new(gbm, 48.0, lambda)).unwrap();
        r.check(
            "7",
            (res.price - expected).abs() <= 3.0 * res.std_error,
            format!(
                "LSMC λ={lambda}: price {:.4} vs {expected} within 3·SE = {:.4}",
                res.price,
                3.0 * res.std_error
            ),
        );
        r.check("7", res.price >= 10.0, format!("LSMC λ={lambda}: price {:.4} ≥ K - S0 = 10", res.price));
        r.check(
            "7",
            res.price >= res.european,
            format!("LSMC λ={lambda}: American {:.4} ≥ European {:.4} on shared paths", res.price, res.european),
        );
    }
}

fn population_table(r: &mut Report) {
    let exact = |x: f64| mittag_leffler(1.39, 0.013502 * x.powf(1.39)).unwrap();
    let data = DataSet::from_fn(linspace(0.0, 1.0, 11), exact).unwrap();
    let y = exact(0.55);
    for (path, projection) in [("normal equations", false), ("orthogonal projection", true)] {
        for n in 2..=6 {
            let ae = |lambda: f64| {
                let fit = if projection {
                    fit_discrete_projection(&data, lambda, n).unwrap()
                } else {
                    fit_discrete_normal(&data, lambda, n).unwrap()
                };
                (fit.predict(0.55).unwrap() - y).abs()
            };
            let best = ae(1.39);
            let others: Vec<f64> = [0.5, 1.0, 1.5].iter().map(|&l| ae(l)).collect();
            let ok = others.iter().all(|&o| best * 1e3 <= o);
            r.check(
                "8",
                ok,
                format!(
                    "population, {path}, n={n}: A.E.(0.55) λ=1.39 {best:.2e} vs λ=0.5/1/1.5 {:.2e}/{:.2e}/{:.2e} (≥ 10³ gap)",
                    others[0], others[1], others[2]
                ),
            );
        }
    }
}

fn muntz_legendre_properties(r: &mut Report) {
    let mut worst_orth: f64 = 0.0;
    let mut worst_direct: f64 = 0.0;
    for lambda in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        let rule = gauss_jacobi_fractional(64, lambda, 0.0, 0.0, 0.0, 1.0).unwrap();
        for n in 0..=8 {
            let ln = |x: f64| muntz_legendre_eval(n, lambda, x).unwrap();
            for m in 0..=n {
                let ip = rule.integrate(|x| ln(x) * muntz_legendre_eval(m, lambda, x).unwrap()).unwrap();
                let expected = if n == m { 1.0 / (2.0 * n as f64 * lambda + 1.0) } else { 0.0 };
                worst_orth = worst_orth.max((ip - expected).abs());
            }
            let direct = muntz_legendre_coeffs(n, lambda).unwrap();
            for x in linspace(0.0, 1.0, 41) {
                worst_direct = worst_direct.max((direct.eval(x).unwrap() - ln(x)).abs());
            }
        }
    }
    r.check("9", worst_orth <= 1e-10, format!("Müntz-Legendre orthogonality, n,m ≤ 8: max error {worst_orth:.2e} ≤ 1e-10"));
    r.check(
        "9",
        worst_direct <= 1e-9,
        format!("Müntz-Legendre recurrence vs explicit coefficients, n ≤ 8: max diff {worst_direct:.2e} ≤ 1e-9"),
    );
}

/// Monic Gram-Schmidt on `x^(iλ)` from a Gram matrix of monomial inner products.
fn gram_schmidt(gram: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let size = gram.nrows();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let (a, b) = (DVector::from_column_slice(a), DVector::from_column_slice(b));
        (a.transpose() * gram * b)[(0, 0)]
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..size {
        let mut v = vec![0.0; size];
        v[i] = 1.0;
        let mut next = v.clone();
        for q in &out {
            let factor = ip(&v, q) / ip(q, q);
            next.iter_mut().zip(q).for_each(|(a, b)| *a -= factor * b);
        }
        out.push(next);
    }
    out
}

fn compare_with_gram_schmidt(polys: &[fracfit::fractional_poly::FractionalPolynomial], gram: &DMatrix<f64>) -> f64 {
    let reference = gram_schmidt(gram);
    let mut worst: f64 = 0.0;
    for (p, q) in polys.iter().zip(&reference) {
        for (a, b) in p.coeffs().iter().zip(q) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    worst
}

fn gram_schmidt_equivalence(r: &mut Report) {
    let (lambda, n) = (0.5, 4);
    let weight = WeightSpec::Jacobi {
        beta_left: 0.0,
        beta_right: -0.5,
    };
    let rule = weight.rule(lambda, 0.0, 1.0, 64).unwrap();
    let basis = build_continuous(&weight, lambda, n, &rule).unwrap();
    // ∫_0^1 x^s (1-x)^-0.5 dx = B(s+1, 1/2)
    let beta = |s: f64| (ln_gamma(s + 1.0).unwrap() + ln_gamma(0.5).unwrap() - ln_gamma(s + 1.5).unwrap()).exp();
    let gram = DMatrix::from_fn(n + 1, n + 1, |i, j| beta((i + j) as f64 * lambda));
    let worst = compare_with_gram_schmidt(basis.polys(), &gram);
    r.check("9", worst <= 1e-8, format!("continuous recurrence basis vs Gram-Schmidt (weight (1-x)^-0.5): {worst:.2e} ≤ 1e-8"));

    let (lambda, n) = (0.75, 5);
    let points = linspace(0.0, 1.0, 15);
    let weights: Vec<f64> = points.iter().map(|x| 1.0 + x).collect();
    let basis = build_discrete(Some(&weights), &points, lambda, n).unwrap();
    let gram = normal_matrix_discrete(&points, Some(&weights), lambda, n);
    let worst = compare_with_gram_schmidt(basis.polys(), &gram);
    r.check("9", worst <= 1e-8, format!("discrete recurrence basis vs Gram-Schmidt (15 weighted points): {worst:.2e} ≤ 1e-8"));
}

fn projection_matches_normal(r: &mut Report) {
    let data = DataSet::from_fn(linspace(0.0, 2.0, 30), |x| (2.0 * x).sin() + x.powf(0.3)).unwrap();
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 0.75, 1.0, 1.5] {
        for n in 1..=5 {
            let normal = fit_discrete_normal(&data, lambda, n).unwrap();
            let proj = fit_discrete_projection(&data, lambda, n).unwrap();
            let a = normal.to_fractional_polynomial().unwrap();
            let b = proj.to_fractional_polynomial().unwrap();
            worst = worst.max(max_abs_diff(a.coeffs(), b.coeffs()));
            for &x in data.xs() {
                worst = worst.max((normal.predict(x).unwrap() - proj.predict(x).unwrap()).abs());
            }
        }
    }
    r.check("9", worst <= 1e-8, format!("projection ≡ normal equations (coeffs and fitted values): {worst:.2e} ≤ 1e-8"));
}

fn caputo_against_definition(r: &mut Report) {
    // D^α x^ν(x) = 1/Γ(1-α) ∫_0^x (x-t)^(-α) ν t^(ν-1) dt. With t = x(1 - w^(1/(1-α)))
    // the kernel singularity cancels and plain Gauss-Legendre in w applies.
    let rule = gauss_legendre(256, 0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        for nu in [1.0, 1.5, 2.25, 3.5] {
            let d = caputo_derivative(&FracFunction::monomial(1.0, nu).unwrap(), alpha).unwrap();
            for x in [0.3, 0.7, 1.0] {
                let p = 1.0 / (1.0 - alpha);
                let integral = rule
                    .integrate(|w| {
                        let t = x * (1.0 - w.powf(p));
                        nu * t.powf(nu - 1.0) * x.powf(1.0 - alpha) * p
                    })
                    .unwrap();
                let reference = integral / gamma(1.0 - alpha).unwrap();
                let value = d.eval(x).unwrap();
                worst = worst.max((value - reference).abs() / reference.abs().max(1.0));
            }
        }
    }
    r.check("9", worst <= 1e-6, format!("Caputo power rule vs integral definition: {worst:.2e} ≤ 1e-6"));
}

fn lambda_one_reduction(r: &mut Report) {
    let xs = linspace(0.0, 3.0, 13);
    let mut exact = true;
    for n in 1..=6 {
        let a = normal_matrix_discrete(&xs, None, 1.0, n);
        for i in 0..=n {
            for j in 0..=n {
                let classical: f64 = xs.iter().map(|x| x.powi((i + j) as i32)).sum();
                exact &= a[(i, j)] == classical;
            }
        }
    }
    r.check("9", exact, "λ=1 normal matrix equals classical Σ x^(i+j) entrywise (bitwise), n ≤ 6".into());
}

fn conditioning_growth(r: &mut Report) {
    let xs = linspace(0.0, 1.0, 21);
    let data = DataSet::from_fn(xs.clone(), |x| x.exp() * (3.0 * x).cos()).unwrap();
    let conds: Vec<f64> = (4..=8).map(|n| fit_discrete_normal(&data, 0.5, n).unwrap().cond).collect();
    let ratios: Vec<f64> = conds.windows(2).map(|w| w[1] / w[0]).collect();
    let shown: Vec<String> = ratios.iter().map(|q| format!("{q:.1}")).collect();
    r.check(
        "9",
        ratios.iter().all(|&q| q >= 10.0),
        format!("λ=0.5, 21 points: cond ratio per degree n=4..8 [{}] ≥ 10", shown.join(", ")),
    );

    let mut worst: f64 = 0.0;
    for n in 4..=8 {
        let proj = fit_discrete_projection(&data, 0.5, n).unwrap();
        let design = DMatrix::from_fn(xs.len(), n + 1, |k, i| xs[k].powf(i as f64 * 0.5));
        let target = DVector::from_column_slice(data.ys());
        let svd = design.clone().svd(true, true);
        let coeffs = svd.solve(&target, 1e-15).unwrap();
        let optimal = (&design * coeffs - &target).norm_squared();
        worst = worst.max((proj.error - optimal).abs());
    }
    r.check("9", worst <= 1e-8, format!("λ=0.5 projection residual vs SVD optimum, n=4..8: |ΔE^D| = {worst:.2e} ≤ 1e-8"));
}

fn main() -> ExitCode {
    let mut r = Report {
        passed: 0,
        failed: Vec::new(),
    };
    continuous_table(&mut r);
    discrete_table(&mut r);
    singular_weight_basis(&mut r);
    linear_solution_table(&mut r);
    two_term_table(&mut r);
    sales_table(&mut r);
    lsmc_table(&mut r);
    population_table(&mut r);
    muntz_legendre_properties(&mut r);
    gram_schmidt_equivalence(&mut r);
    projection_matches_normal(&mut r);
    caputo_against_definition(&mut r);
    lambda_one_reduction(&mut r);
    conditioning_growth(&mut r);

    let mut failed_criteria = r.failed.clone();
    failed_criteria.dedup();
    println!(
        "\nacceptance: {} passed, {} failed{}",
        r.passed,
        r.failed.len(),
        if failed_criteria.is_empty() { String::new() } else { format!(" (criteria {})", failed_criteria.join(", ")) }
    );
    if r.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
