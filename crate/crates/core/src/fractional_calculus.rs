//! Caputo derivatives of generalized fractional polynomials and a
//! residual least-squares solver for linear multi-term fractional equations
//! `Σ c_m D^(α_m) y + r·y = f` on `[0, b]` with `y(0) = y0`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fractional_poly::{check_lambda, frac_pow, muntz_legendre_coeffs, FractionalPolynomial};
use crate::least_squares::{BasisDescriptor, FitDomain, FitMethod, FitResult};
use crate::quadrature::{gauss_jacobi, QuadratureRule, MAX_POINTS};
use crate::special_functions::gamma;

/// Exponents closer than this (relative) are merged into one term.
const EXPONENT_MERGE_TOL: f64 = 1e-12;

/// Largest substitution power tried when looking for a common exponent grid.
pub const MAX_SUBSTITUTION_POWER: u32 = 64;

/// Size of the fallback rule when exponents share no common grid.
pub const FALLBACK_POINTS: usize = 128;

/// Largest basis size accepted by [`solve_fde`].
pub const MAX_FDE_UNKNOWNS: usize = 15;

fn same_exponent(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXPONENT_MERGE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `Σ_j c_j x^(ν_j)` with distinct exponents `ν_j > -1`, kept sorted by exponent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FracFunction {
    /// `(coefficient, exponent)` pairs.
    terms: Vec<(f64, f64)>,
}

impl FracFunction {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(c, e)) = terms.iter().find(|(c, e)| !(c.is_finite() && e.is_finite() && *e > -1.0)) {
            return Err(domain(
                "frac_function",
                format!("need finite coefficients and exponents above -1, got {c} x^{e}"),
            ));
        }
        Ok(Self::merged(terms))
    }

    fn merged(mut terms: Vec<(f64, f64)>) -> Self {
        terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
        for (c, e) in terms {
            match out.last_mut() {
                Some(last) if same_exponent(last.1, e) => last.0 += c,
                _ => out.push((c, e)),
            }
        }
        out.retain(|(c, _)| *c != 0.0);
        Self { terms: out }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::merged(vec![(c, 0.0)])
    }

    pub fn monomial(coeff: f64, exponent: f64) -> Result<Self> {
        Self::new(vec![(coeff, exponent)])
    }

    pub fn from_fractional_polynomial(p: &FractionalPolynomial) -> Self {
        let lambda = p.lambda();
        Self::merged(p.coeffs().iter().enumerate().map(|(i, &c)| (c, i as f64 * lambda)).collect())
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest exponent present, if any.
    pub fn min_exponent(&self) -> Option<f64> {
        self.terms.first().map(|t| t.1)
    }

    /// Value at `x = 0` of the constant term; terms with positive exponents vanish there.
    pub fn value_at_zero(&self) -> f64 {
        self.terms
            .iter()
            .find(|(_, e)| *e == 0.0)
            .map_or(0.0, |(c, _)| *c)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("frac_function_eval", format!("x must be non-negative, got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * frac_pow(x, e)).sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::merged(self.terms.iter().map(|&(c, e)| (c * factor, e)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::merged(self.terms.iter().chain(&other.terms).copied().collect())
    }

    /// `Σ ws[j] · fs[j]` with like exponents combined.
    pub fn linear_combine(fs: &[FracFunction], ws: &[f64]) -> Result<Self> {
        if fs.len() != ws.len() {
            return Err(Error::Invariant(format!("{} functions but {} weights", fs.len(), ws.len())));
        }
        Ok(Self::merged(
            fs.iter()
                .zip(ws)
                .flat_map(|(f, &w)| f.terms.iter().map(move |&(c, e)| (c * w, e)))
                .collect(),
        ))
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain("caputo_derivative", format!("order must lie in (0, 1), got {alpha}")))
    }
}

/// Caputo derivative of order `α ∈ (0, 1)` with lower limit 0, by the power
/// rule `D^α x^ν = Γ(ν+1)/Γ(ν+1-α) x^(ν-α)`; constants map to zero.
pub fn caputo_derivative(p: &FracFunction, alpha: f64) -> Result<FracFunction> {
    check_order(alpha)?;
    let mut terms = Vec::with_capacity(p.terms.len());
    for &(c, nu) in &p.terms {
        if nu == 0.0 {
            continue;
        }
        if nu < 0.0 {
            return Err(domain(
                "caputo_derivative",
                format!("exponent {nu} has a non-integrable derivative at 0"),
            ));
        }
        terms.push((c * gamma(nu + 1.0)? / gamma(nu + 1.0 - alpha)?, nu - alpha));
    }
    Ok(FracFunction::merged(terms))
}

/// Right-hand side of a fractional equation.
#[derive(Clone)]
pub enum Rhs {
    Frac(FracFunction),
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Frac(p) => write!(f, "Frac({:?})", p.terms()),
            Rhs::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl Rhs {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Rhs::Frac(p) => p.eval_unchecked(x),
            Rhs::Callable(f) => f(x),
        }
    }
}

/// `Σ_m c_m D^(α_m) y + reaction · y = rhs` on `[0, b]` with `y(0) = initial_value`.
#[derive(Debug, Clone)]
pub struct FdeProblem {
    terms: Vec<(f64, f64)>,
    reaction: f64,
    rhs: Rhs,
    initial_value: f64,
    b: f64,
}

impl FdeProblem {
    /// `terms` holds `(order, coefficient)` pairs.
    pub fn new(terms: Vec<(f64, f64)>, reaction: f64, rhs: Rhs, initial_value: f64, b: f64) -> Result<Self> {
        for &(alpha, coeff) in &terms {
            check_order(alpha)?;
            if !coeff.is_finite() {
                return Err(domain("fde", format!("coefficient must be finite, got {coeff}")));
            }
        }
        if !(reaction.is_finite() && initial_value.is_finite()) {
            return Err(domain("fde", "reaction and initial value must be finite"));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(domain("fde", format!("interval end must be positive, got {b}")));
        }
        Ok(Self {
            terms,
            reaction,
            rhs,
            initial_value,
            b,
        })
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn reaction(&self) -> f64 {
        self.reaction
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// `Σ_m c_m D^(α_m) p + reaction · p`.
pub fn apply_operator(prob: &FdeProblem, p: &FracFunction) -> Result<FracFunction> {
    let mut parts = Vec::with_capacity(prob.terms.len() + 1);
    let mut weights = Vec::with_capacity(prob.terms.len() + 1);
    for &(alpha, coeff) in &prob.terms {
        parts.push(caputo_derivative(p, alpha)?);
        weights.push(coeff);
    }
    parts.push(p.clone());
    weights.push(prob.reaction);
    FracFunction::linear_combine(&parts, &weights)
}

/// Trial space used by [`solve_fde`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdeBasis {
    /// `x^(iλ)`.
    Monomial,
    /// `L_i(x/b; λ)`.
    MuntzLegendre,
}

/// How the residual integral is discretised.
#[derive(Debug, Clone, PartialEq)]
pub enum FdeQuadrature {
    /// Exact substitution rule when exponents share a grid, else the fallback rule.
    Auto,
    /// A caller-supplied rule on `[0, b]`.
    Rule(QuadratureRule),
}

/// Record of the rule actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadratureUsed {
    /// Gauss-Jacobi in `u` with `x = b u^q`, exact for the squared residual.
    Substitution { power: u32, points: usize, beta_left: f64 },
    /// Gauss-Jacobi in `x` absorbing `x^(2 e_min)`.
    Fallback { points: usize, beta_left: f64 },
    Supplied { points: usize },
}

/// Output of [`solve_fde`].
#[derive(Debug, Clone)]
pub struct FdeSolution {
    /// Coefficients, `E^C` and condition estimate of `G^T W G`.
    pub fit: FitResult,
    /// The approximate solution in generalized monomial form.
    pub solution: FracFunction,
    pub quadrature: QuadratureUsed,
    /// Numerical rank of the weighted design matrix.
    pub rank: usize,
}

/// Smallest `q ≤ 64` making every `q·e` an integer, if any.
fn common_power(exponents: &[f64]) -> Option<u32> {
    (1..=MAX_SUBSTITUTION_POWER).find(|&q| {
        exponents.iter().all(|&e| {
            let s = q as f64 * e;
            (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)
        })
    })
}

/// Rows of the `√W`-weighted least-squares problem.
enum Sampler {
    Substitution {
        b: f64,
        q: u32,
        dmin: i64,
        us: Vec<f64>,
        scales: Vec<f64>,
    },
    Points {
        xs: Vec<f64>,
        scales: Vec<f64>,
    },
}

impl Sampler {
    fn len(&self) -> usize {
        match self {
            Sampler::Substitution { us, .. } => us.len(),
            Sampler::Points { xs, .. } => xs.len(),
        }
    }

    fn x(&self, k: usize) -> f64 {
        match self {
            Sampler::Substitution { b, q, us, .. } => b * us[k].powi(*q as i32),
            Sampler::Points { xs, .. } => xs[k],
        }
    }

    /// `√W_k · F(x_k)`; on the substitution grid only non-negative powers of `u` appear.
    fn frac(&self, k: usize, f: &FracFunction) -> f64 {
        match self {
            Sampler::Substitution {
                b,
                q,
                dmin,
                us,
                scales,
            } => {
                let u = us[k];
                let sum: f64 = f
                    .terms
                    .iter()
                    .map(|&(c, e)| {
                        let d = (*q as f64 * e).round() as i64 - dmin;
                        c * frac_pow(*b, e) * u.powi(d as i32)
                    })
                    .sum();
                scales[k] * sum
            }
            Sampler::Points { xs, scales } => scales[k] * f.eval_unchecked(xs[k]),
        }
    }

    fn rhs(&self, k: usize, rhs: &Rhs, extra: f64) -> f64 {
        match (self, rhs) {
            (_, Rhs::Frac(p)) => self.frac(k, &p.add(&FracFunction::constant(extra))),
            (Sampler::Substitution { dmin, us, scales, .. }, Rhs::Callable(f)) => {
                scales[k] * us[k].powi(-*dmin as i32) * (f(self.x(k)) + extra)
            }
            (Sampler::Points { xs, scales }, Rhs::Callable(f)) => scales[k] * (f(xs[k]) + extra),
        }
    }
}

fn build_sampler(
    prob: &FdeProblem,
    columns: &[FracFunction],
    quadrature: &FdeQuadrature,
) -> Result<(Sampler, QuadratureUsed)> {
    let b = prob.b;
    if let FdeQuadrature::Rule(rule) = quadrature {
        if rule.lo() != 0.0 || rule.hi() != b {
            return Err(Error::Usage(format!(
                "supplied rule covers [{}, {}] but the problem lives on [0, {b}]",
                rule.lo(),
                rule.hi()
            )));
        }
        let sampler = Sampler::Points {
            xs: rule.nodes().to_vec(),
            scales: rule.weights().iter().map(|w| w.sqrt()).collect(),
        };
        return Ok((sampler, QuadratureUsed::Supplied { points: rule.len() }));
    }

    let mut exponents: Vec<f64> = columns.iter().flat_map(|c| c.terms.iter().map(|t| t.1)).collect();
    exponents.push(0.0);
    let callable = match &prob.rhs {
        Rhs::Frac(p) => {
            exponents.extend(p.terms.iter().map(|t| t.1));
            false
        }
        Rhs::Callable(_) => true,
    };
    let emin = exponents.iter().copied().fold(f64::INFINITY, f64::min);
    if 2.0 * emin <= -1.0 {
        return Err(domain(
            "solve_fde",
            format!("residual term x^{emin} is not square integrable"),
        ));
    }

    if let Some(q) = common_power(&exponents) {
        let degrees: Vec<i64> = exponents.iter().map(|&e| (q as f64 * e).round() as i64).collect();
        let dmin = *degrees.iter().min().unwrap_or(&0);
        let dmax = *degrees.iter().max().unwrap_or(&0);
        let floor = if callable { 64 } else { 8 };
        let m = ((dmax - dmin + 1) as usize).max(floor).max(columns.len());
        if m <= MAX_POINTS {
            let beta_left = (2 * dmin + q as i64 - 1) as f64;
            let rule = gauss_jacobi(m, beta_left, 0.0, 0.0, 1.0)?;
            let qf = q as f64;
            let scales = rule.weights().iter().map(|w| (w * b * qf).sqrt()).collect();
            let sampler = Sampler::Substitution {
                b,
                q,
                dmin,
                us: rule.nodes().to_vec(),
                scales,
            };
            return Ok((
                sampler,
                QuadratureUsed::Substitution {
                    power: q,
                    points: m,
                    beta_left,
                },
            ));
        }
    }

    let beta_left = 2.0 * emin;
    let rule = gauss_jacobi(FALLBACK_POINTS, beta_left, 0.0, 0.0, b)?;
    let scales = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&x, &w)| w.sqrt() * frac_pow(x, -emin))
        .collect();
    let sampler = Sampler::Points {
        xs: rule.nodes().to_vec(),
        scales,
    };
    Ok((
        sampler,
        QuadratureUsed::Fallback {
            points: FALLBACK_POINTS,
            beta_left,
        },
    ))
}

/// Minimizes `E^C(a) = ∫_0^b R(x; a)² dx` over `y = Σ a_i φ_i ∈ M_n^λ`, where
/// `R = Σ_m c_m D^(α_m) y + r y - f + (y(0) - y0)`.
///
/// The initial-condition mismatch enters the residual as a constant, which
/// pins the direction the Caputo operator annihilates. The weighted
/// least-squares system is solved by Householder QR, or by the SVD
/// minimum-norm solution when its columns are linearly dependent.
pub fn solve_fde(
    prob: &FdeProblem,
    lambda: f64,
    n: usize,
    basis: FdeBasis,
    quadrature: &FdeQuadrature,
) -> Result<FdeSolution> {
    check_lambda(lambda)?;
    if n + 1 > MAX_FDE_UNKNOWNS {
        return Err(domain(
            "solve_fde",
            format!("at most {MAX_FDE_UNKNOWNS} unknowns supported, got {}", n + 1),
        ));
    }
    let b = prob.b;
    let phis: Vec<FracFunction> = (0..=n)
        .map(|i| match basis {
            FdeBasis::Monomial => FracFunction::monomial(1.0, i as f64 * lambda),
            FdeBasis::MuntzLegendre => {
                let p = muntz_legendre_coeffs(i, lambda)?;
                let shrink = b.powf(-lambda);
                Ok(FracFunction::merged(
                    p.coeffs()
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| (c * shrink.powi(k as i32), k as f64 * lambda))
                        .collect(),
                ))
            }
        })
        .collect::<Result<_>>()?;
    let columns: Vec<FracFunction> = phis
        .iter()
        .map(|phi| Ok(apply_operator(prob, phi)?.add(&FracFunction::constant(phi.value_at_zero()))))
        .collect::<Result<_>>()?;

    let (sampler, used) = build_sampler(prob, &columns, quadrature)?;
    let rows = sampler.len();
    if rows < n + 1 {
        return Err(Error::RankDeficient {
            points: rows,
            unknowns: n + 1,
        });
    }
    let design = DMatrix::from_fn(rows, n + 1, |k, i| sampler.frac(k, &columns[i]));
    let target = DVector::from_fn(rows, |k, _| sampler.rhs(k, &prob.rhs, prob.initial_value));
    if let Some(k) = (0..rows).find(|&k| !target[k].is_finite()) {
        return Err(Error::Evaluation {
            x: sampler.x(k),
            value: target[k],
        });
    }

    let col_norms: Vec<f64> = (0..=n).map(|i| design.column(i).norm()).collect();
    let largest = col_norms.iter().copied().fold(0.0, f64::max);
    if let Some(i) = (0..=n).find(|&i| col_norms[i] <= f64::EPSILON * largest) {
        return Err(Error::Degenerate {
            index: i,
            value: col_norms[i] * col_norms[i],
        });
    }

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rows as f64 * f64::EPSILON * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };

    let coeffs = if rank == n + 1 {
        let qr = design.clone().qr();
        let qt_h = qr.q().transpose() * &target;
        qr.r().solve_upper_triangular(&qt_h).ok_or(Error::Conditioning { cond })?
    } else {
        // Dependent columns: take the minimizer of least norm in x^(iλ)
        // coefficients, so every trial basis yields the same solution.
        let t_inv = trial_matrix(&phis, lambda, n)
            .try_inverse()
            .ok_or(Error::Conditioning { cond })?;
        let mono = &design * &t_inv;
        let mono_svd = mono.svd(true, true);
        let mono_tol = rows as f64 * f64::EPSILON * mono_svd.singular_values.max();
        let c = mono_svd.solve(&target, mono_tol).map_err(|_| Error::Conditioning { cond })?;
        t_inv * c
    };
    let coeffs: Vec<f64> = coeffs.iter().copied().collect();

    let error = match &prob.rhs {
        Rhs::Frac(f) => {
            let residual = FracFunction::linear_combine(&columns, &coeffs)?
                .add(&f.scale(-1.0))
                .add(&FracFunction::constant(-prob.initial_value));
            (0..rows).map(|k| sampler.frac(k, &residual).powi(2)).sum()
        }
        Rhs::Callable(_) => {
            let fitted = &design * DVector::from_column_slice(&coeffs);
            (fitted - &target).norm_squared()
        }
    };

    let solution = FracFunction::linear_combine(&phis, &coeffs)?;
    let descriptor = match basis {
        FdeBasis::Monomial => BasisDescriptor::Monomial { lambda },
        FdeBasis::MuntzLegendre => BasisDescriptor::MuntzLegendre { lambda, scale: b },
    };
    Ok(FdeSolution {
        fit: FitResult {
            basis: descriptor,
            coeffs,
            error,
            cond,
            domain: FitDomain::Interval { lo: 0.0, hi: b },
            method: FitMethod::FdeResidual,
        },
        solution,
        quadrature: used,
        rank,
    })
}

/// Column `i` holds the `x^(kλ)` coefficients of trial function `i`.
fn trial_matrix(phis: &[FracFunction], lambda: f64, n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n + 1, n + 1);
    for (i, phi) in phis.iter().enumerate() {
        for &(c, e) in phi.terms() {
            let k = (e / lambda).round() as usize;
            if k <= n {
                t[(k, i)] = c;
            }
        }
    }
    t
}

/// `|exact(x) - fit(x)|`.
pub fn fde_abs_error(fit: &FitResult, exact: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    Ok((exact(x) - fit.predict(x)?).abs())
}
