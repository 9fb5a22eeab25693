//! Least-squares fitting in `M_n^λ`: normal equations over integrals or data
//! sums, and projection onto weight-orthogonal bases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fractional_poly::{check_lambda, frac_pow, muntz_legendre_values, FractionalPolynomial};
use crate::orthogonal_basis::{build_discrete, recurrence_values, BasisMode, Measure, OrthogonalBasis, WeightSpec};
use crate::quadrature::{frac_moment, QuadratureRule, WeightKind};

/// Largest number of unknowns accepted by the normal-equation fits.
pub const MAX_UNKNOWNS: usize = 20;

/// Sample `(x_k, y_k)` with optional positive weights `W(x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl DataSet {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, None)
    }

    pub fn with_weights(xs: Vec<f64>, ys: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(xs, ys, Some(weights))
    }

    fn build(xs: Vec<f64>, ys: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Invariant(format!(
                "need equally many x and y values (at least one), got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        if let Some(&x) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(domain("dataset", format!("abscissae must be finite and non-negative, got {x}")));
        }
        if let Some(&y) = ys.iter().find(|y| !y.is_finite()) {
            return Err(domain("dataset", format!("ordinates must be finite, got {y}")));
        }
        if let Some(w) = &weights {
            if w.len() != xs.len() {
                return Err(Error::Invariant(format!("{} weights for {} points", w.len(), xs.len())));
            }
            if let Some(&bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(domain("dataset", format!("weights must be positive, got {bad}")));
            }
        }
        Ok(Self { xs, ys, weights })
    }

    /// Samples `f` at the given abscissae.
    pub fn from_fn<F: Fn(f64) -> f64>(xs: Vec<f64>, f: F) -> Result<Self> {
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }
}

/// Basis in which a fit's coefficients are expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisDescriptor {
    /// `x^(iλ)`.
    Monomial { lambda: f64 },
    /// `L_i(x/scale; λ)`.
    MuntzLegendre { lambda: f64, scale: f64 },
    /// Monic recurrence with `b = (B_1..B_n)`, `c = (C_2..C_n)`.
    Orthogonal { lambda: f64, b: Vec<f64>, c: Vec<f64> },
}

impl BasisDescriptor {
    pub fn lambda(&self) -> f64 {
        match self {
            BasisDescriptor::Monomial { lambda }
            | BasisDescriptor::MuntzLegendre { lambda, .. }
            | BasisDescriptor::Orthogonal { lambda, .. } => *lambda,
        }
    }

    pub fn of_basis(basis: &OrthogonalBasis) -> Self {
        BasisDescriptor::Orthogonal {
            lambda: basis.lambda(),
            b: basis.b().to_vec(),
            c: basis.c().to_vec(),
        }
    }

    /// Values of the first `len` basis functions at `x ≥ 0`.
    pub(crate) fn values(&self, len: usize, x: f64) -> Vec<f64> {
        let n = len.saturating_sub(1);
        match self {
            BasisDescriptor::Monomial { lambda } => (0..len).map(|i| frac_pow(x, i as f64 * lambda)).collect(),
            BasisDescriptor::MuntzLegendre { lambda, scale } => muntz_legendre_values(n, *lambda, x / scale),
            BasisDescriptor::Orthogonal { lambda, b, c } => {
                let n = n.min(b.len());
                recurrence_values(*lambda, &b[..n], &c[..n.saturating_sub(1)], x)
            }
        }
    }
}

/// How the coefficients were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    NormalEquations,
    Projection,
    FdeResidual,
}

/// What the error functional was measured over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitDomain {
    Interval { lo: f64, hi: f64 },
    Points { count: usize, lo: f64, hi: f64 },
}

/// Coefficients of a fitted expansion with its error and conditioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub basis: BasisDescriptor,
    pub coeffs: Vec<f64>,
    /// `E^C` or `E^D`, the minimized weighted squared residual.
    pub error: f64,
    /// Condition estimate of the solved system; 1 for projections.
    pub cond: f64,
    pub domain: FitDomain,
    pub method: FitMethod,
}

impl FitResult {
    pub fn lambda(&self) -> f64 {
        self.basis.lambda()
    }

    /// Evaluates the fitted expansion; extrapolation beyond the fitted range is allowed.
    pub fn predict(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("predict", format!("x must be non-negative, got {x}")));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: f64) -> f64 {
        let values = self.basis.values(self.coeffs.len(), x);
        values.iter().zip(&self.coeffs).map(|(v, a)| v * a).sum()
    }

    /// The fit rewritten as `Σ c_i x^(iλ)`.
    pub fn to_fractional_polynomial(&self) -> Result<FractionalPolynomial> {
        let lambda = self.lambda();
        match &self.basis {
            BasisDescriptor::Monomial { .. } => FractionalPolynomial::new(lambda, self.coeffs.clone()),
            BasisDescriptor::MuntzLegendre { scale, .. } => {
                let polys = (0..self.coeffs.len())
                    .map(|i| {
                        let p = crate::fractional_poly::muntz_legendre_coeffs(i, lambda)?;
                        let factor = scale.powf(-lambda);
                        let coeffs = p
                            .coeffs()
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * factor.powi(k as i32))
                            .collect();
                        FractionalPolynomial::new(lambda, coeffs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                FractionalPolynomial::linear_combine(&polys, &self.coeffs)
            }
            BasisDescriptor::Orthogonal { b, c, .. } => {
                let mut polys = vec![FractionalPolynomial::constant(lambda, 1.0)?];
                for (i, b_i) in b.iter().enumerate().take(self.coeffs.len() - 1) {
                    let mut next = polys[i].shift_mul().sub_scaled(*b_i, &polys[i]);
                    if i >= 1 {
                        next = next.sub_scaled(c[i - 1], &polys[i - 1]);
                    }
                    polys.push(next);
                }
                FractionalPolynomial::linear_combine(&polys, &self.coeffs)
            }
        }
    }
}

fn check_unknowns(n: usize) -> Result<()> {
    if n + 1 > MAX_UNKNOWNS {
        Err(domain(
            "least_squares",
            format!("at most {MAX_UNKNOWNS} unknowns supported, got {}", n + 1),
        ))
    } else {
        Ok(())
    }
}

/// Ratio of extreme eigenvalue magnitudes of a symmetric matrix.
pub fn symmetric_cond(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let max = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky solve of a symmetric positive-definite system with a condition estimate.
pub(crate) fn solve_spd(a: DMatrix<f64>, d: DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let cond = symmetric_cond(&a);
    let chol = a.cholesky().ok_or(Error::Conditioning { cond })?;
    let x = chol.solve(&d);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning { cond });
    }
    Ok((x.iter().copied().collect(), cond))
}

/// Normal matrix `A_ij = Σ_k w_k x_k^((i+j)λ)` for the monomial basis.
pub fn normal_matrix_discrete(xs: &[f64], weights: Option<&[f64]>, lambda: f64, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=i {
            let e = (i + j) as f64 * lambda;
            let s: f64 = xs
                .iter()
                .enumerate()
                .map(|(k, &x)| weights.map_or(1.0, |w| w[k]) * frac_pow(x, e))
                .sum();
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    a
}

/// Continuous unit-weight fit on `[lo, hi]` by the normal equations.
///
/// The matrix uses exact moments; the right-hand side and `E^C` use `rule`,
/// which must carry the unit weight.
pub fn fit_continuous_normal(
    y: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    lambda: f64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<FitResult> {
    check_lambda(lambda)?;
    check_unknowns(n)?;
    if rule.weight_kind() != WeightKind::Unit || rule.lo() != lo || rule.hi() != hi {
        return Err(Error::Usage(format!(
            "rule must carry the unit weight on [{lo}, {hi}], got {:?} on [{}, {}]",
            rule.weight_kind(),
            rule.lo(),
            rule.hi()
        )));
    }
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=i {
            let m = frac_moment(lo, hi, (i + j) as f64 * lambda)?;
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let ys = sample(y, rule.nodes())?;
    let d = DVector::from_iterator(
        n + 1,
        (0..=n).map(|i| {
            let e = i as f64 * lambda;
            rule.nodes()
                .iter()
                .zip(rule.weights())
                .zip(&ys)
                .map(|((&x, &w), &yv)| w * yv * frac_pow(x, e))
                .sum::<f64>()
        }),
    );
    let (coeffs, cond) = solve_spd(a, d)?;
    let mut fit = FitResult {
        basis: BasisDescriptor::Monomial { lambda },
        coeffs,
        error: 0.0,
        cond,
        domain: FitDomain::Interval { lo, hi },
        method: FitMethod::NormalEquations,
    };
    fit.error = weighted_residual(&fit, rule.nodes(), rule.weights(), &ys);
    Ok(fit)
}

/// Continuous weighted fit `min ∫ W (y - Σ a_i x^(iλ))²` with the matrix
/// assembled by quadrature under the given weight.
pub fn fit_weighted_normal(
    y: &dyn Fn(f64) -> f64,
    weight: &WeightSpec,
    lambda: f64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<FitResult> {
    check_lambda(lambda)?;
    check_unknowns(n)?;
    let measure = Measure::continuous(weight, rule)?;
    let ys = sample(y, measure.nodes())?;
    measure_normal_fit(&measure, &ys, lambda, n)
}

/// Discrete fit `min Σ W(x_k) (y_k - Σ a_i x_k^(iλ))²` by the normal equations.
pub fn fit_discrete_normal(data: &DataSet, lambda: f64, n: usize) -> Result<FitResult> {
    check_lambda(lambda)?;
    check_unknowns(n)?;
    if data.len() <= n {
        return Err(Error::RankDeficient {
            points: data.len(),
            unknowns: n + 1,
        });
    }
    let a = normal_matrix_discrete(&data.xs, data.weights(), lambda, n);
    let d = DVector::from_iterator(
        n + 1,
        (0..=n).map(|i| {
            let e = i as f64 * lambda;
            (0..data.len())
                .map(|k| data.weight(k) * data.ys[k] * frac_pow(data.xs[k], e))
                .sum::<f64>()
        }),
    );
    let (coeffs, cond) = solve_spd(a, d)?;
    let mut fit = FitResult {
        basis: BasisDescriptor::Monomial { lambda },
        coeffs,
        error: 0.0,
        cond,
        domain: points_domain(&data.xs),
        method: FitMethod::NormalEquations,
    };
    let weights: Vec<f64> = (0..data.len()).map(|k| data.weight(k)).collect();
    fit.error = weighted_residual(&fit, &data.xs, &weights, &data.ys);
    Ok(fit)
}

fn measure_normal_fit(measure: &Measure, ys: &[f64], lambda: f64, n: usize) -> Result<FitResult> {
    let a = normal_matrix_discrete(measure.nodes(), Some(measure.weights()), lambda, n);
    let d = DVector::from_iterator(
        n + 1,
        (0..=n).map(|i| {
            let e = i as f64 * lambda;
            measure
                .nodes()
                .iter()
                .zip(measure.weights())
                .zip(ys)
                .map(|((&x, &w), &yv)| w * yv * frac_pow(x, e))
                .sum::<f64>()
        }),
    );
    let (coeffs, cond) = solve_spd(a, d)?;
    let mut fit = FitResult {
        basis: BasisDescriptor::Monomial { lambda },
        coeffs,
        error: 0.0,
        cond,
        domain: mode_domain(measure.mode()),
        method: FitMethod::NormalEquations,
    };
    fit.error = weighted_residual(&fit, measure.nodes(), measure.weights(), ys);
    Ok(fit)
}

/// Target of a projection: a function, or values aligned with the measure's nodes.
#[derive(Clone, Copy)]
pub enum Target<'a> {
    Function(&'a dyn Fn(f64) -> f64),
    Values(&'a [f64]),
}

/// Coefficients `a_i = ⟨y, L_i⟩_W / ⟨L_i, L_i⟩_W`, computed independently
/// for each index without any linear solve.
pub fn fit_projection(target: Target<'_>, basis: &OrthogonalBasis, measure: &Measure) -> Result<FitResult> {
    match (basis.mode(), measure.mode()) {
        (BasisMode::Continuous { .. }, BasisMode::Continuous { .. }) => {}
        (BasisMode::Discrete { points: a }, BasisMode::Discrete { points: b }) if a == b => {}
        (mode, other) => {
            return Err(Error::Usage(format!("basis built for {mode:?} cannot project over {other:?}")));
        }
    }
    let ys = match target {
        Target::Function(f) => sample(f, measure.nodes())?,
        Target::Values(v) => {
            if v.len() != measure.nodes().len() {
                return Err(Error::Invariant(format!(
                    "{} target values for {} nodes",
                    v.len(),
                    measure.nodes().len()
                )));
            }
            v.to_vec()
        }
    };
    let n = basis.degree();
    let values: Vec<Vec<f64>> = measure
        .nodes()
        .iter()
        .map(|&x| basis.eval_all(x))
        .collect::<Result<_>>()?;
    let coeffs: Vec<f64> = (0..=n)
        .map(|i| {
            let num: f64 = values
                .iter()
                .zip(measure.weights())
                .zip(&ys)
                .map(|((v, w), y)| w * y * v[i])
                .sum();
            num / basis.sq_norms()[i]
        })
        .collect();
    let mut fit = FitResult {
        basis: BasisDescriptor::of_basis(basis),
        coeffs,
        error: 0.0,
        cond: 1.0,
        domain: mode_domain(measure.mode()),
        method: FitMethod::Projection,
    };
    fit.error = weighted_residual(&fit, measure.nodes(), measure.weights(), &ys);
    Ok(fit)
}

/// Discrete projection fit: builds the orthogonal basis for the data's points
/// and weights, then projects.
pub fn fit_discrete_projection(data: &DataSet, lambda: f64, n: usize) -> Result<FitResult> {
    let basis = build_discrete(data.weights(), &data.xs, lambda, n)?;
    let measure = Measure::discrete(&data.xs, data.weights())?;
    fit_projection(Target::Values(&data.ys), &basis, &measure)
}

/// Projection onto Müntz-Legendre polynomials on `[0, 1]` with unit weight,
/// using `‖L_i‖² = 1/(2iλ+1)`.
pub fn fit_muntz_legendre_projection(
    y: &dyn Fn(f64) -> f64,
    lambda: f64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<FitResult> {
    check_lambda(lambda)?;
    if rule.weight_kind() != WeightKind::Unit || rule.lo() != 0.0 || rule.hi() != 1.0 {
        return Err(Error::Usage("Müntz-Legendre projection needs a unit-weight rule on [0, 1]".into()));
    }
    let ys = sample(y, rule.nodes())?;
    let values: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| muntz_legendre_values(n, lambda, x)).collect();
    let coeffs = (0..=n)
        .map(|i| {
            let ip: f64 = values
                .iter()
                .zip(rule.weights())
                .zip(&ys)
                .map(|((v, w), yv)| w * yv * v[i])
                .sum();
            ip * (2.0 * i as f64 * lambda + 1.0)
        })
        .collect();
    let mut fit = FitResult {
        basis: BasisDescriptor::MuntzLegendre { lambda, scale: 1.0 },
        coeffs,
        error: 0.0,
        cond: 1.0,
        domain: FitDomain::Interval { lo: 0.0, hi: 1.0 },
        method: FitMethod::Projection,
    };
    fit.error = weighted_residual(&fit, rule.nodes(), rule.weights(), &ys);
    Ok(fit)
}

/// Evaluates a fit at `x`.
pub fn predict(fit: &FitResult, x: f64) -> Result<f64> {
    fit.predict(x)
}

/// Perturbs each `y_k` by Gaussian noise with standard deviation
/// `percent/100 · |y_k|`, reproducibly for a given seed.
pub fn add_noise(data: &DataSet, percent: f64, seed: u64) -> Result<DataSet> {
    if !(percent.is_finite() && percent >= 0.0) {
        return Err(domain("add_noise", format!("noise percentage must be non-negative, got {percent}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = percent / 100.0;
    let ys = data
        .ys
        .iter()
        .map(|&y| {
            let z: f64 = StandardNormal.sample(&mut rng);
            y + scale * y.abs() * z
        })
        .collect();
    Ok(DataSet {
        xs: data.xs.clone(),
        ys,
        weights: data.weights.clone(),
    })
}

fn sample(f: &dyn Fn(f64) -> f64, nodes: &[f64]) -> Result<Vec<f64>> {
    nodes
        .iter()
        .map(|&x| {
            let value = f(x);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::Evaluation { x, value })
            }
        })
        .collect()
}

fn weighted_residual(fit: &FitResult, nodes: &[f64], weights: &[f64], ys: &[f64]) -> f64 {
    nodes
        .iter()
        .zip(weights)
        .zip(ys)
        .map(|((&x, &w), &y)| {
            let r = y - fit.predict_unchecked(x);
            w * r * r
        })
        .sum()
}

fn points_domain(xs: &[f64]) -> FitDomain {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FitDomain::Points {
        count: xs.len(),
        lo,
        hi,
    }
}

fn mode_domain(mode: &BasisMode) -> FitDomain {
    match mode {
        BasisMode::Continuous { lo, hi } => FitDomain::Interval { lo: *lo, hi: *hi },
        BasisMode::Discrete { points } => points_domain(points),
    }
}
