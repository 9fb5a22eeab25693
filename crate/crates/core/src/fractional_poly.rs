//! Fractional polynomials `P(x) = Σ a_i x^(iλ)`, classical Jacobi polynomials
//! and Müntz-Legendre polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest degree for which Müntz-Legendre coefficients are built in closed form.
pub const MUNTZ_LEGENDRE_MAX_DIRECT_DEGREE: usize = 30;

/// `x^e` on `x ≥ 0` with the convention `0^0 = 1`. Small integral exponents
/// go through `powi`, so `λ = 1` reproduces integer-power arithmetic.
#[inline]
pub fn frac_pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if x == 0.0 {
        if e > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 && lambda <= 2.0 {
        Ok(())
    } else {
        Err(domain("lambda", format!("exponent step must lie in (0, 2], got {lambda}")))
    }
}

/// Element of the Müntz space `M_n^λ` stored in the basis `{1, x^λ, ..., x^(nλ)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalPolynomial {
    lambda: f64,
    coeffs: Vec<f64>,
}

impl FractionalPolynomial {
    pub fn new(lambda: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        if coeffs.is_empty() {
            return Err(Error::Invariant("coefficient sequence must be non-empty".into()));
        }
        Ok(Self { lambda, coeffs })
    }

    pub fn constant(lambda: f64, value: f64) -> Result<Self> {
        Self::new(lambda, vec![value])
    }

    /// Zero polynomial carrying `degree + 1` coefficients.
    pub fn zero(lambda: f64, degree: usize) -> Result<Self> {
        Self::new(lambda, vec![0.0; degree + 1])
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree index `n`, i.e. the number of coefficients minus one.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain("frac_poly_eval", format!("x must be non-negative, got {x}")));
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the domain check; `x` must be non-negative.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.coeffs[0];
        }
        // Horner in t = x^λ
        let t = frac_pow(x, self.lambda);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// `x^λ · P(x)`: shifts the coefficient sequence up by one index.
    pub fn shift_mul(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend_from_slice(&self.coeffs);
        Self {
            lambda: self.lambda,
            coeffs,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            lambda: self.lambda,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `Σ_j ws[j] · ps[j]`, padded to the largest degree among `ps`.
    pub fn linear_combine(ps: &[FractionalPolynomial], ws: &[f64]) -> Result<Self> {
        if ps.len() != ws.len() {
            return Err(Error::Invariant(format!(
                "{} polynomials but {} weights",
                ps.len(),
                ws.len()
            )));
        }
        let first = ps
            .first()
            .ok_or_else(|| Error::Invariant("cannot combine an empty sequence".into()))?;
        let lambda = first.lambda;
        if let Some(p) = ps.iter().find(|p| p.lambda != lambda) {
            return Err(Error::Invariant(format!(
                "mismatched exponent steps {lambda} and {}",
                p.lambda
            )));
        }
        let len = ps.iter().map(|p| p.coeffs.len()).max().unwrap_or(1);
        let mut coeffs = vec![0.0; len];
        for (p, w) in ps.iter().zip(ws) {
            for (acc, c) in coeffs.iter_mut().zip(&p.coeffs) {
                *acc += w * c;
            }
        }
        Ok(Self { lambda, coeffs })
    }

    /// `self - factor · other`, padded to the larger degree.
    pub(crate) fn sub_scaled(&self, factor: f64, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        for (acc, c) in coeffs.iter_mut().zip(&other.coeffs) {
            *acc -= factor * c;
        }
        Self {
            lambda: self.lambda,
            coeffs,
        }
    }
}

/// Parameters `(a, b)` of the Jacobi weight `(1-x)^a (1+x)^b` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiParams {
    a: f64,
    b: f64,
}

impl JacobiParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a > -1.0 && b > -1.0 {
            Ok(Self { a, b })
        } else {
            Err(domain("jacobi", format!("parameters must exceed -1, got ({a}, {b})")))
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Returns `(P_n(x), P_{n-1}(x))` from the three-term recurrence; for `n = 0`
/// the second entry is zero.
pub(crate) fn jacobi_pair(params: JacobiParams, n: usize, x: f64) -> (f64, f64) {
    let JacobiParams { a, b } = params;
    let p0 = 1.0;
    if n == 0 {
        return (p0, 0.0);
    }
    let mut prev = p0;
    let mut curr = 0.5 * ((a - b) + (a + b + 2.0) * x);
    let ab = a + b;
    for k in 1..n {
        let k = k as f64;
        let s = 2.0 * k + ab;
        let c1 = 2.0 * (k + 1.0) * (k + ab + 1.0) * s;
        let c2 = (s + 1.0) * (s * (s + 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (k + a) * (k + b) * (s + 2.0);
        let next = (c2 * curr - c3 * prev) / c1;
        prev = curr;
        curr = next;
    }
    (curr, prev)
}

/// Jacobi polynomial `P_n^(a,b)(x)` on `[-1, 1]` by the three-term recurrence.
pub fn jacobi_eval(params: JacobiParams, n: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("jacobi_eval", format!("x must lie in [-1, 1], got {x}")));
    }
    Ok(jacobi_pair(params, n, x).0)
}

/// Closed-form Müntz-Legendre polynomial `L_n(·; λ)` with coefficients
/// `η_{n,i} = (-1)^(n-i) / (λ^n i! (n-i)!) · Π_{k<n} ((i+k)λ + 1)`.
///
/// Loses accuracy for large `n`; prefer [`muntz_legendre_eval`] for evaluation.
pub fn muntz_legendre_coeffs(n: usize, lambda: f64) -> Result<FractionalPolynomial> {
    check_lambda(lambda)?;
    if n > MUNTZ_LEGENDRE_MAX_DIRECT_DEGREE {
        return Err(domain(
            "muntz_legendre_coeffs",
            format!("degree {n} exceeds the direct-formula cap {MUNTZ_LEGENDRE_MAX_DIRECT_DEGREE}"),
        ));
    }
    let inv = 1.0 / lambda;
    let coeffs = (0..=n)
        .map(|i| {
            // Π_k (i + k + 1/λ) / (i! (n-i)!), interleaving the divisions
            let mut value = 1.0;
            for k in 0..n {
                value *= (i + k) as f64 + inv;
                if k < i {
                    value /= (k + 1) as f64;
                }
                if k < n - i {
                    value /= (k + 1) as f64;
                }
            }
            if (n - i) % 2 == 1 {
                -value
            } else {
                value
            }
        })
        .collect();
    FractionalPolynomial::new(lambda, coeffs)
}

/// `L_n(x; λ) = P_n^(0, 1/λ - 1)(2x^λ - 1)`, evaluated with the Jacobi recurrence.
pub fn muntz_legendre_eval(n: usize, lambda: f64, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("muntz_legendre_eval", format!("x must lie in [0, 1], got {x}")));
    }
    let params = JacobiParams::new(0.0, 1.0 / lambda - 1.0)?;
    let t = 2.0 * frac_pow(x, lambda) - 1.0;
    Ok(jacobi_pair(params, n, t).0)
}

/// Values `L_0(x; λ), ..., L_n(x; λ)` in one pass of the recurrence.
pub(crate) fn muntz_legendre_values(n: usize, lambda: f64, x: f64) -> Vec<f64> {
    let b = 1.0 / lambda - 1.0;
    let t = 2.0 * frac_pow(x, lambda) - 1.0;
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(0.5 * (-b + (b + 2.0) * t));
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + b;
        let c1 = 2.0 * (kf + 1.0) * (kf + b + 1.0) * s;
        let c2 = (s + 1.0) * (s * (s + 2.0) * t - b * b);
        let c3 = 2.0 * kf * (kf + b) * (s + 2.0);
        let next = (c2 * out[k] - c3 * out[k - 1]) / c1;
        out.push(next);
    }
    out
}
