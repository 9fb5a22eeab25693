//! Fractional polynomials orthogonal with respect to a weight, built by the
//! monic three-term recurrence `L_i = (x^λ - B_i) L_{i-1} - C_i L_{i-2}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fractional_poly::{check_lambda, frac_pow, FractionalPolynomial};
use crate::quadrature::{gauss_jacobi_fractional, QuadratureRule, WeightKind};

/// Relative size below which a squared norm counts as numerical breakdown.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

/// Weight function `W` of the inner product.
#[derive(Clone)]
pub enum WeightSpec {
    Unit,
    /// `(x-lo)^β_left (hi-x)^β_right`, carried by the quadrature rule.
    Jacobi { beta_left: f64, beta_right: f64 },
    /// Values at the data points of a discrete basis.
    Tabulated(Vec<f64>),
    /// Arbitrary positive function, multiplied onto the rule's own weight.
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Unit => write!(f, "Unit"),
            WeightSpec::Jacobi {
                beta_left,
                beta_right,
            } => write!(f, "Jacobi({beta_left}, {beta_right})"),
            WeightSpec::Tabulated(v) => write!(f, "Tabulated({} values)", v.len()),
            WeightSpec::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl WeightSpec {
    pub fn callable<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        WeightSpec::Callable(Arc::new(f))
    }

    /// `m`-point rule on `[lo, hi]` matched to this weight, built in the
    /// variable `x^λ` so that products of basis functions integrate exactly.
    pub fn rule(&self, lambda: f64, lo: f64, hi: f64, m: usize) -> Result<QuadratureRule> {
        match *self {
            WeightSpec::Unit | WeightSpec::Callable(_) => gauss_jacobi_fractional(m, lambda, 0.0, 0.0, lo, hi),
            WeightSpec::Jacobi {
                beta_left,
                beta_right,
            } => gauss_jacobi_fractional(m, lambda, beta_left, beta_right, lo, hi),
            WeightSpec::Tabulated(_) => Err(Error::Usage(
                "tabulated weights belong to discrete bases and have no quadrature rule".into(),
            )),
        }
    }
}

/// Which kind of inner product a basis or measure represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BasisMode {
    Continuous { lo: f64, hi: f64 },
    Discrete { points: Vec<f64> },
}

impl BasisMode {
    fn same_kind(&self, other: &BasisMode) -> bool {
        matches!(
            (self, other),
            (BasisMode::Continuous { .. }, BasisMode::Continuous { .. })
                | (BasisMode::Discrete { .. }, BasisMode::Discrete { .. })
        )
    }
}

/// Finite measure `Σ_k w_k δ_{x_k}` realising either a weighted integral
/// (through a quadrature rule) or a weighted sum over data points.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mode: BasisMode,
}

impl Measure {
    /// Measure for `∫ W f g` using `rule`; the rule must carry the weight's
    /// singular factors.
    pub fn continuous(weight: &WeightSpec, rule: &QuadratureRule) -> Result<Self> {
        let kind = rule.weight_kind();
        let extra: Option<&(dyn Fn(f64) -> f64 + Send + Sync)> = match weight {
            WeightSpec::Unit => {
                if kind != WeightKind::Unit {
                    return Err(Error::Usage(format!("unit weight paired with a rule for {kind:?}")));
                }
                None
            }
            WeightSpec::Jacobi {
                beta_left,
                beta_right,
            } => {
                let expected = if *beta_left == 0.0 && *beta_right == 0.0 {
                    WeightKind::Unit
                } else {
                    WeightKind::Jacobi {
                        beta_left: *beta_left,
                        beta_right: *beta_right,
                    }
                };
                if kind != expected {
                    return Err(Error::Usage(format!("weight {weight:?} paired with a rule for {kind:?}")));
                }
                None
            }
            WeightSpec::Callable(f) => Some(f.as_ref()),
            WeightSpec::Tabulated(_) => {
                return Err(Error::Usage("tabulated weights require a discrete basis".into()));
            }
        };
        let mut weights = rule.weights().to_vec();
        if let Some(f) = extra {
            for (w, &x) in weights.iter_mut().zip(rule.nodes()) {
                let value = f(x);
                if !value.is_finite() {
                    return Err(Error::Evaluation { x, value });
                }
                if value <= 0.0 {
                    return Err(domain("weight", format!("weight must be positive, got {value} at x = {x}")));
                }
                *w *= value;
            }
        }
        Ok(Self {
            nodes: rule.nodes().to_vec(),
            weights,
            mode: BasisMode::Continuous {
                lo: rule.lo(),
                hi: rule.hi(),
            },
        })
    }

    /// Measure for `Σ_k W(x_k) f(x_k) g(x_k)`; `weights = None` means all ones.
    pub fn discrete(points: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::RankDeficient { points: 0, unknowns: 1 });
        }
        if let Some(&x) = points.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(domain("discrete_measure", format!("points must be finite and non-negative, got {x}")));
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(domain("discrete_measure", format!("repeated point {}", w[0])));
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != points.len() {
                    return Err(Error::Invariant(format!(
                        "{} weights for {} points",
                        w.len(),
                        points.len()
                    )));
                }
                if let Some(&bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(domain("discrete_measure", format!("weights must be positive, got {bad}")));
                }
                w.to_vec()
            }
            None => vec![1.0; points.len()],
        };
        Ok(Self {
            nodes: points.to_vec(),
            weights,
            mode: BasisMode::Discrete {
                points: points.to_vec(),
            },
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mode(&self) -> &BasisMode {
        &self.mode
    }

    /// `Σ_k w_k f(x_k) g(x_k)`.
    pub fn inner_product<F, G>(&self, f: F, g: G) -> Result<f64>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let value = f(x) * g(x);
            if !value.is_finite() {
                return Err(Error::Evaluation { x, value });
            }
            sum += w * value;
        }
        Ok(sum)
    }

    /// Inner product of tabulated values at the nodes.
    pub(crate) fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }
}

/// `⟨f, g⟩_W` under `measure`, checking it matches the mode of a basis.
pub fn inner_product<F, G>(mode: &BasisMode, measure: &Measure, f: F, g: G) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !mode.same_kind(measure.mode()) {
        return Err(Error::Usage(format!(
            "basis mode {mode:?} does not match the measure mode {:?}",
            measure.mode()
        )));
    }
    measure.inner_product(f, g)
}

/// Monic W-orthogonal fractional polynomials `L_0, ..., L_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalBasis {
    lambda: f64,
    polys: Vec<FractionalPolynomial>,
    b: Vec<f64>,
    c: Vec<f64>,
    sq_norms: Vec<f64>,
    mode: BasisMode,
}

impl OrthogonalBasis {
    /// Runs the recurrence against an arbitrary measure.
    pub fn from_measure(measure: &Measure, lambda: f64, n: usize) -> Result<Self> {
        check_lambda(lambda)?;
        let t: Vec<f64> = measure.nodes.iter().map(|&x| frac_pow(x, lambda)).collect();
        let mut polys = vec![FractionalPolynomial::constant(lambda, 1.0)?];
        let mut values: Vec<Vec<f64>> = vec![vec![1.0; t.len()]];
        let mut sq_norms = vec![measure.dot(&values[0], &values[0])];
        if !(sq_norms[0] > 0.0) {
            return Err(Error::Degenerate {
                index: 0,
                value: sq_norms[0],
            });
        }
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n.saturating_sub(1));

        for i in 1..=n {
            let prev = &values[i - 1];
            let shifted: Vec<f64> = prev.iter().zip(&t).map(|(v, t)| v * t).collect();
            let b_i = measure.dot(&shifted, prev) / sq_norms[i - 1];
            let mut next: Vec<f64> = shifted.iter().zip(prev).map(|(s, p)| s - b_i * p).collect();
            let mut poly = polys[i - 1].shift_mul().sub_scaled(b_i, &polys[i - 1]);
            if i >= 2 {
                let prev2 = &values[i - 2];
                let c_i = measure.dot(&shifted, prev2) / sq_norms[i - 2];
                for (v, p) in next.iter_mut().zip(prev2) {
                    *v -= c_i * p;
                }
                poly = poly.sub_scaled(c_i, &polys[i - 2]);
                c.push(c_i);
            }
            let norm = measure.dot(&next, &next);
            let scale = measure.dot(&shifted, &shifted);
            if !(norm > 0.0) || norm < DEGENERACY_THRESHOLD * scale {
                return Err(Error::Degenerate { index: i, value: norm });
            }
            b.push(b_i);
            sq_norms.push(norm);
            values.push(next);
            polys.push(poly);
        }
        Ok(Self {
            lambda,
            polys,
            b,
            c,
            sq_norms,
            mode: measure.mode.clone(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn degree(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn polys(&self) -> &[FractionalPolynomial] {
        &self.polys
    }

    /// `B_1, ..., B_n`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `C_2, ..., C_n`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    pub fn mode(&self) -> &BasisMode {
        &self.mode
    }

    /// Values `L_0(x), ..., L_n(x)` from the recurrence coefficients.
    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        if !(x >= 0.0) {
            return Err(domain("basis_eval", format!("x must be non-negative, got {x}")));
        }
        Ok(recurrence_values(self.lambda, &self.b, &self.c, x))
    }

    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        if i > self.degree() {
            return Err(domain("basis_eval", format!("index {i} exceeds degree {}", self.degree())));
        }
        let mut values = self.eval_all(x)?;
        values.truncate(i + 1);
        Ok(values[i])
    }

    /// `Σ a_i L_i` rewritten in the monomial basis `{x^(iλ)}`.
    pub fn expand(&self, coeffs: &[f64]) -> Result<FractionalPolynomial> {
        if coeffs.len() != self.polys.len() {
            return Err(Error::Invariant(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.polys.len()
            )));
        }
        FractionalPolynomial::linear_combine(&self.polys, coeffs)
    }
}

/// Evaluates the monic recurrence with coefficients `b = (B_1..B_n)` and
/// `c = (C_2..C_n)` at a single non-negative `x`.
pub(crate) fn recurrence_values(lambda: f64, b: &[f64], c: &[f64], x: f64) -> Vec<f64> {
    let t = frac_pow(x, lambda);
    let mut out = Vec::with_capacity(b.len() + 1);
    out.push(1.0);
    for (i, b_i) in b.iter().enumerate() {
        let mut next = (t - b_i) * out[i];
        if i >= 1 {
            next -= c[i - 1] * out[i - 1];
        }
        out.push(next);
    }
    out
}

/// Orthogonal basis for `∫ W f g` over the rule's interval.
pub fn build_continuous(weight: &WeightSpec, lambda: f64, n: usize, rule: &QuadratureRule) -> Result<OrthogonalBasis> {
    let measure = Measure::continuous(weight, rule)?;
    OrthogonalBasis::from_measure(&measure, lambda, n)
}

/// Orthogonal basis for `Σ_k W(x_k) f(x_k) g(x_k)` over distinct points.
pub fn build_discrete(weight_values: Option<&[f64]>, points: &[f64], lambda: f64, n: usize) -> Result<OrthogonalBasis> {
    if points.len() <= n {
        return Err(Error::RankDeficient {
            points: points.len(),
            unknowns: n + 1,
        });
    }
    let measure = Measure::discrete(points, weight_values)?;
    OrthogonalBasis::from_measure(&measure, lambda, n)
}
