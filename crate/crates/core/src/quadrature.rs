//! Gauss-Legendre and Gauss-Jacobi rules, including a variant in the
//! substituted variable `u = (x/hi)^λ` that integrates fractional monomials exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fractional_poly::{check_lambda, jacobi_pair, JacobiParams};
use crate::special_functions::ln_gamma;

/// Largest supported number of nodes.
pub const MAX_POINTS: usize = 256;

/// Rule size used for data integrals when the caller does not choose one.
pub const DEFAULT_POINTS: usize = 64;

/// Weight built into a rule: `(x-lo)^β_left (hi-x)^β_right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Unit,
    Jacobi { beta_left: f64, beta_right: f64 },
}

impl WeightKind {
    fn exponents(self) -> (f64, f64) {
        match self {
            WeightKind::Unit => (0.0, 0.0),
            WeightKind::Jacobi {
                beta_left,
                beta_right,
            } => (beta_left, beta_right),
        }
    }

    fn from_exponents(beta_left: f64, beta_right: f64) -> Self {
        if beta_left == 0.0 && beta_right == 0.0 {
            WeightKind::Unit
        } else {
            WeightKind::Jacobi {
                beta_left,
                beta_right,
            }
        }
    }

    /// Value of the weight at `x` on `[lo, hi]`.
    pub fn eval(self, lo: f64, hi: f64, x: f64) -> f64 {
        let (bl, br) = self.exponents();
        let left = if bl == 0.0 { 1.0 } else { (x - lo).powf(bl) };
        let right = if br == 0.0 { 1.0 } else { (hi - x).powf(br) };
        left * right
    }
}

/// Nodes and positive weights on `[lo, hi]`.
///
/// `Σ w_k f(x_k)` approximates `∫ weight(x) f(x) dx`. When `substitution` is
/// `Some(λ)`, the rule is exact for `f` in `span{x^(kλ) : k ≤ 2m-1}` rather than
/// for ordinary polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lo: f64,
    hi: f64,
    weight_kind: WeightKind,
    substitution: Option<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.weight_kind
    }

    pub fn substitution(&self) -> Option<f64> {
        self.substitution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k f(x_k)`; fails if `f` is not finite at some node.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let value = f(x);
            if !value.is_finite() {
                return Err(Error::Evaluation { x, value });
            }
            sum += w * value;
        }
        Ok(sum)
    }
}

/// Free-function form of [`QuadratureRule::integrate`].
pub fn integrate<F: Fn(f64) -> f64>(rule: &QuadratureRule, f: F) -> Result<f64> {
    rule.integrate(f)
}

/// `∫_lo^hi x^s dx` in closed form.
pub fn frac_moment(lo: f64, hi: f64, s: f64) -> Result<f64> {
    if !(s > -1.0) {
        return Err(domain("frac_moment", format!("exponent must exceed -1, got {s}")));
    }
    if !(lo >= 0.0 && lo < hi) {
        return Err(domain("frac_moment", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let p = s + 1.0;
    let lo_part = if lo == 0.0 { 0.0 } else { lo.powf(p) };
    Ok((hi.powf(p) - lo_part) / p)
}

fn check_size(op: &'static str, m: usize) -> Result<()> {
    if (1..=MAX_POINTS).contains(&m) {
        Ok(())
    } else {
        Err(domain(op, format!("rule size must lie in 1..={MAX_POINTS}, got {m}")))
    }
}

fn check_interval(op: &'static str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(domain(op, format!("invalid interval [{lo}, {hi}]")))
    }
}

/// Reference rule on `[-1, 1]` for the weight `(1-t)^a (1+t)^b`.
///
/// Nodes come from the Jacobi matrix (Golub-Welsch) and are polished by Newton
/// steps on the three-term recurrence; weights use `1 / ((1-t²) P_m'(t)²)`
/// scaled to the total mass. Nodes are returned in increasing order.
pub(crate) fn gauss_jacobi_reference(m: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let params = JacobiParams::new(a, b)?;
    let ab = a + b;
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        jacobi[(k, k)] = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            let s = 2.0 * kf + ab;
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < m {
            let n = kf + 1.0;
            let s = 2.0 * n + ab;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * n * (n + a) * (n + b) * (n + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            jacobi[(k, k + 1)] = beta.sqrt();
            jacobi[(k + 1, k)] = beta.sqrt();
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let mf = m as f64;
    let derivative = |t: f64| {
        let (p, pm1) = jacobi_pair(params, m, t);
        let s = 2.0 * mf + ab;
        let dp = (mf * ((a - b) - s * t) * p + 2.0 * (mf + a) * (mf + b) * pm1) / (s * (1.0 - t * t));
        (p, dp)
    };

    for t in nodes.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = derivative(*t);
            let step = p / dp;
            let next = *t - step;
            if !next.is_finite() || next <= -1.0 || next >= 1.0 || step.abs() > 1e-6 {
                break;
            }
            *t = next;
            if step.abs() <= 2.0 * f64::EPSILON * t.abs().max(1e-3) {
                break;
            }
        }
    }

    let log_weights: Vec<f64> = nodes
        .iter()
        .map(|&t| {
            let (_, dp) = derivative(t);
            -((1.0 - t) * (1.0 + t)).ln() - 2.0 * dp.abs().ln()
        })
        .collect();
    let peak = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_weights.iter().map(|lw| (lw - peak).exp()).collect();
    let total: f64 = raw.iter().sum();
    let ln_mass = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0)? + ln_gamma(b + 1.0)?
        - ln_gamma(ab + 2.0)?;
    let mass = ln_mass.exp();
    let weights: Vec<f64> = raw.iter().map(|w| w / total * mass).collect();
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Invariant(format!(
            "Gauss-Jacobi weights degenerated for m={m}, a={a}, b={b}"
        )));
    }
    Ok((nodes, weights))
}

/// `m`-point Gauss-Legendre rule on `[lo, hi]`.
pub fn gauss_legendre(m: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    gauss_jacobi(m, 0.0, 0.0, lo, hi)
}

/// `m`-point rule for the weight `(x-lo)^β_left (hi-x)^β_right`, exact for
/// polynomials of degree `2m-1`.
pub fn gauss_jacobi(m: usize, beta_left: f64, beta_right: f64, lo: f64, hi: f64) -> Result<QuadratureRule> {
    check_size("gauss_jacobi", m)?;
    check_interval("gauss_jacobi", lo, hi)?;
    let (ts, ws) = gauss_jacobi_reference(m, beta_right, beta_left)?;
    let half = 0.5 * (hi - lo);
    let scale = half.powf(beta_left + beta_right + 1.0);
    let nodes = ts.iter().map(|t| lo + half * (1.0 + t)).collect();
    let weights = ws.iter().map(|w| w * scale).collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        lo,
        hi,
        weight_kind: WeightKind::from_exponents(beta_left, beta_right),
        substitution: None,
    })
}

/// `m`-point rule on `[0, hi]` for the weight `x^β_left (hi-x)^β_right` built in
/// the variable `u = (x/hi)^λ`.
///
/// With `β_right = 0` it integrates `x^(kλ)` exactly for `k ≤ 2m-1`. A nonzero
/// `β_right` leaves the smooth factor `((1-u^(1/λ))/(1-u))^β_right` in the
/// integrand, so exactness becomes approximate. On intervals with `lo > 0`
/// fractional powers are smooth and an ordinary Gauss-Jacobi rule is returned.
pub fn gauss_jacobi_fractional(
    m: usize,
    lambda: f64,
    beta_left: f64,
    beta_right: f64,
    lo: f64,
    hi: f64,
) -> Result<QuadratureRule> {
    check_lambda(lambda)?;
    check_size("gauss_jacobi_fractional", m)?;
    check_interval("gauss_jacobi_fractional", lo, hi)?;
    if lo != 0.0 {
        return gauss_jacobi(m, beta_left, beta_right, lo, hi);
    }
    if !(beta_left > -1.0 && beta_right > -1.0) {
        return Err(domain(
            "gauss_jacobi_fractional",
            format!("weight exponents must exceed -1, got ({beta_left}, {beta_right})"),
        ));
    }
    let q = 1.0 / lambda;
    let u_left = q * (beta_left + 1.0) - 1.0;
    let (ts, ws) = gauss_jacobi_reference(m, beta_right, u_left)?;
    // rule on u ∈ [0, 1] picks up a factor 2^-(a+b+1)
    let u_scale = 0.5_f64.powf(u_left + beta_right + 1.0);
    let x_scale = hi.powf(beta_left + beta_right + 1.0) * q;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (&t, &w) in ts.iter().zip(&ws) {
        let u = 0.5 * (1.0 + t);
        let one_minus_u = 0.5 * (1.0 - t);
        let ln_u = u.ln();
        let right_factor = if beta_right == 0.0 {
            1.0
        } else {
            (-(q * ln_u).exp_m1() / one_minus_u).powf(beta_right)
        };
        nodes.push(hi * (q * ln_u).exp());
        weights.push(w * u_scale * x_scale * right_factor);
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        lo,
        hi,
        weight_kind: WeightKind::from_exponents(beta_left, beta_right),
        substitution: Some(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional_poly::{muntz_legendre_eval, muntz_legendre_values};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn beta_fn(p: f64, q: f64) -> f64 {
        (ln_gamma(p).unwrap() + ln_gamma(q).unwrap() - ln_gamma(p + q).unwrap()).exp()
    }

    #[test]
    fn legendre_small_rules() {
        let r1 = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(r1.nodes()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r1.weights()[0], 2.0, epsilon = 1e-15);
        let r2 = gauss_legendre(2, -1.0, 1.0).unwrap();
        let node = 1.0 / 3.0_f64.sqrt();
        assert_abs_diff_eq!(r2.nodes()[0], -node, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.nodes()[1], node, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2.weights()[1], 1.0, epsilon = 1e-14);
        let r = gauss_legendre(2, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(r.integrate(|x| x.powi(3)).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(r.weight_kind(), WeightKind::Unit);
    }

    #[test]
    fn rule_size_and_interval_checked() {
        assert!(matches!(gauss_legendre(0, 0.0, 1.0), Err(Error::Domain { .. })));
        assert!(gauss_legendre(257, 0.0, 1.0).is_err());
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_jacobi(4, -1.0, 0.0, 0.0, 1.0).is_err());
        assert!(gauss_jacobi(4, 0.0, -1.2, 0.0, 1.0).is_err());
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        for m in [1, 2, 5, 16, 64, 128, 256] {
            let rule = gauss_legendre(m, 0.0, 1.0).unwrap();
            for deg in (0..2 * m).step_by((2 * m / 24).max(1)) {
                let approx = rule.integrate(|x| x.powi(deg as i32)).unwrap();
                assert_relative_eq!(approx, 1.0 / (deg as f64 + 1.0), max_relative = 1e-12);
            }
        }
        let rule = gauss_legendre(10, 10.0, 20.0).unwrap();
        assert_relative_eq!(
            rule.integrate(|x| x.powi(3)).unwrap(),
            frac_moment(10.0, 20.0, 3.0).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn legendre_symmetric_about_midpoint() {
        for m in [3, 8, 33, 100, 256] {
            let rule = gauss_legendre(m, 2.0, 5.0).unwrap();
            for k in 0..m {
                let j = m - 1 - k;
                assert_abs_diff_eq!(rule.nodes()[k] - 3.5, 3.5 - rule.nodes()[j], epsilon = 1e-14);
                assert_abs_diff_eq!(rule.weights()[k], rule.weights()[j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rules_have_sorted_interior_nodes_and_correct_mass() {
        for (bl, br) in [(0.0, 0.0), (0.0, -0.5), (-0.5, 0.0), (1.3, -0.75), (-0.9, 2.0), (12.0, 0.0)] {
            for m in [1, 7, 40, 256] {
                let rule = gauss_jacobi(m, bl, br, 0.0, 2.0).unwrap();
                assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
                assert!(rule.nodes().iter().all(|&x| x > 0.0 && x < 2.0));
                assert!(rule.weights().iter().all(|&w| w > 0.0));
                let mass: f64 = rule.weights().iter().sum();
                let expected = 2.0_f64.powf(bl + br + 1.0) * beta_fn(bl + 1.0, br + 1.0);
                assert_relative_eq!(mass, expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_beta_integrals() {
        let rule = gauss_jacobi(8, 0.0, -0.5, 0.0, 1.0).unwrap();
        assert_relative_eq!(rule.integrate(|_| 1.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(rule.integrate(|x| x).unwrap(), 4.0 / 3.0, max_relative = 1e-14);
        let same = gauss_jacobi(12, 0.0, 0.0, -1.0, 3.0).unwrap();
        let legendre = gauss_legendre(12, -1.0, 3.0).unwrap();
        assert_eq!(same, legendre);
    }

    #[test]
    fn jacobi_exact_for_polynomials() {
        for (bl, br) in [(0.5, -0.5), (-0.3, 0.7), (2.5, 1.0)] {
            for m in [3, 20, 90] {
                let rule = gauss_jacobi(m, bl, br, 0.0, 1.0).unwrap();
                for deg in [0, 1, m, 2 * m - 1] {
                    let exact = beta_fn(bl + deg as f64 + 1.0, br + 1.0);
                    let approx = rule.integrate(|x| x.powi(deg as i32)).unwrap();
                    assert_relative_eq!(approx, exact, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn half_power_with_plain_rule() {
        let rule = gauss_legendre(64, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(rule.integrate(|x| x.sqrt()).unwrap(), 2.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn integrate_reports_non_finite_values() {
        let rule = gauss_legendre(4, 0.0, 1.0).unwrap();
        assert!(matches!(rule.integrate(|x| 1.0 / (x - x)), Err(Error::Evaluation { .. })));
        assert_eq!(integrate(&rule, |_| 1.0).unwrap(), rule.integrate(|_| 1.0).unwrap());
    }

    #[test]
    fn frac_moment_examples() {
        assert_eq!(frac_moment(0.0, 1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(frac_moment(0.0, 1.0, 1.5).unwrap(), 0.4, epsilon = 1e-16);
        assert_eq!(frac_moment(10.0, 20.0, 3.0).unwrap(), 37_500.0);
        assert!(matches!(frac_moment(0.0, 1.0, -1.0), Err(Error::Domain { .. })));
        assert!(frac_moment(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn substituted_rule_integrates_fractional_monomials() {
        for lambda in [0.1, 0.25, 0.5, 0.75, 1.0, 1.39, 1.5, 2.0] {
            for m in [4, 16, 64] {
                let rule = gauss_jacobi_fractional(m, lambda, 0.0, 0.0, 0.0, 1.0).unwrap();
                assert_eq!(rule.substitution(), Some(lambda));
                for s in 0..2 * m {
                    let e = s as f64 * lambda;
                    let approx = rule.integrate(|x| x.powf(e)).unwrap();
                    assert_relative_eq!(approx, frac_moment(0.0, 1.0, e).unwrap(), max_relative = 1e-12);
                }
            }
        }
        let rule = gauss_jacobi_fractional(8, 0.5, 0.0, 0.0, 0.0, 3.0).unwrap();
        assert_relative_eq!(
            rule.integrate(|x| x.powf(2.5)).unwrap(),
            frac_moment(0.0, 3.0, 2.5).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn substituted_rule_with_weights() {
        // ∫_0^1 x^(1/2) (1-x)^(-1/2) dx = B(3/2, 1/2) = π/2
        let rule = gauss_jacobi_fractional(40, 0.5, 0.0, -0.5, 0.0, 1.0).unwrap();
        assert_relative_eq!(rule.integrate(|x| x.sqrt()).unwrap(), std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
        // ∫_0^2 x^(-0.3) x^(0.75 k) dx
        let rule = gauss_jacobi_fractional(6, 0.75, -0.3, 0.0, 0.0, 2.0).unwrap();
        for k in 0..12 {
            let e = 0.75 * k as f64;
            assert_relative_eq!(
                rule.integrate(|x| x.powf(e)).unwrap(),
                frac_moment(0.0, 2.0, e - 0.3).unwrap(),
                max_relative = 1e-12
            );
        }
        let shifted = gauss_jacobi_fractional(6, 0.75, 0.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(shifted.substitution(), None);
    }

    #[test]
    fn muntz_legendre_orthogonality() {
        for lambda in [0.5, 0.75, 1.0, 1.5] {
            let rule = gauss_jacobi_fractional(16, lambda, 0.0, 0.0, 0.0, 1.0).unwrap();
            let values: Vec<Vec<f64>> = rule.nodes().iter().map(|&x| muntz_legendre_values(8, lambda, x)).collect();
            for n in 0..=8 {
                for m in 0..=8 {
                    let integral: f64 = values.iter().zip(rule.weights()).map(|(v, w)| w * v[n] * v[m]).sum();
                    let expected = if n == m { 1.0 / (2.0 * n as f64 * lambda + 1.0) } else { 0.0 };
                    assert_abs_diff_eq!(integral, expected, epsilon = 1e-10);
                }
            }
        }
        let rule = gauss_jacobi_fractional(DEFAULT_POINTS, 0.75, 0.0, 0.0, 0.0, 1.0).unwrap();
        let product = rule
            .integrate(|x| muntz_legendre_eval(2, 0.75, x).unwrap() * muntz_legendre_eval(3, 0.75, x).unwrap())
            .unwrap();
        assert_abs_diff_eq!(product, 0.0, epsilon = 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn legendre_exactness_random(m in 1usize..80, lo in -5.0f64..5.0, width in 0.1f64..4.0, frac in 0.0f64..1.0) {
            let hi = lo + width;
            let rule = gauss_legendre(m, lo, hi).unwrap();
            let deg = ((2 * m - 1) as f64 * frac) as i32;
            // integrate (x - lo)^deg to avoid cancellation in the closed form
            let approx = rule.integrate(|x| (x - lo).powi(deg)).unwrap();
            let exact = width.powi(deg + 1) / (deg as f64 + 1.0);
            prop_assert!((approx - exact).abs() <= 1e-12 * exact.abs());
        }

        #[test]
        fn substitution_exactness_random(lambda in 0.05f64..=2.0, m in 1usize..48, frac in 0.0f64..1.0) {
            let rule = gauss_jacobi_fractional(m, lambda, 0.0, 0.0, 0.0, 1.0).unwrap();
            let s = ((2 * m - 1) as f64 * frac).floor();
            let e = s * lambda;
            let approx = rule.integrate(|x| x.powf(e)).unwrap();
            let exact = frac_moment(0.0, 1.0, e).unwrap();
            prop_assert!((approx - exact).abs() <= 1e-12 * exact);
        }
    }
}
