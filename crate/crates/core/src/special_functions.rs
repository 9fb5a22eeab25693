//! Gamma and one-parameter Mittag-Leffler functions on the real line.

use crate::error::{domain, Error, Result};

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_8;
const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_7;

/// Arguments at or above this use the Stirling series directly.
const STIRLING_MIN: f64 = 20.0;

/// Largest argument for which `gamma` is finite in double precision.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Tail of the Stirling series for ln Γ(x): Σ B_2k / (2k (2k-1) x^(2k-1)).
fn stirling_tail(x: f64) -> f64 {
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let poly = B.iter().rev().fold(0.0, |acc, b| acc * inv2 + b);
    poly * inv
}

fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Gamma function for positive real arguments.
///
/// Integer arguments return the factorial computed by direct multiplication,
/// exact up to `Γ(23) = 22!`. Otherwise the argument is shifted up to at least
/// 20 with `Γ(x) = Γ(x + n) / (x (x+1) ... (x+n-1))` and the Stirling series is
/// applied there.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("gamma", format!("argument must be positive and finite, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Ok(f64::INFINITY);
    }
    if x.fract() == 0.0 {
        return Ok(factorial(x as u32 - 1));
    }
    let mut shifted = x;
    let mut divisor = 1.0;
    while shifted < STIRLING_MIN {
        divisor *= shifted;
        shifted += 1.0;
    }
    Ok(gamma_stirling(shifted) / divisor)
}

fn gamma_stirling(x: f64) -> f64 {
    // x^(x-1/2) e^(-x) is split in two halves so that neither factor overflows
    let half = x.powf(0.5 * (x - 0.5));
    SQRT_TWO_PI * half * (half * (-x).exp()) * stirling_tail(x).exp()
}

/// Natural logarithm of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain("ln_gamma", format!("argument must be positive and finite, got {x}")));
    }
    if x < STIRLING_MIN {
        return Ok(gamma(x)?.ln());
    }
    Ok(LN_SQRT_TWO_PI + (x - 0.5) * x.ln() - x + stirling_tail(x))
}

/// Double-double accumulator used to keep the alternating Mittag-Leffler
/// series accurate for moderately large negative arguments.
#[derive(Clone, Copy, Debug)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn add(self, other: Self) -> Self {
        let (s, e) = Self::two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = Self::two_sum(s, e);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let err = self.hi.mul_add(b, -p);
        let (hi, lo) = Self::two_sum(p, err + self.lo * b);
        Self { hi, lo }
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self.add(Self::new(q1).mul_f64(-b));
        let q2 = r.hi / b;
        let (hi, lo) = Self::two_sum(q1, q2);
        Self { hi, lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Maximum number of series terms summed by [`mittag_leffler`].
pub const MITTAG_LEFFLER_MAX_TERMS: usize = 500;

/// One-parameter Mittag-Leffler function `E_α(z) = Σ z^k / Γ(αk + 1)`.
///
/// Evaluated by its power series. Summation stops at the first term whose
/// magnitude drops below `1e-16 · |partial sum|` once the terms are
/// decreasing; a [`Error::Convergence`] is returned if that does not happen
/// within [`MITTAG_LEFFLER_MAX_TERMS`] terms. Powers of `z` and the running
/// sum are carried in double-double precision.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain("mittag_leffler", format!("alpha must be positive, got {alpha}")));
    }
    if !z.is_finite() {
        return Err(domain("mittag_leffler", format!("argument must be finite, got {z}")));
    }
    let ln_abs_z = z.abs().ln();
    let mut sum = DoubleDouble::new(1.0);
    let mut power = DoubleDouble::new(1.0);
    let mut prev_magnitude = 1.0_f64;

    for k in 1..MITTAG_LEFFLER_MAX_TERMS {
        let kf = k as f64;
        let arg = alpha * kf + 1.0;
        power = power.mul_f64(z);
        let term = if arg <= 170.0 && power.hi.is_finite() && power.hi.abs() < 1e300 {
            power.div_f64(gamma(arg)?)
        } else {
            let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            DoubleDouble::new(sign * (kf * ln_abs_z - ln_gamma(arg)?).exp())
        };
        sum = sum.add(term);
        let magnitude = term.value().abs();
        if magnitude <= prev_magnitude && magnitude < 1e-16 * sum.value().abs() {
            return Ok(sum.value());
        }
        if z == 0.0 {
            return Ok(1.0);
        }
        prev_magnitude = magnitude;
    }
    Err(Error::Convergence {
        op: "mittag_leffler",
        terms: MITTAG_LEFFLER_MAX_TERMS,
    })
}
