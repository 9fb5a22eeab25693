//! Named analytic functions and fractional equations.

use std::f64::consts::PI;

use fracfit::fractional_calculus::{apply_operator, FdeProblem, FracFunction, Rhs};
use fracfit::special_functions::{gamma, mittag_leffler};

use crate::error::{CliError, CliResult};

/// Growth rate and order of the population model `y = E_α(P x^α)`.
pub const POPULATION_RATE: f64 = 0.013502;
pub const POPULATION_ORDER: f64 = 1.39;

#[derive(Debug, Clone, Copy)]
pub struct NamedFunction {
    pub name: &'static str,
    pub formula: &'static str,
    /// Common step of the exponents, used to pick an exact quadrature substitution.
    pub grid: f64,
    f: fn(f64) -> f64,
}

impl NamedFunction {
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

fn population(x: f64) -> f64 {
    mittag_leffler(POPULATION_ORDER, POPULATION_RATE * x.powf(POPULATION_ORDER)).unwrap_or(f64::NAN)
}

pub const FUNCTIONS: &[NamedFunction] = &[
    NamedFunction {
        name: "mixed-power",
        formula: "x^0.75 + x^1.5",
        grid: 0.25,
        f: |x| x.powf(0.75) + x.powf(1.5),
    },
    NamedFunction {
        name: "power-1.5",
        formula: "x^1.5",
        grid: 0.5,
        f: |x| x.powf(1.5),
    },
    NamedFunction {
        name: "sqrt-shifted",
        formula: "x^0.5 - π/4",
        grid: 0.5,
        f: |x| x.sqrt() - PI / 4.0,
    },
    NamedFunction {
        name: "two-term-solution",
        formula: "x^3.5 + x^4",
        grid: 0.5,
        f: |x| x.powf(3.5) + x.powi(4),
    },
    NamedFunction {
        name: "population",
        formula: "E_1.39(0.013502 x^1.39)",
        grid: POPULATION_ORDER,
        f: population,
    },
];

pub fn function(name: &str) -> CliResult<NamedFunction> {
    FUNCTIONS.iter().find(|f| f.name == name).copied().ok_or_else(|| {
        let known: Vec<&str> = FUNCTIONS.iter().map(|f| f.name).collect();
        CliError::Input(format!("unknown function {name:?}; known: {}", known.join(", ")))
    })
}

/// A fractional equation with its exact solution.
pub struct NamedProblem {
    pub problem: FdeProblem,
    pub exact: fn(f64) -> f64,
}

pub const PROBLEM_NAMES: &[&str] = &["linear-solution", "two-term"];

/// `linear-solution`: `D^0.5 y = x^0.5/Γ(1.5)`, `y(0) = 0`, solution `x`.
/// `two-term`: `D^0.5 y + D^0.25 y + y = f`, `y(0) = 0`, solution `x^3.5 + x^4`.
pub fn problem(name: &str) -> CliResult<NamedProblem> {
    match name {
        "linear-solution" => {
            let rhs = FracFunction::monomial(1.0 / gamma(1.5)?, 0.5)?;
            Ok(NamedProblem {
                problem: FdeProblem::new(vec![(0.5, 1.0)], 0.0, Rhs::Frac(rhs), 0.0, 1.0)?,
                exact: |x| x,
            })
        }
        "two-term" => {
            let terms = vec![(0.5, 1.0), (0.25, 1.0)];
            let exact = FracFunction::new(vec![(1.0, 3.5), (1.0, 4.0)])?;
            let lhs = FdeProblem::new(terms.clone(), 1.0, Rhs::Frac(FracFunction::zero()), 0.0, 1.0)?;
            let rhs = apply_operator(&lhs, &exact)?;
            Ok(NamedProblem {
                problem: FdeProblem::new(terms, 1.0, Rhs::Frac(rhs), 0.0, 1.0)?,
                exact: |x| x.powf(3.5) + x.powi(4),
            })
        }
        other => Err(CliError::Input(format!(
            "unknown problem {other:?}; known: {}",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

/// Largest step `1/q` (`q ≤ 64`) dividing every value, if any.
pub fn common_step(values: &[f64]) -> Option<f64> {
    (1..=64u32).find_map(|q| {
        let q = f64::from(q);
        values
            .iter()
            .all(|v| ((v * q) - (v * q).round()).abs() <= 1e-9)
            .then_some(1.0 / q)
    })
}
