pub mod error;
pub mod fractional_calculus;
pub mod fractional_poly;
pub mod least_squares;
pub mod option_pricing;
pub mod orthogonal_basis;
pub mod quadrature;
pub mod special_functions;

pub use error::{Error, Result};
