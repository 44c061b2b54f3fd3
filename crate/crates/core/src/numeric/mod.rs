//! Small dense numerical kernels: polynomial least squares and a vertex
//! enumeration LP solver for low-dimensional trust-region subproblems.

mod lp;
mod polyfit;

pub use lp::{minimize_linear, LinearProgram};
pub use polyfit::{eval_poly, fit_poly_exact, fit_poly_lstsq, PolyFitError};
