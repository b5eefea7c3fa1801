//! Height and diameter statistics of stable Lévy trees.
//!
//! The library has three layers:
//!
//! * exact piecewise-linear arithmetic for coding functions of rooted real
//!   trees ([`excursion`]): tree metric, total height, diameter, rerooting,
//!   concatenation, and the spinal decomposition with its exact inverse;
//! * special-function numerics for the stable branching mechanism
//!   `Ψ(λ) = λ^γ`, `γ ∈ (1, 2]`: the implicit solvers ([`branching`]), the
//!   one-sided stable density and its derived kernels ([`stablefn`]), the
//!   coefficient recursions and closed-form constants ([`coeffs`]), and the
//!   evaluable distribution laws of the normalized tree ([`laws`]);
//! * Monte-Carlo verification against Galton-Watson trees conditioned on
//!   their total size ([`simulate`]).
//!
//! The `levytree` binary (see [`cli`]) exposes the laws, coefficient tables,
//! consistency suites and simulations as CSV/JSON artifacts.

pub mod branching;
pub mod cli;
pub mod coeffs;
pub mod excursion;
pub mod laws;
pub mod numeric;
pub mod simulate;
pub mod stablefn;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to converge; carries the last bracket.
    #[error("solver did not converge within {max_iter} iterations; last bracket [{lo}, {hi}]")]
    Solver { lo: f64, hi: f64, max_iter: usize },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}, requested {requested}")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        requested: f64,
    },

    /// The requested evaluation lies outside the numerically supported range.
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),

    /// A case the formulas exclude (e.g. small-r constants at γ = 2).
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    /// Structured input failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// A least-squares fit was too ill-conditioned to trust.
    #[error("conditioning failure: condition estimate {0:.3e}")]
    Conditioning(f64),

    /// I/O error from the CLI layer.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
