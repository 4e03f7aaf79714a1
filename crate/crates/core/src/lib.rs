//! Matrix-free solver library for box-constrained linear-quadratic control
//! problems with an inverse-Laplacian constraint operator.
//!
//! The outer loop is the primal-dual active-set semismooth Newton method; the
//! reduced inner systems (principal minors of the Tikhonov Hessian on the
//! inactive index set) are solved by Krylov methods accelerated with two-grid
//! and multigrid preconditioners built on a nested uniform mesh hierarchy.
//!
//! Modules:
//! - [`mesh`]: nested uniform grids in 1D/2D, quadrature weights, discrete
//!   inner products, grid transfer operators.
//! - [`poisson`]: the discrete inverse Laplacian `K` and its adjoint,
//!   matrix-free via geometric multigrid.
//! - [`active_set`]: inactive index sets, coarsening, inactive-domain
//!   geometry and the numerical boundary measure.
//! - [`operators`]: the reduced Hessian minor `G`, the inactive `L2`
//!   projector, the two-grid pair `M`/`S` and the multigrid preconditioner.
//! - [`krylov`]: CG and CGS over an abstract linear-map interface.
//! - [`ssnm`]: the semismooth Newton outer loop and grid sequencing.
//! - [`spectral`]: dense generalized-eigenvalue diagnostics.
//! - [`experiments`]: experiment configurations, data construction and CSV
//!   table emission.

pub mod active_set;
pub mod experiments;
pub mod krylov;
pub mod mesh;
pub mod operators;
pub mod poisson;
pub mod sparse;
pub mod spectral;
pub mod ssnm;

/// Errors shared across the solver modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("level mismatch: expected level {expected}, got {got}")]
    LevelMismatch { expected: usize, got: usize },

    #[error("vector length {got} does not match the {expected} interior nodes of its level")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("dimension {dim} exceeds the dense-assembly cap {cap}")]
    DenseTooLarge { dim: usize, cap: usize },

    #[error("generalized eigenvalue {re:.6e}{im:+.6e}i lies on the logarithm branch cut")]
    BranchCut { re: f64, im: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
