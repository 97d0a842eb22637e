//! Sinc-Nyström all-at-once time integration with diagonalization-based preconditioners.
//!
//! The time interval `(0, T)` is mapped to the real line and sampled at `m = 2M + 1` Sinc
//! points. Collocating the integral form of `y' = K(t) y + g(t)` at those points gives one
//! space-time linear system. Its preconditioner diagonalizes a skew-symmetric time factor, which
//! turns every application into `m` independent shifted spatial solves.

pub mod error;
pub mod krylov;
pub mod linalg;
pub mod models;
pub mod newton;
pub mod operator;
pub mod precond;
pub mod sinc;
pub mod speclab;
pub mod system;

pub use error::{Error, Result};
pub use linalg::C64;
pub use operator::SpatialOperator;
pub use sinc::{SincGrid, SincIntegrationMatrix, SincParams};
pub use system::{AllAtOnceSystem, BlockFamily, NonlinearSystem, NonlinearTerm};
