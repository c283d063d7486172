//! Solver library for the semilinear time-fractional Rayleigh-Stokes problem
//!
//! ```text
//! u_t - (1 + gamma d_t^alpha) Laplace u = f(u)   in (0,1)^2 x (0,T]
//! u = 0 on the boundary,   u(0) = u0
//! ```
//!
//! with a Riemann-Liouville derivative of order `alpha` in (0,1).
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: the two structured triangulations of the unit square and P1 point evaluation
//! - [`sparse`]: CSR storage, diagonal matrices and Jacobi preconditioned CG
//! - [`fem`]: P1 stiffness, consistent and lumped mass, loads, projections and L2 norms
//! - [`cq`]: backward Euler convolution quadrature weights and the time steppers
//! - [`oracle`]: contour-integral mode responses used as an independent reference
//! - [`harness`]: convergence studies, rate fitting, reference caching and report output
pub mod cq;
pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};
pub use mesh::{MeshFamily, TriMesh};
pub use problem::{InitialData, Nonlinearity, ProblemSpec};
