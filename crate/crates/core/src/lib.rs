//! Diffuse domain finite-element solver for linear parabolic problems with
//! Neumann data on irregular domains.
//!
//! The physical domain `D` is described implicitly through its signed distance
//! function. A smooth phase field `ω_ε = (1 + tanh(-3 d_D / ε)) / 2` replaces the
//! indicator of `D`, so the problem can be posed and discretized on a covering
//! rectangle with bilinear elements:
//!
//! ```text
//! (u_t, v)_ω + (A ∇u, ∇v)_ω = (f, v)_ω + ∫ g v |∇ω| dx
//! ```
//!
//! Time stepping uses BDF2 with a single backward-Euler start-up step, and the
//! error against a manufactured solution is measured in the weighted `L²` and
//! `H¹` norms restricted to `D`.
//!
//! Module map:
//!
//! * [`geometry`]: signed distance, closest-point projection, phase field.
//! * [`extension`]: problem data and its extension off `D` / `∂D`.
//! * [`fem`]: structured grid, quadrature, weighted Q1 assembly, sparse solvers.
//! * [`time`]: backward Euler / BDF2 transient driver.
//! * [`norms`]: weighted error norms and convergence-rate tables.
//! * [`oracle`]: brute-force reference computations for verification.
//! * [`experiment`]: declarative experiment configs, sweeps and file output.

pub mod error;
pub mod experiment;
pub mod extension;
pub mod fem;
pub mod geometry;
pub mod norms;
pub mod oracle;
pub mod time;

pub use error::{DdmError, Result};
pub use geometry::{Point, Vector};
