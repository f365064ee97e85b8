//! Weighted bilinear finite elements on a uniform rectangular grid.

mod assembly;
mod grid;
mod quadrature;
mod solver;
mod sparse;

pub use assembly::{
    assemble_load, assemble_weighted_mass, assemble_weighted_stiffness, AssemblyOptions,
    CellClass, FemSystem,
};
pub use grid::StructuredGrid;
pub use quadrature::{gauss_legendre, QuadratureRule, ReferenceBasis};
pub use solver::{
    solve_spd, solve_spd_with_guess, LinearSolver, Preconditioner, PreparedSolver, SolveStats,
    SolverOptions,
};
pub use sparse::CsrMatrix;
