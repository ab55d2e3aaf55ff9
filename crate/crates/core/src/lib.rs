//! Mixed finite-element solver for the fully coupled quasi-static
//! thermo-poroelastic system with nonlinear convective heat transport.
//!
//! The unknowns are temperature `T`, heat flux `r`, pressure `p`, Darcy flux
//! `w`, total stress `σ` and displacement `u`, discretized on structured
//! triangulations of the unit square with lowest-order Raviart–Thomas fluxes,
//! row-wise Brezzi–Douglas–Marini stresses with weakly imposed symmetry, and
//! piecewise-constant scalars and displacements. Time stepping is implicit
//! Euler and the convective term is resolved by a fixed-point (Picard)
//! iteration in the heat flux.
//!
//! Beyond the solver, the crate turns the well-posedness theory of the model
//! into runtime checks: coefficient admissibility, nonsingularity of the DAE
//! matrix pencil, energy-estimate ratios and the Picard contraction constant.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod cli_io;
pub mod diagnostics;
pub mod mesh;
pub mod par;
pub mod params;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod spaces;
pub mod tensor;
pub mod verification;

pub use assembly::{BlockSystem, Blocks};
pub use mesh::TriMesh;
pub use par::Execution;
pub use params::{ConstraintReport, DerivedCoeffs, MaterialParams};
pub use problem::ProblemData;
pub use solver::{PicardLog, SolverOptions, State};
pub use spaces::{Field, SpaceLayout};
