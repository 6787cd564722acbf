//! Space-time continuous Galerkin finite elements for the linear
//! time-dependent Schrödinger equation
//!
//! ```text
//!   i ∂_t ψ − Δ_x ψ = f   in Ω × (0, T),
//!                ψ = 0   on ∂Ω × [0, T],
//!          ψ(·, 0) = ψ0  in Ω,
//! ```
//!
//! discretized with tensor-product P1 × P1 trial and test functions. The
//! global system `(i B_t ⊗ M_x + M_t ⊗ A_x) ψ = f` is solved by a direct
//! Kronecker solver that decomposes the small temporal core
//! `(i B_t)^{-1} M_t = X_t S_t X_t^{-1}` either by a complex Schur form
//! (Bartels–Stewart) or by an eigendecomposition (fast diagonalization).
//! The latter decouples the spatial problems so they can be solved in
//! parallel.
//!
//! Module overview:
//!
//! * [`spatial_mesh`], [`temporal_mesh`]: meshes and refinement.
//! * [`assembly`]: `M_x`, `A_x`, `M_t`, `B_t` and the load vector.
//! * [`dense`]: small dense complex linear algebra (LU, Schur, eigenvectors).
//! * [`spatial_solver`]: sparse LDLᵀ for the shifted spatial systems.
//! * [`kronecker`]: the space-time solver.
//! * [`problem`], [`error_analysis`]: manufactured solutions and space-time errors.
//! * [`harness`]: run configuration, convergence studies and result tables.

pub mod assembly;
pub mod dense;
pub mod error;
pub mod error_analysis;
pub mod harness;
pub mod kronecker;
pub mod problem;
pub mod quadrature;
pub mod sparse;
pub mod spatial_mesh;
pub mod spatial_solver;
pub mod temporal_mesh;

pub use num_complex::Complex64;

pub use assembly::{
    assemble_rhs, assemble_spatial, assemble_temporal, BlockVector, SpatialMatrices,
    TemporalMatrices,
};
pub use dense::{
    dense_solve, eigen_decompose, form_temporal_core, schur_decompose, spectral_condition,
    DecompositionKind, DenseComplexMatrix, TemporalFactors,
};
pub use error::{Error, Result};
pub use error_analysis::{eoc, evaluate_fe, spacetime_errors, ErrorPair};
pub use harness::{
    emit, parse_csv, run_convergence, run_level, ConvergenceRow, LevelResult, OutputFormat,
    ProblemPreset, RunConfig, SpatialPreset, TemporalPreset,
};
pub use kronecker::{
    apply_global, solve, transform_blocks, Method, SolveReport, SolverVariant, StepTimings,
};
pub use problem::{ExactSolution, Manufactured, ZeroSource};
pub use sparse::SparseRealMatrix;
pub use spatial_mesh::SpatialMesh;
pub use spatial_solver::{SpatialAnalysis, SpatialFactorization};
pub use temporal_mesh::TemporalMesh;
