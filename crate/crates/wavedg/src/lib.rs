//! Wave-equation solver in velocity-displacement form: discontinuous
//! Galerkin dG(0)/dG(1) time-stepping over continuous P1 finite elements
//! in space, with energy-identity audits and convergence-rate studies.
//!
//! The crate is organized as:
//! - [`sparse`]: CSR matrices, block assembly, and a banded direct solver;
//! - [`fem`]: 1D P1 space, assembly, projections, and error norms;
//! - [`stepper`]: the dG(0)/dG(1) block step systems and trajectories;
//! - [`energy`]: the discrete energy identity and stability diagnostics;
//! - [`study`]: manufactured solutions, refinement studies, and EOC tables.

pub mod energy;
pub mod error;
pub mod fem;
pub mod quadrature;
pub mod sparse;
pub mod stepper;
pub mod study;

pub use energy::{audit, energy, stability_bound_check, EnergyLedger, StabilityReport};
pub use error::{Error, Result};
pub use fem::{
    assemble_load, assemble_mass, assemble_stiffness, error_norms, l2_project, ritz_project,
    ExactField, FeFunction, FeSpace, Mesh1D,
};
pub use sparse::{factorize, solve, solve_prefactored, BlockSystem, Factorization, SparseMatrix};
pub use stepper::{
    initial_state, run, step_dg0, step_dg1, weak_form_residuals, Dg1Weights, DgScheme, DgState,
    DgTrajectory, IntervalRecord, Side, SpatialLoad, TimePartition,
};
pub use study::{
    eoc, errors_vs_reference, interpolation_rate_probe, nodal_errors, run_audit,
    run_spatial_study, run_temporal_study, uniform_errors, BuiltinProblem,
    DiscreteModeReference, ErrorBaseline, ErrorColumns, InterpProbeReport, ManufacturedSolution,
    MeshParameter, RateRow, RateTable, SourceTerm, StudyConfig,
};
