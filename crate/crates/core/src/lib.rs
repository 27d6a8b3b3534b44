//! Geometric multigrid for the two-dimensional Stokes equations on
//! staggered (MAC) grids.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: mesh description, staggered index maps and field storage.
//! * [`operator`]: the discrete Stokes operator, residuals and assembly.
//! * [`smoothers`]: coupled block relaxation (Vanka, triad-wise and their
//!   augmented, modified and colored variants).
//! * [`transfer`]: staggered restriction, interpolation and coarse operators.
//! * [`multigrid`]: two-grid, V- and W-cycles and convergence measurement.
//! * [`lfa`]: local Fourier analysis of the two-grid method.
//! * [`costmodel`]: arithmetic and communication cost of the smoothers.

pub mod costmodel;
pub mod dense;
pub mod grid;
pub mod lfa;
pub mod multigrid;
pub mod operator;
pub mod smoothers;
pub mod sparse;
pub mod transfer;

pub use grid::{BoundaryData, BoundaryKind, DofLayout, Family, MeshSpec, StaggeredField};
pub use multigrid::{ConvergenceReport, CycleKind, CycleSpec, Hierarchy, Protocol};
pub use operator::{StokesProblem, WallTreatment};
pub use smoothers::{Ordering, SmootherKind, SmootherSpec};
pub use transfer::{CoarseOperator, Interpolation, TransferSpec};

use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mesh with n = {0} is not coarsenable")]
    NotCoarsenable(usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("index ({i}, {j}) out of range for family {family:?} on n = {n}")]
    IndexOutOfRange {
        family: Family,
        i: isize,
        j: isize,
        n: usize,
    },
    #[error("mesh mismatch: expected n = {expected}, got n = {got}")]
    MeshMismatch { expected: usize, got: usize },
    #[error("invalid smoother configuration: {0}")]
    InvalidSmoother(String),
    #[error("invalid phase {phase} for {kind:?}")]
    InvalidPhase { kind: SmootherKind, phase: usize },
    #[error(
        "coarse matrix is numerically singular beyond its known null space (rank {rank} of {dim})"
    )]
    SingularCoarse { rank: usize, dim: usize },
    #[error("invalid cycle configuration: {0}")]
    InvalidCycle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
