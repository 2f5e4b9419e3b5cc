//! Nonconforming finite element laboratory for the Poisson problem on the
//! unit square: the smoothed Crouzeix-Raviart discretization for general
//! `H^{-1}` sources, hierarchical a posteriori error estimators that are
//! strictly equivalent to the broken `H^1` error, and uniform/adaptive
//! refinement drivers.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`] - conforming triangulations with newest-vertex bisection,
//! * [`quad`] - fixed quadrature rules (triangles exact to degree 7,
//!   segments exact to degree 9),
//! * [`fe`] - Crouzeix-Raviart and hierarchical conforming (hat + bubble)
//!   function spaces,
//! * [`transfer`] - the averaging operator and the moment-preserving
//!   smoother connecting the two spaces,
//! * [`problem`] - source terms with a line-measure part and manufactured
//!   exact solutions, including triangle/line clipping,
//! * [`solver`] - sparse assembly and a preconditioned conjugate gradient
//!   solver,
//! * [`estimator`] - the error indicators and their combination into
//!   reports,
//! * [`driver`] - refinement loops, Doerfler marking, and file output
//!   (CSV, VTK, SVG).

pub mod driver;
pub mod estimator;
pub mod fe;
pub mod mesh;
pub mod problem;
pub mod quad;
pub mod solver;
pub mod transfer;

use thiserror::Error;

/// Errors produced by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element id {0} out of range")]
    ElementOutOfRange(usize),
    #[error("edge id {0} out of range")]
    EdgeOutOfRange(usize),
    #[error("vertex id {0} out of range")]
    VertexOutOfRange(usize),
    #[error("marked element id {0} out of range")]
    MarkedOutOfRange(usize),
    #[error("refinement completion stalled; inconsistent refinement-edge assignment")]
    CompletionStalled,
    #[error("mesh is not conforming: edge between vertices {0} and {1} has {2} incident elements")]
    NonConforming(usize, usize, usize),
    #[error("element {0} has non-positive area or repeated vertices")]
    DegenerateElement(usize),
    #[error("bubble energy requested for boundary edge {0}")]
    BoundaryEdgeBubble(usize),
    #[error("lambda must lie strictly inside (0,1), got {0}")]
    LambdaOutOfRange(f64),
    #[error("conjugate gradient exceeded {cap} iterations (relative residual {residual:.3e})")]
    CgIterationCap { cap: usize, residual: f64 },
    #[error("matrix is not positive definite (failure at pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("patch Gram matrix singular at vertex {0}")]
    SingularPatchMatrix(usize),
    #[error("estimator parts computed on different meshes ({0} vs {1} elements)")]
    MeshMismatch(usize, usize),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
