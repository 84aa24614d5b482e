//! Boundary spin correlations of the critical Z-invariant Ising model,
//! computed from the shape of a polygonal region.
//!
//! A region is a matching `τ` on `[2n]` together with an angle sequence
//! `θ`. [`correlate::correlations`] turns it into the `n x n` boundary
//! correlation matrix by building a spanning basis of a curve attached to the
//! region and inverting a doubling map. [`oracle`] recomputes the same matrix
//! by exact enumeration on an explicit weighted graph.
//!
//! Indices are 1-based throughout the public API.

pub mod correlate;
pub mod curve;
pub mod exec;
pub mod numerics;
pub mod oracle;
pub mod region;
pub mod sweep;

pub use correlate::{correlations, BasisStrategy, CorrelationMatrix, DoubledMatrix};
pub use exec::Execution;
pub use numerics::TolerancePolicy;
pub use region::{Matching, Region};
