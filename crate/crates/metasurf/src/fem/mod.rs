//! Lagrange P1/P2 finite elements on triangles and segments.
//!
//! Spaces map mesh entities to global DOFs (optionally merging periodic
//! pairs), assembly turns a list of weak-form terms into real coordinate
//! matrices, and [`SparseSystem`] stitches real blocks with real or complex
//! weights into one monolithic system solved by sparse LU.

mod assembly;
mod element;
mod quadrature;
mod sparse;
mod space;

pub use assembly::{assemble_line, assemble_matrix, assemble_vector, Coo, LineOp, RegionCoef, Source, Term};
pub use element::{geometry, line_basis, p2_grads, p2_values, ElementGeometry};
pub use quadrature::{gauss_legendre, tri_rule, TriRule};
pub use sparse::{BlockLayout, Factorization, Scalar, SparseSystem};
pub use space::{EdgeTable, FunctionSpace, LineMesh, LineSpace, Order, SegmentDofs};
