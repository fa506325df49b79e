//! Two-scale solver for periodic acoustic metasurfaces.
//!
//! The transmission layer is replaced by an interface whose behaviour is
//! summarized by four coefficients computed from two periodic cell problems.
//! On top of the forward pipeline sit an adjoint solve, a topological
//! derivative, and a level-set optimizer that redistributes air and a stiff
//! elastic material inside the cell. A brute-force solver on the full cell
//! array serves as the verification oracle.

pub mod adjoint;
pub mod cell;
pub mod config;
pub mod error;
pub mod fem;
pub mod io;
pub mod levelset;
pub mod macroscale;
pub mod mesh;
pub mod optimizer;
pub mod par;
pub mod reference;
pub mod sensitivity;
pub mod workflow;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
