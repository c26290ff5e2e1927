//! Kähler geometry of Pauli-Jordan operators, Sorkin-Johnston states and
//! their Fock-space and symbol-calculus realizations.

pub mod causet;
pub mod diagnostics;
pub mod cfield;
pub mod error;
pub mod fock;
pub mod io;
pub mod kahler;
pub mod linalg;
pub mod pipeline;
pub mod sj;
pub mod symbol;

pub use error::{Error, Result};
