//! Exact p-adic linear algebra for F-crystals over finite fields.
//!
//! An F-crystal of rank `n` over `F_{p^a}` is stored as the matrix `A` of its
//! sigma-linear Frobenius, `F(v) = A * sigma(v)`, with entries in the Witt
//! vectors `W(F_{p^a})` truncated modulo `p^N`. On top of that the crate
//! computes Hodge and Newton polygons, validates self-dual (similitude)
//! structures, and constructs the Newton-Hodge decomposition of plain and
//! self-dual crystals at a break point, together with certificates.

pub mod crystal;
pub mod error;
pub mod family;
pub mod io;
pub mod matlat;
pub mod newton_hodge;
pub mod polygon;
pub mod report;
pub mod sample;
pub mod selfdual;
pub mod witt;

pub use crystal::{FCrystal, MazurReport};
pub use error::{Error, Result};
pub use family::{CrystalFamily, FamilyReport};
pub use matlat::{Lattice, Mat, ScaledInverse, SmithForm};
pub use newton_hodge::{BreakPointHypothesis, Decomposition, SelfDualDecomposition, SplitOptions};
pub use polygon::SlopePolygon;
pub use selfdual::{FormKind, SelfDualCrystal};
pub use witt::{Ring, RingParams, Valuation, Witt};
