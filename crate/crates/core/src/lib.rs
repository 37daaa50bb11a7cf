//! Renormalization nests for bimodal cubic interval maps.

pub mod combinatorics;
pub mod interval;
pub mod nest;
pub mod polynomial;
pub mod realization;
pub mod separation;
pub mod walk;

pub use interval::Interval;
pub use polynomial::{make_cubic, make_symmetric_cubic, CubicMap, FamilySign, PolyError};
