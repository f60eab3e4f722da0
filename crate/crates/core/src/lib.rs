//! Chain domains, their Neumann spectra by P1 finite elements, nodal-domain counts, and
//! numerical checks of the nodal bounds that hold uniformly in the neck widths.

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod fem;
pub mod mesh;
pub mod nodal;
pub mod partition;

pub use error::{ChainError, Result};
