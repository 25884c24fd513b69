//! Classical pseudodifferential symbols on the flat circle and torus.

pub mod error;
pub mod fiber;
pub mod jet;
mod local;
pub mod manifold;
pub mod oracle;
pub mod projection;
pub mod random;
pub mod residue;
pub mod spectral;
pub mod symbol;

pub use error::{Error, Result};
pub use fiber::C64;
pub use manifold::ModelManifold;
pub use oracle::GridOperator;
pub use symbol::{ClassicalSymbol, HomogeneousTerm};
