//! Sampled classical symbols.

mod classical;
pub mod serialize;
mod term;

pub use classical::ClassicalSymbol;
pub use term::HomogeneousTerm;
