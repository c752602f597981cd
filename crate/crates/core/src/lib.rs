//! Toolkit for ordered orthogonal arrays: verification, constructions, size
//! bounds, exact small-scale search, and an executable model of the
//! indicator-function space whose design property characterizes them.

pub mod bounds;
pub mod construct;
pub mod design;
pub mod error;
pub mod gf;
pub mod intmat;
pub mod io;
pub mod klp;
pub mod search;
mod serde_big;
pub mod verify;

pub use design::{ArrayParams, ColumnIndex, Shape, SymbolArray};
pub use error::{Error, Result};
