//! Exact computations on generalized Bratteli diagrams.

pub mod cli;
pub mod diagram;
pub mod error;
pub mod extension;
pub mod limits;
pub mod linalg;
pub mod measures;
pub mod num;
pub mod vershik;

pub use diagram::{build_diagram, build_subdiagram, Diagram, Family, LevelWindow, SubdiagramSpec, VertexKey};
pub use error::{Error, Result};
