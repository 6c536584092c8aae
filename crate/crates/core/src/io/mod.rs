//! Record file formats read and written by the pipeline.

mod artifacts;
mod records;

pub use artifacts::*;
pub use records::*;
