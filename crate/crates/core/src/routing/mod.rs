//! Transit graph over stops and line nodes, K-shortest loopless paths and
//! origin-destination trip evaluation with and without cluster transfers.

mod graph;
mod od;
mod yen;

pub use graph::*;
pub use od::*;
pub use yen::*;
