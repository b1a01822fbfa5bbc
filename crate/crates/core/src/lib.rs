//! Exact planar shallow-partition laboratory.
//!
//! Builds the adversarial point sets of the shallow-partition lower bound,
//! computes k-levels and conflict sets in the dual plane, evaluates crossing
//! numbers of k-partitions exactly, and checks the tree-coloring argument on
//! concrete colorings.

pub mod adversary;
pub mod error;
pub mod geom;
pub mod levels;
pub mod partition;
pub mod treecolor;
pub mod io;
pub mod experiment;

pub use error::{Error, Result};
pub use geom::{Line, Point, Rational, Side};
