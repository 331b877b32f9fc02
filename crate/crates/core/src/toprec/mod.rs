//! Generalized topological recursion: level-by-level construction of the
//! multi-differential table from residues at key points, plus the loop
//! equation and projection-property verifiers.

pub(crate) mod checks;
mod engine;
mod tensor;

pub use checks::{check_loop_eq, check_projection};
pub use engine::{Recursion, SpecKey, TrParams, WField};
pub use tensor::{set_partitions, OmegaGN};
