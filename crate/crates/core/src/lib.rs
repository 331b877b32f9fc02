//! Topological recursion on genus-0 and genus-1 spectral curves, assembly of
//! the non-perturbative theta-dressed differentials, and numerical checks of
//! their structural identities (loop equations, projection property, x-y
//! swap, deformation along dy, KP determinantal relations).

pub mod error;
pub mod curve;
pub mod series;
pub mod np;
pub mod testfix;
pub mod theta;
pub mod toprec;

pub use error::{Error, Result};
