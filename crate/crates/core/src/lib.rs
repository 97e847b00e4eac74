//! sl(n) link homology of braid closures over the integers.

pub mod cube;
pub mod diagram;
pub mod graphspace;
pub mod homology;
pub mod matrix;
pub mod morphisms;
pub mod poly;
pub mod resolution;
pub mod statesum;
pub mod verify;
