//! Numerical laboratory for small open bipartite quantum systems.
//!
//! A system `A` is coupled to an environment `E` through a static Hamiltonian
//! `H = H_A (x) I + I (x) H_E + H_AE`. The crate evolves a global pure start
//! exactly, measures the entanglement entropy of the reduced state and its
//! initial growth rate against the area-law bound, tests whether the reduced
//! dynamics composes as a semi-group, and carries the closed-form spin-boson
//! and Zassenhaus results together with brute-force checks of them.

pub mod divisibility;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod model;
pub mod random;
pub mod spin_boson;
pub mod zassenhaus;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use num_complex::Complex64;
