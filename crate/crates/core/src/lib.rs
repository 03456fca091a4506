//! Finite-scale laboratory for 2-colorings of pairs: patterns and their
//! realizations, separable permutations, fractal bases, homogeneous-set
//! extraction, stagewise order constructions and largeness notions.

pub mod cli;
pub mod constructions;
pub mod error;
pub mod fractal;
pub mod homogeneous;
pub mod largeness;
pub mod pattern_core;
pub mod perm_algebra;

pub use error::{Error, Result};
pub use pattern_core::{
    avoids, dual, find_realization, is_transitive, pattern_to_perm, perm_to_pattern, realizes,
    Coloring, FiniteColoring, Pattern, SearchOutcome, StableColoring, VertexSet,
};
pub use perm_algebra::{Permutation, SeparatingTree, SumOp};
