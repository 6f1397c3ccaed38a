//! Exact rational scalars, 2x2 matrices, rank-2 lattices and cusp symmetry groups.

pub mod lattice;
pub mod matrix;
pub mod rational;
pub mod symmetry;

pub use lattice::{canonical_lattice, integer_index, lattice_index, lattice_intersect, lattice_sum, Lattice2};
pub use matrix::{Matrix2, Vector2};
pub use rational::{format_rational, int, parse_rational, ratio, Rational};
pub use symmetry::{conjugates_into, coset_canonical, CyclicSymmetry};
