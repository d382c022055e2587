//! Exact group arithmetic: integer matrices and the symmetric-square
//! embedding, Heisenberg elements and automorphisms, reduced free-group
//! words, and Haar sampling on SU(d).

pub mod free_word;
pub mod heisenberg;
pub mod int_matrix;
pub mod unitary;

pub use free_word::FreeWord;
pub use heisenberg::{HeisAuto, HeisPoint};
pub use int_matrix::{q_fixed_vector, q_of, IntMatrix};
pub use unitary::{haar_su, CMat};
