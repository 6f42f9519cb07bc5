//! Quantum electrodynamics of a chain of two-level centers coupled to
//! quantized field and phonon modes: Hilbert-space bookkeeping, the
//! transition-operator algebra, model Hamiltonians, exact and mean-field
//! dynamics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod hamiltonian;
pub mod hilbert;
pub mod meanfield;
pub mod trajectory;
pub mod transition_ops;

pub use num_complex::Complex64 as C64;
