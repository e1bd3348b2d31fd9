//! Numerical chains of reproducing kernel Hilbert spaces built from
//! unimodular symbols on the real line.
//!
//! A unimodular u defines an antilinear conjugation K on L2(R) through its
//! distributional Fourier kernel. Compressing K to half-lines and solving
//! the associated equations yields boundary functions Phi, Psi, a symmetric
//! positive Hamiltonian H(t), entire-function data (A, B, E, theta), and the
//! reproducing kernels of the chain of invariant subspaces. Everything here
//! is verified against the closed-form example families shipped in
//! [`unimodular::oracle_for`].

pub mod boundary;
pub mod chain;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod kernel;
pub mod operator;
pub mod special;
pub mod unimodular;

pub use error::{Error, Result};
pub use num_complex::Complex64;
