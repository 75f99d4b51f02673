//! Simulation of multi-component coherent-state superpositions prepared by
//! resonant atom passages through a high-Q cavity.
//!
//! * [`fock`]: truncated Fock-space states, displacement matrix elements,
//!   coherent overlaps and density matrices.
//! * [`jc`]: conditional atom passages and the linearized superposition form.
//! * [`phase_space`]: Wigner and Q functions, grids, and Q-function zeros.
//! * [`homodyne`]: reference-field injection and the probe-atom phase scan.
//! * [`decoherence`]: exact dyad damping and a Fock-basis master-equation
//!   integrator.
//! * [`io`], [`scenario`]: file formats and configuration.
//! * [`acceptance`]: the end-to-end reproduction checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod decoherence;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod io;
pub mod jc;
pub mod phase_space;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
