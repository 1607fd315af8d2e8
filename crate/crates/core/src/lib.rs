//! Classical engine for kicked quantum dynamics: variational (McLachlan)
//! propagation while a short external field is on, followed by exact
//! fixed-depth Cartan (KHK) fast-forwarding once it has vanished.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds an
//! FFT-backed spectral transform; every other routine is identical in both
//! builds, and all floating-point math goes through `libm` so results do not
//! depend on the feature set.
//!
//! Module map:
//!
//! - [`pauli`]: symplectic Pauli strings, real Pauli sums, Lie closure, Killing form.
//! - [`cartan`]: involution split, Cartan subalgebra, `f(K)` minimization, fast-forward.
//! - [`state`]: dense state vectors and the eigendecomposition oracle.
//! - [`ansatz`]: exponentiated-Pauli circuits and their exact derivative states.
//! - [`vqds`]: McLachlan linear systems and time stepping.
//! - [`pipeline`]: kick field, hybrid run, exact reference run.
//! - [`spectra`]: damped transforms, polarizability, susceptibility, magnons.
//! - [`models`]: Ising, Heisenberg and ingested molecular model bundles.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ansatz;
pub mod cartan;
mod error;
pub mod linalg;
pub mod math;
pub mod models;
pub mod pauli;
pub mod pipeline;
pub mod spectra;
pub mod state;
pub mod vqds;

pub use ansatz::{AnsatzCircuit, GeneratorGroup};
pub use cartan::{CartanFactorization, CartanOptions, CartanSplit, InvolutionTag};
pub use error::{Error, Result};
pub use pauli::{LieBasis, Pauli, PauliString, PauliSum, Phase};
pub use state::{DensePropagator, StateVector};
