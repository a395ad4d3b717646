//! Hermitian / non-Hermitian Hamiltonian triples {H, 𝓗, 𝓗†} on tight-binding
//! lattices.
//!
//! `𝓗` carries imaginary gain/loss potentials ∓iγ on two endpoint sites A and
//! B, `H` replaces them by a real hopping κ and potential V. Real-energy
//! eigenstates of `𝓗` and `𝓗†` superpose to eigenstates of `H` at the same
//! energy, and states spanned by that common subspace evolve in parallel:
//! `e^{-iHt}ψ = e^{-i𝓗t}φ + e^{-i𝓗†t}φ̃`.
//!
//! Modules:
//! - [`lattice`]: model specs and the dense Hamiltonian triple, parity operator.
//! - [`spectral`]: general complex eigensolver, common-spectrum matching, PT
//!   gauge fixing, exceptional-point detection.
//! - [`correspondence`]: endpoint conditions, the (V, κ) constraint solver and
//!   the three-family construction ψ = φ + φ̃.
//! - [`analytic`]: closed-form states used as oracles.
//! - [`dynamics`]: matrix exponential, parallel evolution and probability audit.

pub mod analytic;
pub mod correspondence;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use lattice::{CouplingParams, HamiltonianTriple, ModelSpec, ParityOperator};
pub use linalg::{CMatrix, CVector, C64};
pub use spectral::{EigenSystem, SpectralMatch, System, Tolerances};
pub use state::StateVector;
