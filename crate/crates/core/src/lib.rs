//! Nondistortion interrogation of quantum systems.
//!
//! Given a finite-dimensional model of a probe wave meeting a quantum object
//! in a black box, this crate decides whether the object's presence can be
//! detected without disturbing its unknown internal state, constructs the
//! optimal success projector, computes and optimizes the success
//! probability, and cross-checks the analytic answers with a Monte Carlo
//! interrogation simulator.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`model`] describes the Hilbert spaces and dynamics and assembles the
//!    contraction operator `D` that fully characterizes the no-decay
//!    scattering of the probe off the object.
//! 2. [`conditions`] searches for witness pairs `(chi, psi_d')` whose
//!    partial contraction of `D` is proportional to the object identity,
//!    performs the kernel-space decomposition, and tests feasibility.
//! 3. [`projector`] builds the success projector by Schmidt
//!    orthogonalization, evaluates the success probability, and optimizes it
//!    over the probe split `alpha`.
//! 4. [`simulator`] realizes the full interrogation protocol trial by trial
//!    with deterministic RNG streams and verifies probabilities and
//!    nondistortion empirically.

pub mod builtin;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod linalg;
pub mod model;
pub mod modelfile;
pub mod projector;
pub mod report;
pub mod rng;
pub mod simulator;

pub use error::{NiqsError, Result};
pub use linalg::{CMatrix, CVector, Tolerances, C64};
pub use model::{ContractionOperator, Dynamics, InteractionModel, ProbeSpec, SpaceLayout};
