//! Numerical toolkit for fluctuation-enhanced quantum metrology.
//!
//! A spin probe (plus one ancilla) evolves under a field whose direction or
//! rotation frequency is to be estimated while the field strength fluctuates.
//! The crate provides:
//!
//! * [`qmat`]: small dense complex linear algebra (Jacobi eigensolver,
//!   matrix exponential, PSD square root, partial trace, polar isometries).
//! * [`dynamics`]: the direction (θ) and rotating-frequency (Ω) models,
//!   a fixed-step RK4 Lindblad integrator, and stochastic phase trajectories.
//! * [`metrology`]: fidelity, SLD, quantum and classical Fisher information,
//!   and the closed-form QFI expressions used as references.
//! * [`qec`]: adaptive error-correcting codes, recovery channels, corrected
//!   evolution and the general second-order expansion engine.
//! * [`estimation`]: the adaptive maximum-likelihood protocol and
//!   Monte-Carlo mean-squared-error campaigns.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod metrology;
pub mod qec;
pub mod qmat;

pub use error::{Error, Result};
pub use qmat::{CMatrix, CVector, DensityMatrix, C64};
