//! Quasicontractive stochastic flows, their perturbations and Feynman-Kac
//! semigroups on finite-dimensional algebras.
//!
//! The noise space has multiplicity `d`; `k̂ ⊗ h` is ordered as
//! `h ⊕ (C^d ⊗ h)` with the vacuum component first.

pub mod cli;
pub mod coeff;
pub mod error;
pub mod flow;
pub mod io;
pub mod fock;
pub mod matelem;
pub mod numerics;
pub mod perturb;

pub use error::{Error, Result};
pub use numerics::CMatrix;
