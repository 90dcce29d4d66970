//! Dynamical quantum state tomography: reconstruct a state from a single
//! measurement observed under engineered unitary dynamics.

pub mod avgchannel;
pub mod error;
pub mod householder;
pub mod matcore;
pub mod parallel;
pub mod povm;
pub mod rng;
pub mod rud;
pub mod schedule;
pub mod weyl;
pub mod worked_example;

pub use error::{Error, Result};
pub use matcore::{CMatrix, C64};
