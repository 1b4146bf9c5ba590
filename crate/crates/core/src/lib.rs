//! Robust control pulse toolkit: error-curve geometry for quasi-static
//! noise, pulse construction and gate benchmarking by simulated process
//! tomography and randomized benchmarking.
//!
//! Internal units are ns and rad/ns throughout.

pub mod channel;
pub mod clifford;
pub mod error;
pub mod fidelity;
pub mod geometry;
pub mod library;
pub mod noise;
pub mod optimizer;
pub mod pulse;
pub mod qpt;
pub mod quantum;
pub mod rb;
pub mod seeding;
pub mod twoqubit;

pub use error::{Error, Result};
