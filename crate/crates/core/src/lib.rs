//! Ensemble reservoir computing.
//!
//! Simulates ensembles of identical input-driven dynamical systems, averages
//! observation functions of their states across trials, trains linear
//! readouts on the averages and measures memory and information processing
//! capacity.

pub mod capacity;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lyapunov;
pub mod readout;
pub mod tasks;

pub use error::{ErcError, Result};
