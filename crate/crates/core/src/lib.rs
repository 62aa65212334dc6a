//! Finite-wave-speed closures for piecewise-smooth contact models.
//!
//! The crate turns a distributed string with a switching point force into a
//! small closed model: the contact history enters either through an
//! instantaneous gain plus a relaxation state, or through a convolution with
//! the reflection kernel. On top of that sit the event-driven hybrid
//! integrator (free flow, sliding, certified switching) and the concrete
//! scenario builders with their analysis formulas.

pub mod config;
pub mod error;
pub mod hybrid;
pub mod io;
pub mod memory;
pub mod model;
pub mod runner;
pub mod scenarios;
pub mod string;
pub mod tol;
mod util;

pub use error::{Error, Result};
