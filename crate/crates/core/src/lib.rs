pub mod asymptotics;
pub mod coeff;
pub mod error;
pub mod integrator;
pub mod io;
pub mod phase_sets;
pub mod potential;
pub mod rational;

pub use error::{Error, Result};
