//! Helmholtz scattering of an aperiodic point source by a periodic
//! sound-hard boundary, computed as a Floquet-Bloch integral of
//! quasi-periodic boundary integral solves.

pub mod assembly;
pub mod config;
pub mod error;
pub mod exec;
pub mod floquet;
pub mod io;
pub mod geometry;
pub mod layer;
pub mod linalg;
pub mod lowrank;
pub mod point;
pub mod quadrature;
pub mod runner;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use point::Point;
