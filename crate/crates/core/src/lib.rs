//! Exact solution and Monte Carlo simulation of square-lattice dimer models
//! on the torus.

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod height;
pub mod interaction;
pub mod kasteleyn;
pub mod lattice;
pub mod quadrature;
pub mod sampler;
pub mod sixvertex;
pub mod spectral;

pub use error::{Error, Result};
