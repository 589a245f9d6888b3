//! Countable-branch hyperbolic maps of the unit square.
//!
//! The crate is layered bottom-up:
//!
//! - [`map_model`]: branch maps, the a.e.-defined map `F` and built-in families
//! - [`conditions`]: sampled checks of the geometric, hyperbolicity,
//!   distortion and cone conditions
//! - [`symbolic`]: itineraries, cylinders, strips and transition structures
//! - [`manifolds`]: stable and unstable curves, slope fields, ratio suites
//! - [`thermo`]: potentials, partition sums, pressure and the Ruelle operator
//! - [`srb`]: orbits, Birkhoff averages, Lyapunov exponents and correlation decay
//! - [`cli`]: the command-line front end

pub mod cli;
pub mod conditions;
pub mod error;
pub mod manifolds;
pub mod map_model;
pub mod numerics;
pub mod srb;
pub mod symbolic;
pub mod thermo;

pub use error::{Error, Result};
