//! Pseudospectral toolkit for the derivative nonlinear Schrödinger equation on a periodic
//! box: transforms, the gauge map, the I-operator, integrating-factor RK4 solvers, lattice
//! sums of multilinear Fourier functionals and the modified energies built from them.

pub mod data;
pub mod energies;
pub mod error;
pub mod evolution;
pub mod gauge;
pub mod multilinear;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{Band, Field, Grid, ISymbol, C64};
