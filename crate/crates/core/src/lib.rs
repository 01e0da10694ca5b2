//! Twisted L² invariants of discretized manifolds.
//!
//! * [`vn_core`]: finite von Neumann algebras, Hilbertian modules, commutant
//!   traces and spectral density functions.
//! * [`complex_core`]: finite Hilbertian complexes, Laplacians, reduced
//!   cohomology, density bookkeeping and the abstract Morse-type inequalities.
//! * [`geometry`]: torus grids, triangulated surfaces, twisting cocycles,
//!   local systems and cyclic covers.
//! * [`twisted`]: twisted Laplacians, theta functions, Novikov–Shubin fits and
//!   the exact Fourier-multiplier backend for flat tori.
//! * [`morse`]: Morse 1-forms, the harmonic-oscillator model operator, Witten
//!   deformation sweeps and the Morse inequality checkers.

pub mod complex_core;
pub mod eigs;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod morse;
pub mod twisted;
pub mod vn_core;

pub use error::{Error, Result};
