//! Pseudo-spectral laboratory for the rotating, stratified primitive
//! equations on a periodic box and their quasi-geostrophic limit.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] and [`field`]: periodic discretization, transforms and the
//!   basic Fourier multipliers.
//! * [`structure`]: potential vorticity, the QG/oscillating projectors and
//!   the diffusion operators.
//! * [`pe`] and [`qg`]: integrating-factor RK4 solvers for the penalized
//!   system and for the limit system.
//! * [`diagnostics`]: Sobolev norms, truncations, residuals and condition
//!   evaluators.
//! * [`config`], [`init`], [`sweep`], [`export`] and [`cli`]: the
//!   experiment harness.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod export;
pub mod expm;
pub mod field;
pub mod grid;
pub mod init;
pub mod invariants;
pub mod params;
pub mod pe;
pub mod qg;
pub mod structure;
pub mod sweep;

pub use error::{Error, Result};
pub use field::{Axis, FieldLike, ScalarField, State4};
pub use grid::Grid;
pub use params::Params;
