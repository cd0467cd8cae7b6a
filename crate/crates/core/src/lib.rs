//! Information geometry of Poisson states.
//!
//! A Poisson state is fully described by a finite-dimensional intensity
//! operator `Γ`. Fidelities, Chernoff quantities, relative entropies and the
//! Helstrom information of Poisson states are closed-form functionals of
//! `Γ`, and quantum channels act on `Γ` by affine maps. This crate computes
//! those functionals, checks them against finite-`M` rare-state
//! calculations, samples counting data, and evaluates the superresolution
//! benchmark for two incoherent (or partially coherent) point sources.

pub mod error;
pub mod psd;
pub mod state;
pub mod divergences;
pub mod lyapunov;
pub mod estimation;
pub mod imaging;
pub mod channels;
pub mod oracle;
pub mod kac;
pub mod io;

pub use error::{Error, Result};
pub use psd::{CMatrix, HermitianMatrix, PsdMatrix, Tolerances};
pub use state::{DensityOperator, IntensityOperator, RareStateSpec};
pub use divergences::{Divergence, DivergenceKind, DivergenceReport, IntensityVector};
