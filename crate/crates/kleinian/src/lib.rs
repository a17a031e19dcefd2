//! Exact symbolic machinery for generalized Baker–Hirota operators and the
//! Abelian functions they generate on cyclic (n,s)-curves.
//!
//! The crate is organised bottom-up:
//!
//! * [`combinat`], [`cyclo`], [`symfunc`] supply partitions, set partitions,
//!   cyclotomic coefficients and symmetric functions at roots of unity.
//! * [`hirota`] is the tensor differential algebra with the operators `D`,
//!   `H^[m]`, the symmetrizer `S` and the symbolic lattice shift.
//! * [`abelfun`] turns operator output into R-functions and expands them in
//!   Kleinian ℘-functions.
//! * [`curve`], [`klein`], [`sigma`] build σ-function expansions.
//! * [`basis`] tests linear independence and finds relations in `Γ(m)`.
//! * [`cli`] is the command-line surface used by the `kleinian` binary.

pub mod abelfun;
pub mod basis;
pub mod cli;
pub mod combinat;
pub mod curve;
pub mod cyclo;
pub mod error;
pub mod hirota;
pub mod klein;
pub mod linalg;
pub mod params;
pub mod poly;
pub mod rational;
pub mod series;
pub mod sigma;
pub mod symfunc;

pub use error::{Error, Result};
pub use rational::Q;
