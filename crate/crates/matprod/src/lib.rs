//! Spectral statistics of products of bi-unitarily invariant complex
//! random matrices from polynomial ensembles of derivative type.
//!
//! The crate is organized around an exact symbol algebra for Mellin
//! transforms ([`mellin`]), a catalog of weight-function families closed
//! under matrix products and inversion ([`ensembles`]), the induced joint
//! densities and determinantal kernels ([`densities`], [`kernels`]), the
//! spherical transform on GL(n, ℂ) ([`spherical`]), and seeded Monte
//! Carlo machinery that checks all of it against sampled matrix products
//! ([`sampling`], [`lyapunov`]).
//!
//! Start with the runnable examples (`cargo run --example catalog`) or
//! the `matprod` binary, which exposes the same functionality as
//! subcommands emitting CSV/JSON tables.

pub mod densities;
pub mod ensembles;
pub mod error;
pub mod expr;
pub mod kernels;
pub mod lyapunov;
pub mod mellin;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod special;
pub mod spherical;

pub use error::{Error, Result};
