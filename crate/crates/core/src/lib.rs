//! Spatial ARMA random fields on Z^d.
//!
//! The crate decides whether the lattice equation
//! `Y_t − Σ_R φ_n Y_{t−n} = Z_t + Σ_S θ_n Z_{t−n}` admits strictly stationary
//! (linear or causal) solutions, computes the solution coefficients in three
//! independent ways, and simulates and verifies solution fields.
//!
//! * [`poly`]: multi-indices, Laurent polynomials, models.
//! * [`spectral`]: torus quadrature, coefficient extraction, zero search.
//! * [`noise`]: innovation laws with exact tails and moment facts.
//! * [`existence`]: verdicts assembled from spectral and moment evidence.
//! * [`delannoy`]: the first-order planar model in closed form.
//! * [`simulator`]: counter-based fields, residuals and convergence diagnostics.
//!
//! The `parallel` feature (on by default) runs tiled kernels on rayon. Every
//! reduction happens in a fixed tile order, so results are bit-identical with
//! or without it.

pub mod delannoy;
pub mod error;
pub mod existence;
pub mod export;
pub mod fft;
pub mod noise;
pub mod par;
pub mod poly;
pub mod simulator;
pub mod spectral;

pub use error::{Error, Result};
pub use noise::{NoiseFamily, NoiseSpec};
pub use poly::{arma_polys, eval_torus_grid, IndexBox, LaurentPoly, ModelSpec, MultiIndex};
pub use spectral::{CoefficientField, SpectralClassification, SupportKind, TorusGrid, Verdict};

pub use num_complex::Complex64;
