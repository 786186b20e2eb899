//! Spectral H2 analysis of linear consensus networks.
//!
//! A network of identical linear subsystems coupled through a weighted
//! undirected graph has steady-state output variance equal to a sum of a
//! rational function `φ` over the nonzero Laplacian eigenvalues. This crate
//! evaluates `φ` and its relatives, designs gains, bounds and approximates
//! the spectral sums, and checks them against full-network solves and
//! Monte-Carlo simulation.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases at the crate root fix the scalar to `f64`.

pub mod bounds;
pub mod composite;
pub mod design;
pub mod error;
pub mod fixtures;
pub mod fit;
pub mod graph;
pub mod io;
pub mod model;
pub mod linalg;
pub mod quadrature;
pub mod scalar;
pub mod simulate;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat64 = linalg::Mat<f64>;
pub type SubsystemModel64 = model::SubsystemModel<f64>;
pub type WeightedGraph64 = graph::WeightedGraph<f64>;
pub type PerformanceFunction64 = spectral::PerformanceFunction<f64>;
pub type CompositeSpec64 = model::CompositeSpec<f64>;
pub type GainSet64 = model::GainSet<f64>;
pub type ClosedLoopNetwork64 = model::ClosedLoopNetwork<f64>;
