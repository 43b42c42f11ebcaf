//! Digital Twin Graph (DTG) core library.
//!
//! A DTG models a physical system as a graph of *entity graphs*: each entity's
//! sensor features form a correlation graph, and directed arcs between entities
//! carry learned graph-to-graph (G2G) transformation models. On top of that
//! sit GAN-based fusion with external domain-knowledge models, fixed-point
//! propagation of status changes, and a lazy-training model database.
//!
//! Layers, bottom up:
//! - [`numerics`]: dense matrices, seeded RNG, SGD, k-means, gradient oracle.
//! - [`entity_graph`]: per-entity correlation graphs and feature regressors.
//! - [`g2g`]: the graph-to-graph transformation model and its training loop.
//! - [`gaen`]: ensemble + GAN distillation against external predictors.
//! - [`simulation`]: the system graph, propagation, and the model database.
//!
//! The math layer is generic over the scalar type; the pipeline itself runs
//! on f64 via the [`Real`] / [`Mat`] aliases below.

#![allow(clippy::needless_range_loop)] // indexed loops read naturally in the matrix kernels

pub mod entity_graph;
pub mod g2g;
pub mod gaen;
pub mod numerics;
pub mod scalar;
pub mod simulation;

pub use scalar::Scalar;

/// Scalar type used by the pipeline.
pub type Real = f64;

/// Matrix specialization used by the pipeline.
pub type Mat = numerics::Matrix<Real>;
