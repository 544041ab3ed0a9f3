//! Quasi-isometric embeddings of sampled manifolds by parallel transport
//! unfolding (PTU), with classic Isomap and landmark variants.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`graph`]: a k-nearest-neighbor proximity graph weighted by Euclidean
//!    edge lengths.
//! 2. [`tangent`] and [`connection`]: per-point tangent frames from local
//!    SVD, and the orthogonal matrices that best align adjacent frames.
//! 3. [`transport`]: a Dijkstra search that develops every shortest path into
//!    the source's tangent space, giving geodesic distance estimates free of
//!    the zigzag bias of raw graph distances.
//! 4. [`mds`]: classical multidimensional scaling of the squared distances.
//!
//! [`landmark`] swaps stage 4 for landmark MDS plus closed-form placement,
//! [`datasets`] generates the synthetic benchmark manifolds and [`metrics`]
//! measures distortion against their ground truth.

pub mod connection;
pub mod datasets;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod io;
pub mod landmark;
pub mod matrix;
pub mod mds;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod svd;
pub mod tangent;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, PointSet};
