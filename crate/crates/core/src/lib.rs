//! Locally weighted estimation of a vertex's local connection probability
//! in inhomogeneous random graphs.
//!
//! The crate covers the whole pipeline:
//!
//! - [`model`]: feature distributions, connection functions, the random
//!   connection model and stochastic block model samplers, and true
//!   connection probabilities.
//! - [`graph`]: adjacency storage, degrees, geodesic annuli around the
//!   origin and induced subgraphs.
//! - [`estimator`]: weight schemes, the weighted estimator in direct,
//!   per-vertex (trace) and recursive form, and step-size sequences.
//! - [`mccv`]: Monte Carlo cross-validation of the neighbourhood size.
//! - [`analysis`]: oracle bound, variance and moment diagnostics, a CLT
//!   check and wireless network sizing.
//! - [`experiments`]: seeded, parallel, reproducible simulation studies.
//! - [`io`] and [`cli`]: configuration, CSV ingestion and output, SVG
//!   charts and the command line front end.
//!
//! All randomness flows from a single `u64` seed through [`rng::SeedStream`].

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod mccv;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{EstimateTrace, WeightScheme};
pub use graph::{Annuli, Graph};
pub use mccv::{RiskCurve, SplitPlan};
pub use model::{ConnectionFunction, FeatureDistribution, Features, Rcm, SbmSpec, TruthValue};
pub use rng::SeedStream;
