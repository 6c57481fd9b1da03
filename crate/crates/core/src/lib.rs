//! Linear upper bounds on the infection probabilities of the discrete-time
//! SIS epidemic on a graph, the exact Markov chain they bound, and a Monte
//! Carlo reference.

pub mod analysis;
pub mod bounds;
pub mod chain;
pub mod error;
pub mod graph;
pub mod montecarlo;
pub mod rng;
pub mod sparse;
pub mod spectral;

pub use bounds::{BoundKind, BoundMatrix, EpidemicParams};
pub use error::{Error, Result};
pub use graph::Graph;
pub use sparse::{LinearOperator, SparseMatrix};
