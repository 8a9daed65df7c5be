//! Algebraic f-factor, b-matching, undirected shortest path and flow
//! algorithms over random prime fields, with brute-force oracles.

pub mod bipartite;
pub mod blossom;
pub mod bmatch;
pub mod config;
pub mod error;
pub mod field;
pub mod flow;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod perturb;
pub mod rng;
pub mod solve;
pub mod split;
pub mod sssp;

pub use config::SolveConfig;
pub use error::{Error, Result};
