//! Seed selection and time-varying resource allocation for SI information
//! campaigns on networks, solved with the maximum principle and a
//! forward-backward sweep.

pub mod adjoint;
pub mod budget;
pub mod centrality;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod fmt;
pub mod heuristics;
pub mod mc;
pub mod network;
pub mod seed_opt;
pub mod strategy;
pub mod sweep;

pub use error::{Error, Result};
