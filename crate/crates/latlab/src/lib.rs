//! Desk-scale laboratory for diagonal flows on the space of unimodular
//! lattices: group-layer constructors, exact shortest vectors, exterior
//! powers, quantitative nondivergence measurements and exponential
//! decay-rate estimation of equidistribution integrals against an exact
//! mean-value oracle.

pub mod config;
pub mod equidist;
pub mod error;
pub mod exterior;
pub mod fitting;
pub mod group;
pub mod haar;
pub mod lattice;
pub mod matrix;
pub mod nondivergence;
pub mod quad;
pub mod report;
pub mod rng;
pub mod smooth;

pub mod cli;
pub mod experiments;

pub use error::{Error, Result};
