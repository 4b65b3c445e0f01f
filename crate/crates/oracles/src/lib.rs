//! Brute-force reference computations used only by tests.
//!
//! Nothing here depends on the main crate; each routine is the slow,
//! obviously-correct version of something the library does quickly.

pub mod partitions;
pub mod quadrature;
pub mod stats;
