//! Directive and floorplan co-optimization for HLS designs on multi-die FPGAs.
//!
//! The engine boots from a legal floorplan, then repeatedly picks the latency
//! bottleneck functions, tries faster directive points, and repairs the floorplan
//! incrementally (online worst-fit packing, offline re-packing, SLL re-routing)
//! instead of re-solving placement globally.

pub mod error;
pub mod floorplan;
pub mod instancegen;
pub mod model;
pub mod oracle;
pub mod packer;
pub mod pipeliner;
pub mod problem;
pub mod search;

pub use error::{Error, Result};
pub use problem::Problem;
