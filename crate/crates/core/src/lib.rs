//! Intergenerational risk sharing under limited commitment.
//!
//! A planner allocates an endowment between a young and an old generation
//! each period. The young may walk away to autarky, so transfers they make
//! must leave them at least as well off as their endowment. The crate solves
//! the planner's recursive problem, and derives from it the ergodic
//! distribution, debt policies, state prices and welfare measures.

pub mod benchmarks;
pub mod debt;
pub mod econ;
pub mod ergodic;
pub mod error;
pub mod io;
pub mod numerics;
pub mod planner;
pub mod policy;
pub mod pricing;
pub mod shooting;
pub mod welfare;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
