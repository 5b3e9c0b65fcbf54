//! Numerical toolkit for expanding interval maps with an indifferent fixed
//! point at 0.
//!
//! - [`map`]: the maps themselves, families and axiom validation.
//! - [`partition`]: the refined Markov partition, itineraries and cylinders.
//! - [`distortion`]: excursion parsing and empirical distortion constants.
//! - [`exactness`]: exact interval-set images and intersection profiles.
//! - [`ergodic`]: quasi-lifts, Birkhoff sums, return times, Ulam densities.

pub mod distortion;
pub mod ergodic;
pub mod error;
pub mod exactness;
pub mod map;
pub mod partition;
pub mod stats;

pub use error::{Error, Result};
pub use exactness::IntervalSet;
pub use map::{build_family, BranchSpec, Family, MapSpec, ValidationReport};
pub use partition::{compute_b_sequence, Cylinder, RefinedPartition, Symbol, Word};
