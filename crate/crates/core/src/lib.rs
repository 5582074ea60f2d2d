//! Computational coarse geometry on finite weighted graphs.
//!
//! The crate models relatively hyperbolic spaces by graphs with exact
//! rational edge lengths and builds, on top of them: coned-off (electric)
//! spaces and combinatorial horoballs, partially electrocuted spaces, trees
//! of spaces with their induced coned-off trees, hyperbolic ladders with
//! their retractions and vertical rays, and finally the measured properness
//! profile `M(N)` that certifies the Cannon-Thurston criterion on an
//! instance.

pub mod ct_harness;
pub mod electric;
pub mod error;
pub mod io;
pub mod ladder;
pub mod length;
pub mod metric_graph;
pub mod partial_electro;
pub mod report;
pub mod rng;
pub mod tree_spaces;

pub use error::{Error, Result};
pub use length::Length;
pub use metric_graph::{DeltaMode, MetricGraph, PathWitness};
