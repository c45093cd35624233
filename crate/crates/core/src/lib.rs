//! Synthetic hyphal networks, vessel segmentation, and minimum-spanning-tree
//! gap closing for N-dimensional skeletons.
//!
//! Volumes are dense x-fastest grids. Connectivity is the full
//! (3^N - 1)-neighborhood throughout. Numeric kernels are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix the precision.

pub mod blur;
pub mod components;
pub mod endpoints;
pub mod error;
pub mod eval;
pub mod features;
pub mod gaps;
pub mod io;
pub mod line;
pub mod scalar;
pub mod segment;
pub mod synth;
pub mod topology;
pub mod volume;

pub use blur::{gaussian_blur, gaussian_kernel, Border};
pub use components::{label_components, ComponentLabels};
pub use endpoints::{detect_endpoints, EndpointScan};
pub use error::{Error, Result};
pub use features::{component_features, skeleton_to_graph, FeatureReport, SkeletonGraph};
pub use gaps::{close_gaps, GapClosingConfig, GapClosingReport};
pub use line::rasterize_line;
pub use scalar::Scalar;
pub use synth::{grow_network, grow_networks, render_stack, tree_to_skeleton, HyphalTree, SynthesisConfig};
pub use topology::cycle_rank;
pub use volume::{BinaryVolume, Noxel, Shape, Volume};

pub type Volume32 = Volume<f32>;
pub type Volume64 = Volume<f64>;
