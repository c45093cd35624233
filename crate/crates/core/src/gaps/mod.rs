//! Skeleton gap closing by minimum spanning tree.
//!
//! Every connected component of the skeleton is a supernode (same-component
//! pairs carry a vanishing weight, which is the same as contracting them).
//! Each endpoint proposes one edge to the nearest noxel of every other
//! component within the gap length; Kruskal's algorithm over the components
//! picks the edges, and accepted edges are rasterized back as straight
//! lines.

mod candidates;
mod close;
mod union_find;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{Noxel, Volume};

pub use candidates::{candidate_edges, candidate_edges_brute_force};
pub use close::{close_gaps, kruskal_select};
pub use union_find::UnionFind;

pub(crate) use candidates::SkeletonIndex;
pub(crate) use close::close_indexed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `sqrt(sum (s_i dx_i)^2)` between noxel centers.
    #[default]
    ScaledEuclidean,
    /// Path cost `1 - (S(p)/2 + S(q)/2 + sum of interior S)` along the
    /// rasterized segment, with S the skeleton itself.
    GeodesicTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapClosingConfig {
    /// Physical length of one step along each axis; empty means all 1.
    pub scale: Vec<f64>,
    /// Edges are accepted only when their scaled length is strictly below this.
    pub max_gap: f64,
    pub distance_mode: DistanceMode,
    /// Weight of same-component pairs. Components are contracted, so it
    /// never enters a computation.
    pub epsilon: f64,
    /// Let isolated single noxels source edges like endpoints.
    pub isolated_as_endpoints: bool,
}

impl Default for GapClosingConfig {
    fn default() -> Self {
        GapClosingConfig {
            scale: Vec::new(),
            max_gap: 10.0,
            distance_mode: DistanceMode::ScaledEuclidean,
            epsilon: 1e-9,
            isolated_as_endpoints: false,
        }
    }
}

impl GapClosingConfig {
    pub fn with_max_gap(max_gap: f64, scale: &[f64]) -> Self {
        GapClosingConfig {
            scale: scale.to_vec(),
            max_gap,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_gap.is_finite() && self.max_gap > 0.0) {
            return Err(Error::invalid(format!("max_gap must be positive, got {}", self.max_gap)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1e-3) {
            return Err(Error::invalid(format!("epsilon must satisfy 0 < epsilon << 1, got {}", self.epsilon)));
        }
        if self.scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::invalid(format!("scale components must be positive, got {:?}", self.scale)));
        }
        Ok(())
    }

    /// The per-axis scale for an `ndim`-dimensional skeleton.
    pub fn resolved_scale(&self, ndim: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self.scale.len() {
            0 => Ok(vec![1.0; ndim]),
            n if n == ndim => Ok(self.scale.clone()),
            n => Err(Error::invalid(format!("scale has {n} components for a {ndim}-D skeleton"))),
        }
    }
}

/// A proposed connection from an endpoint to the nearest noxel of another
/// component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateEdge {
    pub source: Noxel,
    pub target: Noxel,
    pub source_component: u32,
    pub target_component: u32,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapClosingReport {
    /// Effective configuration, scale resolved.
    pub config: GapClosingConfig,
    pub edges_added: Vec<CandidateEdge>,
    pub noxels_written: usize,
    pub components_before: usize,
    pub components_after: usize,
    pub candidate_count: usize,
    /// Edges between distinct components skipped because drawing them
    /// would cross the skeleton or close a loop.
    pub rejected_edges: usize,
}

/// Path cost of a rasterized segment over a gray volume.
pub fn geodesic_time<T: Scalar>(vol: &Volume<T>, path: &[Noxel]) -> Result<f64> {
    let shape = vol.shape();
    let samples = path
        .iter()
        .map(|p| Ok(vol.data()[shape.checked_index(p.coords())?].to_f64_lossy()))
        .collect::<Result<Vec<f64>>>()?;
    geodesic_from_samples(&samples)
}

pub(crate) fn geodesic_from_samples(s: &[f64]) -> Result<f64> {
    match s {
        [] => Err(Error::invalid("geodesic time of an empty path")),
        [only] => Ok(1.0 - only),
        [first, interior @ .., last] => Ok(1.0 - (first / 2.0 + last / 2.0 + interior.iter().sum::<f64>())),
    }
}
