//! Synthetic hyphal networks: weighted random-walk trees and their
//! rendering into grayscale image stacks with a ground-truth centerline mask.
//!
//! The last axis is depth: the tissue surface is at z = 0 and "down" means
//! increasing z.

mod grow;
mod pchip;
mod render;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{BinaryVolume, Noxel};

pub use grow::{grow_network, grow_network_from, grow_networks, sample_direction_change, DirectionCategory};
pub use pchip::{pchip_profile, IntensityProfile, Pchip};
pub use render::{procedural_background_slice, render_stack};

/// One branch: an ordered 26-connected path, optionally attached to a noxel
/// of an earlier branch given as `(branch index, position index)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub parent: Option<(usize, usize)>,
    pub path: Vec<Noxel>,
}

/// A single connected network.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyphalTree {
    pub branches: Vec<Branch>,
}

impl HyphalTree {
    pub fn noxel_count(&self) -> usize {
        self.branches.iter().map(|b| b.path.len()).sum()
    }

    /// Checks path continuity and parent attachment.
    pub fn validate(&self) -> Result<()> {
        for (bi, b) in self.branches.iter().enumerate() {
            if b.path.is_empty() {
                return Err(Error::invalid(format!("branch {bi} has an empty path")));
            }
            if let Some(w) = b.path.windows(2).find(|w| w[0].chebyshev(&w[1]) != 1) {
                return Err(Error::invalid(format!(
                    "branch {bi}: consecutive noxels {:?} and {:?} are not adjacent",
                    w[0], w[1]
                )));
            }
            if let Some((pb, pi)) = b.parent {
                let anchor = self
                    .branches
                    .get(pb)
                    .filter(|_| pb < bi)
                    .and_then(|p| p.path.get(pi))
                    .ok_or_else(|| Error::invalid(format!("branch {bi}: bad parent ({pb}, {pi})")))?;
                if anchor.chebyshev(&b.path[0]) > 1 {
                    return Err(Error::invalid(format!(
                        "branch {bi}: first noxel {:?} not adjacent to parent noxel {anchor:?}",
                        b.path[0]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Relative odds of each category when a branch changes direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionWeights {
    pub in_plane: f64,
    pub down: f64,
    pub up: f64,
}

impl Default for DirectionWeights {
    fn default() -> Self {
        DirectionWeights {
            in_plane: 0.70,
            down: 0.25,
            up: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundSource {
    None,
    Procedural,
    /// Directory of 8-bit PGM slices; each z slice picks one at random.
    Directory(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProceduralBackground {
    pub sigma: f64,
    /// Expected blobs per slice pixel.
    pub density: f64,
    pub amplitude: [f64; 2],
}

impl Default for ProceduralBackground {
    fn default() -> Self {
        ProceduralBackground {
            sigma: 4.0,
            density: 1e-4,
            amplitude: [0.1, 0.4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub dims: Vec<usize>,
    /// Inclusive range for the number of networks per stack.
    pub networks_per_stack: [usize; 2],
    pub p_keep_direction: f64,
    /// Per-step probability of spawning a child branch.
    pub p_branch: f64,
    pub direction_weights: DirectionWeights,
    /// Step budget of a branch.
    pub max_branch_length: usize,
    pub max_branches: usize,
    /// Inclusive x/y distance kept from the volume border at the root.
    pub start_margin: usize,
    /// Inclusive range of root depths.
    pub start_depth: [usize; 2],
    pub intensity_range: [f64; 2],
    /// Inclusive range for the number of PCHIP control points per branch.
    pub control_points: [usize; 2],
    /// Defocus blur; 0 disables it.
    pub blur_sigma: f64,
    /// Additive zero-mean Gaussian noise; 0 disables it.
    pub noise_variance: f64,
    pub background: BackgroundSource,
    pub procedural: ProceduralBackground,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            dims: vec![500, 500, 150],
            networks_per_stack: [1, 5],
            p_keep_direction: 0.80,
            p_branch: 0.03,
            direction_weights: DirectionWeights::default(),
            max_branch_length: 120,
            max_branches: 40,
            start_margin: 20,
            start_depth: [0, 3],
            intensity_range: [0.5, 1.0],
            control_points: [3, 6],
            blur_sigma: 0.75,
            noise_variance: 0.001,
            background: BackgroundSource::Procedural,
            procedural: ProceduralBackground::default(),
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p_keep_direction", self.p_keep_direction)?;
        prob("p_branch", self.p_branch)?;
        let w = self.direction_weights;
        for (name, v) in [("in_plane", w.in_plane), ("down", w.down), ("up", w.up)] {
            prob(name, v)?;
        }
        if ((w.in_plane + w.down + w.up) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("direction weights must sum to 1"));
        }
        let [lo, hi] = self.intensity_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::invalid(format!(
                "intensity range [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        if self.networks_per_stack[0] > self.networks_per_stack[1] {
            return Err(Error::invalid("networks_per_stack range is reversed"));
        }
        if self.control_points[0] < 2 || self.control_points[0] > self.control_points[1] {
            return Err(Error::invalid("control_points range must be >= 2 and ordered"));
        }
        if self.start_depth[0] > self.start_depth[1] {
            return Err(Error::invalid("start_depth range is reversed"));
        }
        if self.max_branches == 0 {
            return Err(Error::invalid("max_branches must be at least 1"));
        }
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(Error::invalid("blur_sigma must be >= 0"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise_variance must be >= 0"));
        }
        let [alo, ahi] = self.procedural.amplitude;
        if !(0.0..=1.0).contains(&alo) || !(0.0..=1.0).contains(&ahi) || alo > ahi {
            return Err(Error::invalid("procedural amplitude range must lie in [0, 1]"));
        }
        if self.procedural.sigma <= 0.0 || self.procedural.density < 0.0 {
            return Err(Error::invalid("procedural sigma must be > 0 and density >= 0"));
        }
        if self.dims.len() < 2 {
            return Err(Error::invalid("synthesis needs at least 2 axes"));
        }
        let n = self.dims.len();
        for (axis, &d) in self.dims[..n - 1].iter().enumerate() {
            if d <= 2 * self.start_margin {
                return Err(Error::invalid(format!(
                    "axis {axis} has {d} noxels, too small for a start margin of {}",
                    self.start_margin
                )));
            }
        }
        if self.dims[n - 1] <= self.start_depth[1] {
            return Err(Error::invalid(format!(
                "depth axis has {} noxels, too small for start depths up to {}",
                self.dims[n - 1],
                self.start_depth[1]
            )));
        }
        Ok(())
    }
}

/// Rasterizes every branch path of one network.
pub fn tree_to_skeleton(tree: &HyphalTree, dims: &[usize]) -> Result<BinaryVolume> {
    trees_to_skeleton(std::slice::from_ref(tree), dims)
}

pub fn trees_to_skeleton(trees: &[HyphalTree], dims: &[usize]) -> Result<BinaryVolume> {
    BinaryVolume::from_noxels(
        dims,
        trees.iter().flat_map(|t| t.branches.iter().flat_map(|b| b.path.iter())),
    )
}
