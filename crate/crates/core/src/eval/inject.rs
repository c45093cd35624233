use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::endpoints::detect_endpoints;
use crate::error::{Error, Result};
use crate::synth::{trees_to_skeleton, HyphalTree};
use crate::volume::{unit_offsets, BinaryVolume, Noxel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapInjectionConfig {
    /// Inclusive range for the number of gaps requested per branch.
    pub gap_count: [usize; 2],
    /// Inclusive range for the number of removed noxels per gap.
    pub gap_size: [usize; 2],
    /// Random placements tried per gap before giving up on it.
    pub attempts: usize,
}

impl Default for GapInjectionConfig {
    fn default() -> Self {
        GapInjectionConfig {
            gap_count: [1, 5],
            gap_size: [1, 10],
            attempts: 20,
        }
    }
}

impl GapInjectionConfig {
    pub fn validate(&self) -> Result<()> {
        let [c0, c1] = self.gap_count;
        let [s0, s1] = self.gap_size;
        if c0 > c1 || s0 > s1 || s0 == 0 {
            return Err(Error::invalid(format!(
                "gap_count {:?} and gap_size {:?} must be ordered ranges with sizes >= 1",
                self.gap_count, self.gap_size
            )));
        }
        Ok(())
    }
}

/// One removed run: `noxels` are consecutive positions of the branch path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedRun {
    pub network: usize,
    pub branch: usize,
    pub noxels: Vec<Noxel>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapInjectionRecord {
    pub config: GapInjectionConfig,
    pub seed: u64,
    #[serde(skip)]
    pub gapped: BinaryVolume,
    pub removed_runs: Vec<RemovedRun>,
    /// The two path noxels bordering each removed run.
    pub flank_pairs: Vec<(Noxel, Noxel)>,
    /// `(network, branch)` of branches that received no gap.
    pub skipped_branches: Vec<(usize, usize)>,
}

impl GapInjectionRecord {
    pub fn dims(&self) -> &[usize] {
        self.gapped.dims()
    }
}

/// Removes random interior runs from every branch of `trees`.
///
/// A run `[s, e)` is placed only if positions `s-1..=e` are plain path
/// noxels (no foreground neighbor besides their path predecessor and
/// successor, and not shared with another path), `s >= 2`, `e <= len-2`,
/// and no earlier run of the branch lies within `s-2..=e+1`. Flank noxels
/// `path[s-1]` and `path[e]` then become endpoints in distinct components.
/// Runs whose flanks still end up connected or undetected are restored.
pub fn inject_gaps(
    trees: &[HyphalTree],
    dims: &[usize],
    config: &GapInjectionConfig,
    seed: u64,
) -> Result<GapInjectionRecord> {
    config.validate()?;
    let full = trees_to_skeleton(trees, dims)?;
    let shape = full.shape().clone();
    let offsets = unit_offsets(shape.ndim());
    let mut multiplicity: HashMap<usize, u32> = HashMap::new();
    for p in trees.iter().flat_map(|t| t.branches.iter().flat_map(|b| b.path.iter())) {
        *multiplicity.entry(shape.index(p.coords())).or_default() += 1;
    }
    let plain = |path: &[usize], i: usize| {
        if multiplicity[&path[i]] > 1 {
            return false;
        }
        let mut ok = true;
        shape.for_each_neighbor(path[i], &offsets, |q| {
            if full.is_set(q) && q != path[i - 1] && q != path[i + 1] {
                ok = false;
            }
        });
        ok
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs: Vec<(RemovedRun, Vec<usize>, (Noxel, Noxel))> = Vec::new();
    let mut skipped = Vec::new();
    for (ni, tree) in trees.iter().enumerate() {
        for (bi, branch) in tree.branches.iter().enumerate() {
            let path: Vec<usize> = branch.path.iter().map(|p| shape.index(p.coords())).collect();
            let len = path.len();
            let wanted = rng.random_range(config.gap_count[0]..=config.gap_count[1]);
            let mut taken: Vec<(usize, usize)> = Vec::new();
            for _ in 0..wanted {
                let size = rng.random_range(config.gap_size[0]..=config.gap_size[1]);
                if len < size + 4 {
                    continue;
                }
                for _ in 0..config.attempts {
                    let s = rng.random_range(2..=len - 2 - size);
                    let e = s + size;
                    let clear = taken.iter().all(|&(ts, te)| te + 2 <= s || ts >= e + 2);
                    if clear && (s - 1..=e).all(|i| plain(&path, i)) {
                        taken.push((s, e));
                        break;
                    }
                }
            }
            if taken.is_empty() {
                skipped.push((ni, bi));
            }
            taken.sort_unstable();
            for (s, e) in taken {
                runs.push((
                    RemovedRun {
                        network: ni,
                        branch: bi,
                        noxels: branch.path[s..e].to_vec(),
                    },
                    path[s..e].to_vec(),
                    (branch.path[s - 1].clone(), branch.path[e].clone()),
                ));
            }
        }
    }

    // Restore runs whose flanks did not separate; restoring one can only
    // merge components, so repeat until every remaining pair is sound.
    loop {
        let mut gapped = full.clone();
        for (_, idx, _) in &runs {
            for &i in idx {
                gapped.set_index(i, false);
            }
        }
        let labels = label_components(&gapped);
        let ends = detect_endpoints(&gapped);
        let sound = |a: &Noxel| ends.is_endpoint(shape.index(a.coords()));
        let before = runs.len();
        runs.retain(|(_, _, (a, b))| {
            let (ia, ib) = (shape.index(a.coords()), shape.index(b.coords()));
            sound(a) && sound(b) && labels.label_at(ia) != labels.label_at(ib)
        });
        if runs.len() == before {
            return Ok(GapInjectionRecord {
                config: config.clone(),
                seed,
                gapped: gapped.with_scale(full.scale())?,
                flank_pairs: runs.iter().map(|(_, _, f)| f.clone()).collect(),
                removed_runs: runs.into_iter().map(|(r, _, _)| r).collect(),
                skipped_branches: skipped,
            });
        }
    }
}

/// Set of flank noxels as linear indices.
pub(crate) fn flank_set(record: &GapInjectionRecord) -> HashSet<usize> {
    let shape = record.gapped.shape();
    record
        .flank_pairs
        .iter()
        .flat_map(|(a, b)| [shape.index(a.coords()), shape.index(b.coords())])
        .collect()
}
