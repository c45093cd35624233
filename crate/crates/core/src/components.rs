//! Connected-component labeling under full (3^N - 1) connectivity.

use crate::volume::{BinaryVolume, Shape};

/// Per-noxel component ids: 0 is background, components are 1..=count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabels {
    shape: Shape,
    labels: Vec<u32>,
    count: usize,
}

impl ComponentLabels {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn label_at(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    /// Sizes indexed by label (entry 0 counts background).
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count + 1];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }
}

/// Labels foreground components. Components are numbered in increasing
/// order of their smallest linear index, so the output is fully determined
/// by the input.
pub fn label_components(vol: &BinaryVolume) -> ComponentLabels {
    let shape = vol.shape().clone();
    let offsets = shape.neighbor_offsets();
    let mut labels = vec![0u32; shape.len()];
    let mut count = 0u32;
    let mut stack = Vec::new();

    for seed in vol.foreground_indices() {
        if labels[seed] != 0 {
            continue;
        }
        count += 1;
        labels[seed] = count;
        stack.push(seed);
        while let Some(i) = stack.pop() {
            shape.for_each_neighbor(i, &offsets, |j| {
                if vol.is_set(j) && labels[j] == 0 {
                    labels[j] = count;
                    stack.push(j);
                }
            });
        }
    }

    ComponentLabels {
        shape,
        labels,
        count: count as usize,
    }
}
