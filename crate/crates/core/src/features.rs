//! Skeleton graphs and per-network summary features: penetration depth,
//! mass and branching.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::io::write_csv;
use crate::volume::{unit_offsets, BinaryVolume, Noxel, Shape};

/// Nodes of degree at least this are branch points.
pub const BRANCH_POINT_MIN_DEGREE: usize = 3;

/// One node per foreground noxel in linear-index order, one edge per
/// adjacent pair under full connectivity.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonGraph {
    shape: Shape,
    nodes: Vec<usize>,
    /// Neighbor lists in CSR form: neighbors of node `i` are
    /// `adjacency[offsets[i]..offsets[i + 1]]`, ascending.
    offsets: Vec<usize>,
    adjacency: Vec<u32>,
    component: Vec<u32>,
    components: usize,
}

impl SkeletonGraph {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn node(&self, i: usize) -> Noxel {
        self.shape.noxel(self.nodes[i])
    }

    pub fn node_index(&self, i: usize) -> usize {
        self.nodes[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Component label of node `i`, as assigned by [`label_components`].
    pub fn component(&self, i: usize) -> u32 {
        self.component[i]
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    /// Each undirected edge once as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes.len()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }
}

pub fn skeleton_to_graph(skel: &BinaryVolume) -> SkeletonGraph {
    let shape = skel.shape().clone();
    let nodes = skel.foreground_indices();
    let labels = label_components(skel);
    let unit = unit_offsets(shape.ndim());
    let mut offsets = Vec::with_capacity(nodes.len() + 1);
    let mut adjacency = Vec::new();
    offsets.push(0);
    for &p in &nodes {
        let mut nbrs: Vec<u32> = Vec::new();
        shape.for_each_neighbor(p, &unit, |q| {
            if skel.is_set(q) {
                nbrs.push(nodes.binary_search(&q).expect("foreground neighbor is a node") as u32);
            }
        });
        nbrs.sort_unstable();
        adjacency.extend(nbrs);
        offsets.push(adjacency.len());
    }
    SkeletonGraph {
        component: nodes.iter().map(|&p| labels.label_at(p)).collect(),
        components: labels.count(),
        shape,
        nodes,
        offsets,
        adjacency,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentFeatures {
    pub component: u32,
    /// Largest depth index times the depth-axis scale.
    pub depth: f64,
    pub mass_noxels: usize,
    /// Sum of scaled Euclidean edge lengths.
    pub mass_length: f64,
    pub branch_points: usize,
    pub endpoints: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub scale: Vec<f64>,
    pub branch_point_min_degree: usize,
    pub networks: usize,
    pub components: Vec<ComponentFeatures>,
    /// Depth is the maximum over components; the other fields are sums.
    pub totals: ComponentFeatures,
}

impl FeatureReport {
    /// One row per component.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_csv(path, |w| {
            w.write_record(["component", "depth", "mass_noxels", "mass_length", "branch_points", "endpoints"])?;
            for c in &self.components {
                w.write_record([
                    c.component.to_string(),
                    c.depth.to_string(),
                    c.mass_noxels.to_string(),
                    c.mass_length.to_string(),
                    c.branch_points.to_string(),
                    c.endpoints.to_string(),
                ])?;
            }
            Ok(())
        })
    }
}

/// Per-component features; `scale` empty means all 1.
pub fn component_features(graph: &SkeletonGraph, scale: &[f64]) -> Result<FeatureReport> {
    let n = graph.shape.ndim();
    let scale = match scale.len() {
        0 => vec![1.0; n],
        k if k == n && scale.iter().all(|&s| s.is_finite() && s > 0.0) => scale.to_vec(),
        _ => return Err(Error::invalid(format!("scale {scale:?} does not fit a {n}-D skeleton"))),
    };
    let mut comps: Vec<ComponentFeatures> = (1..=graph.components as u32)
        .map(|component| ComponentFeatures {
            component,
            ..Default::default()
        })
        .collect();
    let (mut a, mut b) = (vec![0; n], vec![0; n]);
    for i in 0..graph.node_count() {
        let c = &mut comps[graph.component[i] as usize - 1];
        graph.shape.coords_into(graph.nodes[i], &mut a);
        c.depth = c.depth.max(a[n - 1] as f64 * scale[n - 1]);
        c.mass_noxels += 1;
        match graph.degree(i) {
            1 => c.endpoints += 1,
            d if d >= BRANCH_POINT_MIN_DEGREE => c.branch_points += 1,
            _ => {}
        }
        for &j in graph.neighbors(i).iter().filter(|&&j| j as usize > i) {
            graph.shape.coords_into(graph.nodes[j as usize], &mut b);
            c.mass_length += a
                .iter()
                .zip(&b)
                .zip(&scale)
                .map(|((&x, &y), s)| (s * (x as f64 - y as f64)).powi(2))
                .sum::<f64>()
                .sqrt();
        }
    }
    let totals = comps.iter().fold(ComponentFeatures::default(), |t, c| ComponentFeatures {
        component: 0,
        depth: t.depth.max(c.depth),
        mass_noxels: t.mass_noxels + c.mass_noxels,
        mass_length: t.mass_length + c.mass_length,
        branch_points: t.branch_points + c.branch_points,
        endpoints: t.endpoints + c.endpoints,
    });
    Ok(FeatureReport {
        scale,
        branch_point_min_degree: BRANCH_POINT_MIN_DEGREE,
        networks: comps.len(),
        components: comps,
        totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoints::detect_endpoints;
    use crate::gaps::{close_gaps, GapClosingConfig};
    use crate::eval::inject_gaps;
    use crate::synth::{grow_networks, tree_to_skeleton, SynthesisConfig};
    use proptest::prelude::*;

    fn vol(dims: &[usize], pts: impl IntoIterator<Item = [usize; 3]>) -> BinaryVolume {
        let nox: Vec<Noxel> = pts.into_iter().map(Noxel::from).collect();
        BinaryVolume::from_noxels(dims, &nox).unwrap()
    }

    #[test]
    fn empty_volume() {
        let g = skeleton_to_graph(&BinaryVolume::zeros(&[4, 4, 4]).unwrap());
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
        let r = component_features(&g, &[]).unwrap();
        assert_eq!(r.networks, 0);
        assert_eq!(r.totals.mass_noxels, 0);
    }

    #[test]
    fn three_voxel_line() {
        let g = skeleton_to_graph(&vol(&[5, 3, 3], (0..3).map(|x| [x, 1, 1])));
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn straight_line_features() {
        let g = skeleton_to_graph(&vol(&[20, 3, 8], (2..13).map(|x| [x, 1, 5])));
        let r = component_features(&g, &[1.0, 1.0, 1.0]).unwrap();
        let c = &r.components[0];
        assert_eq!(r.networks, 1);
        assert_eq!(c.depth, 5.0);
        assert_eq!(c.mass_noxels, 11);
        assert_eq!(c.mass_length, 10.0);
        assert_eq!((c.branch_points, c.endpoints), (0, 2));
        let scaled = component_features(&g, &[1.0, 1.0, 3.0]).unwrap();
        assert_eq!(scaled.components[0].depth, 15.0);
    }

    #[test]
    fn y_shape() {
        // Three 5-noxel arms meeting at the hub (10, 10, 1).
        let mut pts = vec![[10, 10, 1]];
        pts.extend((1..=5).map(|k| [10 - k, 10, 1]));
        pts.extend((1..=5).map(|k| [10 + k, 10 + k, 1]));
        pts.extend((1..=5).map(|k| [10 + k, 10 - k, 1]));
        let r = component_features(&skeleton_to_graph(&vol(&[20, 20, 3], pts)), &[]).unwrap();
        let c = &r.components[0];
        assert_eq!((c.branch_points, c.endpoints, c.mass_noxels), (1, 3, 16));
        assert!((c.mass_length - (5.0 + 10.0 * 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn diagonal_edges_cost_root_three() {
        let r = component_features(&skeleton_to_graph(&vol(&[4, 4, 4], [[0, 0, 0], [1, 1, 1]])), &[]).unwrap();
        assert_eq!(r.components[0].mass_length, 3f64.sqrt());
    }

    #[test]
    fn bad_scale() {
        let g = skeleton_to_graph(&vol(&[4, 4, 4], [[1, 1, 1]]));
        assert!(component_features(&g, &[1.0, 1.0]).is_err());
        assert!(component_features(&g, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn generated_trees_agree_with_other_modules() {
        let cfg = SynthesisConfig {
            dims: vec![100, 100, 30],
            ..Default::default()
        };
        for seed in 0..10 {
            for tree in grow_networks(&cfg, seed).unwrap() {
                let skel = tree_to_skeleton(&tree, &cfg.dims).unwrap();
                let r = component_features(&skeleton_to_graph(&skel), &[]).unwrap();
                assert_eq!(r.totals.mass_noxels, skel.count_foreground());
                assert_eq!(r.totals.endpoints, detect_endpoints(&skel).len());
                assert!(r.components.iter().all(|c| c.mass_noxels >= 1));
            }
        }
    }

    #[test]
    fn closing_never_reduces_depth_or_adds_networks() {
        let cfg = SynthesisConfig {
            dims: vec![100, 100, 30],
            ..Default::default()
        };
        for seed in 0..10 {
            let trees = grow_networks(&cfg, seed).unwrap();
            let rec = inject_gaps(&trees, &cfg.dims, &Default::default(), seed).unwrap();
            let (closed, _) = close_gaps(&rec.gapped, &GapClosingConfig::with_max_gap(8.0, &[1.0, 1.0, 3.0])).unwrap();
            let (g0, g1) = (skeleton_to_graph(&rec.gapped), skeleton_to_graph(&closed));
            let (r0, r1) = (component_features(&g0, &[]).unwrap(), component_features(&g1, &[]).unwrap());
            assert!(r1.networks <= r0.networks);
            for i in 0..g0.node_count() {
                let j = g1.nodes.binary_search(&g0.node_index(i)).unwrap();
                let before = r0.components[g0.component(i) as usize - 1].depth;
                assert!(r1.components[g1.component(j) as usize - 1].depth >= before);
            }
        }
    }

    proptest! {
        #[test]
        fn degrees_match_brute_force(bits in proptest::collection::vec(proptest::bool::weighted(0.15), 6 * 5 * 4)) {
            let dims = [6usize, 5, 4];
            let skel = BinaryVolume::from_vec(&dims, bits.iter().map(|&b| b as u8).collect()).unwrap();
            let g = skeleton_to_graph(&skel);
            prop_assert_eq!(g.node_count(), skel.count_foreground());
            for i in 0..g.node_count() {
                let p = g.node(i);
                let brute = g.nodes.iter().filter(|&&q| q != g.node_index(i) && g.shape.noxel(q).chebyshev(&p) == 1).count();
                prop_assert_eq!(g.degree(i), brute);
                prop_assert!(g.degree(i) <= 26);
                for &j in g.neighbors(i) {
                    prop_assert!(g.neighbors(j as usize).contains(&(i as u32)));
                    prop_assert_eq!(g.component(j as usize), g.component(i));
                }
            }
            let r = component_features(&g, &[]).unwrap();
            prop_assert_eq!(r.totals.mass_noxels, skel.count_foreground());
            prop_assert_eq!(r.totals.endpoints, detect_endpoints(&skel).len());
        }
    }
}
