use std::collections::HashMap;

use rayon::prelude::*;

use super::{geodesic_from_samples, CandidateEdge, DistanceMode, GapClosingConfig};
use crate::components::ComponentLabels;
use crate::endpoints::EndpointScan;
use crate::error::{Error, Result};
use crate::line::for_each_line_point;
use crate::volume::{BinaryVolume, Shape};

const BUCKET: usize = 8;

/// Sparse view of a labeled skeleton: foreground noxels with their
/// component labels, the edge sources, and a bucket grid for range queries.
#[derive(Clone, Debug)]
pub(crate) struct SkeletonIndex {
    pub(crate) shape: Shape,
    pub(crate) label: HashMap<usize, u32>,
    pub(crate) components: usize,
    sources: Vec<usize>,
    buckets: HashMap<usize, Vec<usize>>,
    bucket_dims: Vec<usize>,
}

pub(crate) fn scaled_distance(a: &[usize], b: &[usize], scale: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scale)
        .map(|((&x, &y), &s)| {
            let d = (x as f64 - y as f64) * s;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

impl SkeletonIndex {
    pub(crate) fn new(
        skel: &BinaryVolume,
        labels: &ComponentLabels,
        endpoints: &EndpointScan,
        isolated_as_endpoints: bool,
    ) -> Result<Self> {
        if labels.shape().dims() != skel.dims() || endpoints.shape().dims() != skel.dims() {
            return Err(Error::invalid(format!(
                "skeleton dims {:?}, label dims {:?} and endpoint dims {:?} must agree",
                skel.dims(),
                labels.shape().dims(),
                endpoints.shape().dims()
            )));
        }
        let shape = skel.shape().clone();
        let n = shape.ndim();
        let fg = skel.foreground_indices();
        let mut label = HashMap::with_capacity(fg.len());
        let bucket_dims: Vec<usize> = shape.dims().iter().map(|d| d.div_ceil(BUCKET)).collect();
        let mut buckets: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut c = vec![0; n];
        for &i in &fg {
            let l = labels.label_at(i);
            if l == 0 {
                return Err(Error::invalid(format!("foreground noxel {i} is unlabeled")));
            }
            label.insert(i, l);
            shape.coords_into(i, &mut c);
            buckets.entry(bucket_key(&c, &bucket_dims)).or_default().push(i);
        }
        let mut sources = endpoints.endpoint_indices().to_vec();
        if isolated_as_endpoints {
            sources.extend(endpoints.isolated_indices());
            sources.sort_unstable();
        }
        if let Some(&bad) = sources.iter().find(|i| !label.contains_key(i)) {
            return Err(Error::invalid(format!("endpoint {bad} is not a skeleton noxel")));
        }
        Ok(SkeletonIndex {
            shape,
            label,
            components: labels.count(),
            sources,
            buckets,
            bucket_dims,
        })
    }

    pub(crate) fn from_skeleton(skel: &BinaryVolume, isolated_as_endpoints: bool) -> Result<Self> {
        let labels = crate::components::label_components(skel);
        let endpoints = crate::endpoints::detect_endpoints(skel);
        Self::new(skel, &labels, &endpoints, isolated_as_endpoints)
    }

    /// Foreground noxels whose scaled distance to `center` may be below
    /// `reach`, bucket by bucket.
    fn for_each_near(&self, center: &[usize], reach: f64, scale: &[f64], mut f: impl FnMut(usize)) {
        let n = center.len();
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        for a in 0..n {
            let r = (reach / scale[a]).floor().min(self.shape.dims()[a] as f64) as usize;
            lo[a] = center[a].saturating_sub(r) / BUCKET;
            hi[a] = (center[a] + r).min(self.shape.dims()[a] - 1) / BUCKET;
        }
        let mut b = lo.clone();
        loop {
            if let Some(list) = self.buckets.get(&bucket_key_raw(&b, &self.bucket_dims)) {
                list.iter().for_each(|&i| f(i));
            }
            let mut a = 0;
            loop {
                if a == n {
                    return;
                }
                if b[a] < hi[a] {
                    b[a] += 1;
                    break;
                }
                b[a] = lo[a];
                a += 1;
            }
        }
    }

    fn geodesic(&self, p: &[usize], q: &[usize]) -> f64 {
        let mut samples = Vec::new();
        for_each_line_point(p, q, |c| {
            samples.push(self.label.contains_key(&self.shape.index(c)) as u8 as f64);
        });
        geodesic_from_samples(&samples).expect("a line has at least one point")
    }

    /// Best target per other component for one source. Ranking keys: scaled
    /// distance then linear index, or for geodesic time the path cost, then
    /// scaled distance, then linear index.
    fn edges_from(&self, src: usize, config: &GapClosingConfig, scale: &[f64], near: &[usize]) -> Vec<CandidateEdge> {
        let src_c = self.shape.noxel(src);
        let src_label = self.label[&src];
        let mut best: HashMap<u32, (f64, f64, usize)> = HashMap::new();
        let mut qc = vec![0; self.shape.ndim()];
        for &q in near {
            let l = self.label[&q];
            if l == src_label {
                continue;
            }
            self.shape.coords_into(q, &mut qc);
            let d = scaled_distance(src_c.coords(), &qc, scale);
            if d.is_nan() || d >= config.max_gap {
                continue;
            }
            let primary = match config.distance_mode {
                DistanceMode::ScaledEuclidean => d,
                DistanceMode::GeodesicTime => self.geodesic(src_c.coords(), &qc),
            };
            let key = (primary, d, q);
            let slot = best.entry(l).or_insert(key);
            if (key.0, key.1, key.2) < (slot.0, slot.1, slot.2) {
                *slot = key;
            }
        }
        best.into_iter()
            .map(|(l, (w, _, q))| CandidateEdge {
                source: src_c.clone(),
                target: self.shape.noxel(q),
                source_component: src_label,
                target_component: l,
                weight: w,
            })
            .collect()
    }

    pub(crate) fn candidates(&self, config: &GapClosingConfig) -> Result<Vec<CandidateEdge>> {
        let scale = config.resolved_scale(self.shape.ndim())?;
        let mut edges: Vec<CandidateEdge> = self
            .sources
            .par_iter()
            .flat_map_iter(|&src| {
                let c = self.shape.noxel(src);
                let mut near = Vec::new();
                self.for_each_near(c.coords(), config.max_gap, &scale, |q| near.push(q));
                self.edges_from(src, config, &scale, &near)
            })
            .collect();
        sort_edges(&self.shape, &mut edges);
        Ok(edges)
    }

    pub(crate) fn candidates_brute_force(&self, config: &GapClosingConfig) -> Result<Vec<CandidateEdge>> {
        let scale = config.resolved_scale(self.shape.ndim())?;
        let mut all: Vec<usize> = self.label.keys().copied().collect();
        all.sort_unstable();
        let mut edges: Vec<CandidateEdge> = self
            .sources
            .iter()
            .flat_map(|&src| self.edges_from(src, config, &scale, &all))
            .collect();
        sort_edges(&self.shape, &mut edges);
        Ok(edges)
    }
}

fn bucket_key(c: &[usize], bucket_dims: &[usize]) -> usize {
    let b: Vec<usize> = c.iter().map(|&x| x / BUCKET).collect();
    bucket_key_raw(&b, bucket_dims)
}

fn bucket_key_raw(b: &[usize], bucket_dims: &[usize]) -> usize {
    let mut key = 0;
    for a in (0..b.len()).rev() {
        key = key * bucket_dims[a] + b[a];
    }
    key
}

/// Deterministic order: weight, then source index, then target index.
pub(crate) fn sort_edges(shape: &Shape, edges: &mut [CandidateEdge]) {
    edges.sort_by(|a, b| {
        a.weight
            .total_cmp(&b.weight)
            .then_with(|| shape.index(a.source.coords()).cmp(&shape.index(b.source.coords())))
            .then_with(|| shape.index(a.target.coords()).cmp(&shape.index(b.target.coords())))
    });
}

/// One edge per (endpoint, other component) pair: to the nearest noxel of
/// that component, ties to the smallest linear index, kept only when its
/// scaled length is below `max_gap`. Sorted by weight, source, target.
pub fn candidate_edges(
    skel: &BinaryVolume,
    labels: &ComponentLabels,
    endpoints: &EndpointScan,
    config: &GapClosingConfig,
) -> Result<Vec<CandidateEdge>> {
    SkeletonIndex::new(skel, labels, endpoints, config.isolated_as_endpoints)?.candidates(config)
}

/// Reference implementation of [`candidate_edges`] scanning every
/// foreground noxel for every endpoint.
pub fn candidate_edges_brute_force(
    skel: &BinaryVolume,
    labels: &ComponentLabels,
    endpoints: &EndpointScan,
    config: &GapClosingConfig,
) -> Result<Vec<CandidateEdge>> {
    SkeletonIndex::new(skel, labels, endpoints, config.isolated_as_endpoints)?.candidates_brute_force(config)
}
