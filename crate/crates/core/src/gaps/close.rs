use std::collections::HashMap;

use smallvec::SmallVec;

use super::candidates::{sort_edges, SkeletonIndex};
use super::{CandidateEdge, GapClosingConfig, GapClosingReport, UnionFind};
use crate::error::Result;
use crate::line::for_each_line_point;
use crate::topology::{contact_pieces, neighborhood};
use crate::volume::BinaryVolume;

/// Kruskal over components as supernodes: walks `edges` in order and keeps
/// an edge iff it joins two components not yet connected. Component ids are
/// `1..=n_components`.
pub fn kruskal_select(edges: &[CandidateEdge], n_components: usize) -> Vec<CandidateEdge> {
    let mut uf = UnionFind::new(n_components + 1);
    edges
        .iter()
        .filter(|e| uf.union(e.source_component as usize, e.target_component as usize))
        .cloned()
        .collect()
}

/// Result of drawing a Kruskal selection into a skeleton.
#[derive(Clone, Debug, Default)]
pub(crate) struct Closure {
    pub(crate) accepted: Vec<CandidateEdge>,
    pub(crate) written: Vec<usize>,
    pub(crate) rejected: usize,
}

/// Kruskal with drawing: an edge between two distinct sets is drawn only
/// when its interior noxels are background and each noxel, added in order
/// from the source side, touches the existing cubes in one acyclic piece
/// (the last one in exactly one piece per side, and nothing from a third
/// set). Under these conditions every drawn edge merges exactly two
/// components and keeps the loop and cavity counts unchanged.
pub(crate) fn draw_edges(index: &SkeletonIndex, edges: &[CandidateEdge]) -> Closure {
    let shape = &index.shape;
    let n = shape.ndim();
    let offsets = neighborhood(n);
    let mut uf = UnionFind::new(index.components + 1);
    let mut overlay: HashMap<usize, u32> = HashMap::new();
    let mut out = Closure::default();
    let mut path: Vec<usize> = Vec::new();
    let mut pending: HashMap<usize, u32> = HashMap::new();
    let mut coords = vec![0usize; n];
    let mut nb: Vec<isize> = vec![0; n];
    let mut present = vec![false; offsets.len()];
    let mut side: SmallVec<[usize; 32]> = SmallVec::new();

    for e in edges {
        let (a, b) = (e.source_component as usize, e.target_component as usize);
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            continue;
        }
        path.clear();
        for_each_line_point(e.source.coords(), e.target.coords(), |c| path.push(shape.index(c)));
        let interior = &path[1..path.len() - 1];
        let occupied = |i: &usize| index.label.contains_key(i) || overlay.contains_key(i);
        if interior.is_empty() || interior.iter().any(occupied) {
            out.rejected += 1;
            continue;
        }
        pending.clear();
        let mut ok = true;
        for (j, &w) in interior.iter().enumerate() {
            let last = j + 1 == interior.len();
            shape.coords_into(w, &mut coords);
            side.clear();
            for (k, off) in offsets.iter().enumerate() {
                present[k] = false;
                for a in 0..n {
                    nb[a] = coords[a] as isize + off[a];
                }
                if !shape.contains_signed(&nb) {
                    continue;
                }
                let q = nb.iter().zip(shape.strides()).map(|(&c, &s)| c as usize * s).sum::<usize>();
                let label = index
                    .label
                    .get(&q)
                    .or_else(|| overlay.get(&q))
                    .or_else(|| pending.get(&q))
                    .copied();
                if let Some(l) = label {
                    let root = uf.find(l as usize);
                    if root != ra && !(last && root == rb) {
                        ok = false;
                        break;
                    }
                    present[k] = true;
                    side.push(root);
                }
            }
            if !ok {
                break;
            }
            let pieces = contact_pieces(&offsets, &present);
            let acyclic = pieces.iter().all(|(_, chi)| *chi == 1);
            let piece_side = |members: &Vec<usize>| {
                let root = |k: usize| {
                    let pos = offsets_present_rank(&present, k);
                    side[pos]
                };
                let r0 = root(members[0]);
                members.iter().all(|&m| root(m) == r0).then_some(r0)
            };
            ok = acyclic
                && if last {
                    pieces.len() == 2 && {
                        let s: Vec<_> = pieces.iter().map(|(m, _)| piece_side(m)).collect();
                        s.contains(&Some(ra)) && s.contains(&Some(rb))
                    }
                } else {
                    pieces.len() == 1 && piece_side(&pieces[0].0) == Some(ra)
                };
            if !ok {
                break;
            }
            pending.insert(w, a as u32);
        }
        if !ok {
            out.rejected += 1;
            continue;
        }
        for &w in interior {
            overlay.insert(w, a as u32);
            out.written.push(w);
        }
        uf.union(ra, rb);
        out.accepted.push(e.clone());
    }
    out
}

/// Position of offset `k` among the present offsets, in offset order.
fn offsets_present_rank(present: &[bool], k: usize) -> usize {
    present[..k].iter().filter(|&&p| p).count()
}

pub(crate) fn close_indexed(index: &SkeletonIndex, config: &GapClosingConfig) -> Result<(Vec<CandidateEdge>, Closure)> {
    let mut edges = index.candidates(config)?;
    sort_edges(&index.shape, &mut edges);
    let closure = draw_edges(index, &edges);
    Ok((edges, closure))
}

/// Labels components, detects endpoints, builds candidate edges, selects
/// them with Kruskal and draws the accepted ones as straight lines.
pub fn close_gaps(skel: &BinaryVolume, config: &GapClosingConfig) -> Result<(BinaryVolume, GapClosingReport)> {
    let scale = config.resolved_scale(skel.ndim())?;
    let index = SkeletonIndex::from_skeleton(skel, config.isolated_as_endpoints)?;
    let (edges, closure) = close_indexed(&index, config)?;
    let mut out = skel.clone();
    for &w in &closure.written {
        out.set_index(w, true);
    }
    let report = GapClosingReport {
        config: GapClosingConfig {
            scale,
            ..config.clone()
        },
        noxels_written: closure.written.len(),
        components_before: index.components,
        components_after: index.components - closure.accepted.len(),
        candidate_count: edges.len(),
        rejected_edges: closure.rejected,
        edges_added: closure.accepted,
    };
    Ok((out, report))
}
