//! Digital topology of binary volumes.
//!
//! A foreground noxel is read as the closed unit cube around it. Two noxels
//! touch iff they are (3^N - 1)-adjacent, and axis-aligned boxes that touch
//! pairwise share a common point, so a clique of mutually adjacent noxels is
//! contractible. Loops are therefore counted as the first Betti number of
//! the cube union, not as the cycle rank of the raw adjacency graph (which
//! would count every diagonal junction as a loop).

use std::collections::HashSet;

use smallvec::SmallVec;

use crate::components::label_components;
use crate::error::{Error, Result};
use crate::volume::{unit_offsets, BinaryVolume};

/// Euler characteristic of the union of closed foreground cubes.
pub fn euler_characteristic(vol: &BinaryVolume) -> i64 {
    let shape = vol.shape();
    let n = shape.ndim();
    // Cells live on the doubled lattice: a cell is odd on its open axes.
    let doubled: Vec<u64> = shape.dims().iter().map(|&d| 2 * d as u64 + 1).collect();
    let mut cells: HashSet<u64> = HashSet::new();
    let mut c = vec![0usize; n];
    let faces = 3usize.pow(n as u32);
    for i in vol.foreground_indices() {
        shape.coords_into(i, &mut c);
        for code in 0..faces {
            let mut key = 0u64;
            let mut mul = 1u64;
            let mut k = code;
            for axis in 0..n {
                let o = (k % 3) as u64;
                k /= 3;
                // 2c + 1 + (o - 1)
                key += (2 * c[axis] as u64 + o) * mul;
                mul *= doubled[axis];
            }
            cells.insert(key);
        }
    }
    let mut chi = 0i64;
    for key in cells {
        let mut k = key;
        let mut odd = 0;
        for &d in &doubled {
            odd += (k % d) % 2;
            k /= d;
        }
        chi += if odd % 2 == 0 { 1 } else { -1 };
    }
    chi
}

/// Background components (face connectivity) enclosed by foreground.
pub fn cavity_count(vol: &BinaryVolume) -> usize {
    let shape = vol.shape();
    let n = shape.ndim();
    let fg = vol.foreground_indices();
    if fg.is_empty() {
        return 0;
    }
    // Bounding box grown by one noxel: everything outside it is background
    // connected to infinity.
    let mut lo = vec![usize::MAX; n];
    let mut hi = vec![0usize; n];
    let mut c = vec![0usize; n];
    for &i in &fg {
        shape.coords_into(i, &mut c);
        for a in 0..n {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let blo: Vec<isize> = lo.iter().map(|&x| x as isize - 1).collect();
    let bdims: Vec<usize> = (0..n).map(|a| hi[a] - lo[a] + 3).collect();
    let blen: usize = bdims.iter().product();
    let at = |b: &[usize]| -> bool {
        let mut idx = 0usize;
        for a in 0..n {
            let v = blo[a] + b[a] as isize;
            if v < 0 || v as usize >= shape.dims()[a] {
                return false;
            }
            idx += v as usize * shape.strides()[a];
        }
        vol.is_set(idx)
    };
    let mut seen = vec![false; blen];
    let mut bstride = vec![1usize; n];
    for a in 1..n {
        bstride[a] = bstride[a - 1] * bdims[a - 1];
    }
    let decode = |mut i: usize, out: &mut [usize]| {
        for a in 0..n {
            out[a] = i % bdims[a];
            i /= bdims[a];
        }
    };
    let mut cavities = 0;
    let mut stack = Vec::new();
    let mut b = vec![0usize; n];
    for start in 0..blen {
        if seen[start] {
            continue;
        }
        decode(start, &mut b);
        if at(&b) {
            continue;
        }
        let mut touches_box = false;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            decode(i, &mut b);
            for a in 0..n {
                if b[a] == 0 || b[a] + 1 == bdims[a] {
                    touches_box = true;
                }
            }
            for a in 0..n {
                for dir in [-1isize, 1] {
                    let v = b[a] as isize + dir;
                    if v < 0 || v as usize >= bdims[a] {
                        continue;
                    }
                    let j = (i as isize + dir * bstride[a] as isize) as usize;
                    if seen[j] {
                        continue;
                    }
                    let old = b[a];
                    b[a] = v as usize;
                    let is_fg = at(&b);
                    b[a] = old;
                    if !is_fg {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if !touches_box {
            cavities += 1;
        }
    }
    cavities
}

/// Number of independent loops (first Betti number) of the foreground.
/// Supported for N = 2 and N = 3.
pub fn cycle_rank(vol: &BinaryVolume) -> Result<usize> {
    let n = vol.ndim();
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension {
            op: "cycle_rank",
            expected: 3,
            got: n,
        });
    }
    let b0 = label_components(vol).count() as i64;
    let chi = euler_characteristic(vol);
    let b1 = if n == 2 {
        b0 - chi
    } else {
        b0 + cavity_count(vol) as i64 - chi
    };
    debug_assert!(b1 >= 0);
    Ok(b1 as usize)
}

/// Neighborhood contact analysis for one noxel `w` about to be set.
///
/// `present[k]` says whether the neighbor at `offsets[k]` is foreground.
/// Returns the connected pieces of the contact complex (the part of the
/// boundary of `w`'s cube covered by foreground cubes) as lists of offset
/// indices, each with its Euler characteristic. A piece with characteristic
/// 1 is acyclic, so attaching `w` to it cannot create a loop.
pub(crate) fn contact_pieces(offsets: &[SmallVec<[isize; 4]>], present: &[bool]) -> Vec<(Vec<usize>, i64)> {
    let idx: Vec<usize> = (0..offsets.len()).filter(|&k| present[k]).collect();
    let mut parent: Vec<usize> = (0..idx.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let faces_meet = |a: &[isize], b: &[isize]| a.iter().zip(b).all(|(&x, &y)| x * y >= 0);
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if faces_meet(&offsets[idx[i]], &offsets[idx[j]]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &member) in idx.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(member),
            None => groups.push((r, vec![member])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let chi = offsets
                .iter()
                .filter(|cell| {
                    members.iter().any(|&m| {
                        offsets[m]
                            .iter()
                            .zip(cell.iter())
                            .all(|(&o, &c)| o == 0 || o == c)
                    })
                })
                .map(|cell| if cell.iter().filter(|&&x| x == 0).count() % 2 == 0 { 1 } else { -1 })
                .sum();
            (members, chi)
        })
        .collect()
}

/// Offsets of the full neighborhood, re-exported for callers of
/// [`contact_pieces`].
pub(crate) fn neighborhood(n: usize) -> Vec<SmallVec<[isize; 4]>> {
    unit_offsets(n)
}
