use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use super::{Branch, DirectionWeights, HyphalTree, SynthesisConfig};
use crate::error::{Error, Result};
use crate::volume::{unit_offsets, Noxel, Shape};

type Dir = SmallVec<[isize; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DirectionCategory {
    InPlane,
    Down,
    Up,
}

impl DirectionCategory {
    pub fn of(dir: &[isize]) -> Self {
        match dir.last().copied().unwrap_or(0) {
            0 => DirectionCategory::InPlane,
            d if d > 0 => DirectionCategory::Down,
            _ => DirectionCategory::Up,
        }
    }
}

fn dot(a: &[isize], b: &[isize]) -> isize {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws a new direction for a branch currently moving along `prev`: a
/// category by weight (among categories that have an admissible offset),
/// then a uniform offset within it. Admissible offsets differ from `prev`
/// and have a positive dot product with it, so a branch never curls back.
pub fn sample_direction_change<R: Rng + ?Sized>(
    prev: &[isize],
    weights: &DirectionWeights,
    rng: &mut R,
) -> Option<Dir> {
    sample_from(&unit_offsets(prev.len()), prev, weights, rng)
}

fn sample_from<R: Rng + ?Sized>(
    offsets: &[Dir],
    prev: &[isize],
    weights: &DirectionWeights,
    rng: &mut R,
) -> Option<Dir> {
    let cats = [
        (DirectionCategory::InPlane, weights.in_plane),
        (DirectionCategory::Down, weights.down),
        (DirectionCategory::Up, weights.up),
    ];
    let mut pools: Vec<(f64, Vec<&Dir>)> = Vec::with_capacity(3);
    for (cat, w) in cats {
        let pool: Vec<&Dir> = offsets
            .iter()
            .filter(|o| o.as_slice() != prev && dot(o, prev) > 0 && DirectionCategory::of(o) == cat)
            .collect();
        if w > 0.0 && !pool.is_empty() {
            pools.push((w, pool));
        }
    }
    let total: f64 = pools.iter().map(|p| p.0).sum();
    if pools.is_empty() {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut chosen = pools.len() - 1;
    for (i, (w, _)) in pools.iter().enumerate() {
        if u < *w {
            chosen = i;
            break;
        }
        u -= w;
    }
    let pool = &pools[chosen].1;
    Some(pool[rng.random_range(0..pool.len())].clone())
}

#[derive(Clone, Copy)]
struct Owner {
    network: u32,
    branch: u32,
    pos: u32,
}

struct Pending {
    parent: (usize, usize),
    dir: Dir,
}

struct Grower<'a, R> {
    config: &'a SynthesisConfig,
    shape: Shape,
    offsets: Vec<Dir>,
    occupied: HashMap<usize, Owner>,
    networks: u32,
    rng: &'a mut R,
}

impl<'a, R: Rng> Grower<'a, R> {
    fn new(config: &'a SynthesisConfig, rng: &'a mut R) -> Result<Self> {
        config.validate()?;
        let shape = Shape::new(&config.dims)?;
        Ok(Grower {
            offsets: unit_offsets(shape.ndim()),
            shape,
            config,
            occupied: HashMap::new(),
            networks: 0,
            rng,
        })
    }

    fn step(&self, from: &[usize], dir: &[isize]) -> Option<Noxel> {
        let next: Vec<isize> = from.iter().zip(dir).map(|(&c, &d)| c as isize + d).collect();
        self.shape
            .contains_signed(&next)
            .then(|| Noxel(next.iter().map(|&v| v as usize).collect()))
    }

    /// True if `idx` is free and every occupied neighbor satisfies `allowed`.
    fn placeable(&self, idx: usize, allowed: impl Fn(&Owner) -> bool) -> bool {
        if self.occupied.contains_key(&idx) {
            return false;
        }
        let mut ok = true;
        self.shape.for_each_neighbor(idx, &self.offsets, |j| {
            if let Some(o) = self.occupied.get(&j) {
                ok &= allowed(o);
            }
        });
        ok
    }

    fn sample_start(&mut self) -> Result<(Noxel, Dir)> {
        let n = self.shape.ndim();
        let dims = self.shape.dims().to_vec();
        let m = self.config.start_margin;
        let [z0, z1] = self.config.start_depth;
        for _ in 0..1000 {
            let mut c: SmallVec<[usize; 4]> = SmallVec::with_capacity(n);
            for &d in &dims[..n - 1] {
                c.push(self.rng.random_range(m..=d - 1 - m));
            }
            c.push(self.rng.random_range(z0..=z1));
            let idx = self.shape.index(&c);
            if self.placeable(idx, |_| false) {
                let initial: Vec<&Dir> = self
                    .offsets
                    .iter()
                    .filter(|o| DirectionCategory::of(o) != DirectionCategory::Up)
                    .collect();
                let dir = initial[self.rng.random_range(0..initial.len())].clone();
                return Ok((Noxel(c), dir));
            }
        }
        Err(Error::invalid("no free start position for another network"))
    }

    fn grow(&mut self, start: Noxel, dir: Dir) -> Result<HyphalTree> {
        let start_idx = self.shape.checked_index(start.coords())?;
        if dir.len() != self.shape.ndim() || dir.iter().all(|&d| d == 0) || dir.iter().any(|d| d.abs() > 1) {
            return Err(Error::invalid(format!("initial direction {dir:?} is not a unit offset")));
        }
        if !self.placeable(start_idx, |_| false) {
            return Err(Error::invalid(format!("start {start:?} touches an existing network")));
        }
        let network = self.networks;
        self.networks += 1;

        let mut branches: Vec<Branch> = Vec::new();
        let mut pending: VecDeque<Pending> = VecDeque::new();

        self.occupied.insert(
            start_idx,
            Owner { network, branch: 0, pos: 0 },
        );
        branches.push(Branch { parent: None, path: vec![start] });
        self.extend(&mut branches, &mut pending, network, 0, dir, 0);

        while let Some(p) = pending.pop_front() {
            let (pb, pi) = p.parent;
            let anchor = branches[pb].path[pi].clone();
            let Some(first) = self.step(anchor.coords(), &p.dir) else {
                continue;
            };
            let idx = self.shape.index(first.coords());
            // A child may touch its parent near the attachment point only.
            let near_anchor = |o: &Owner| {
                o.network == network && o.branch as usize == pb && (o.pos as usize).abs_diff(pi) <= 2
            };
            if !self.placeable(idx, near_anchor) {
                continue;
            }
            let bi = branches.len();
            self.occupied.insert(idx, Owner { network, branch: bi as u32, pos: 0 });
            branches.push(Branch { parent: Some((pb, pi)), path: vec![first] });
            self.extend(&mut branches, &mut pending, network, bi, p.dir, 1);
        }
        Ok(HyphalTree { branches })
    }

    fn extend(
        &mut self,
        branches: &mut [Branch],
        pending: &mut VecDeque<Pending>,
        network: u32,
        bi: usize,
        mut dir: Dir,
        mut steps: usize,
    ) {
        let weights = self.config.direction_weights;
        let mut first = true;
        while steps < self.config.max_branch_length {
            // The branch keeps its initial direction for its first step.
            if !first && !self.rng.random_bool(self.config.p_keep_direction) {
                if let Some(d) = sample_from(&self.offsets, &dir, &weights, self.rng) {
                    dir = d;
                }
            }
            first = false;
            let cur = branches[bi].path.last().expect("nonempty path").clone();
            let Some(next) = self.step(cur.coords(), &dir) else {
                break;
            };
            let idx = self.shape.index(next.coords());
            // Only the current tip may touch the new noxel.
            let tip = branches[bi].path.len() - 1;
            if !self.placeable(idx, |o| o.network == network && o.branch as usize == bi && o.pos as usize == tip) {
                break;
            }
            let pos = branches[bi].path.len();
            self.occupied.insert(idx, Owner { network, branch: bi as u32, pos: pos as u32 });
            branches[bi].path.push(next);
            steps += 1;

            if self.rng.random_bool(self.config.p_branch)
                && branches.len() + pending.len() < self.config.max_branches
            {
                if let Some(child) = sample_from(&self.offsets, &dir, &weights, self.rng) {
                    pending.push_back(Pending { parent: (bi, pos), dir: child });
                }
            }
        }
    }
}

/// Grows one network with a random start. Deterministic in `(config, seed)`.
pub fn grow_network(config: &SynthesisConfig, seed: u64) -> Result<HyphalTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Grower::new(config, &mut rng)?;
    let (start, dir) = g.sample_start()?;
    g.grow(start, dir)
}

/// Grows one network from a given root noxel and initial direction.
pub fn grow_network_from(config: &SynthesisConfig, start: &Noxel, direction: &[isize], seed: u64) -> Result<HyphalTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Grower::new(config, &mut rng)?;
    g.grow(start.clone(), SmallVec::from_slice(direction))
}

/// Grows a stack's worth of networks (count drawn from
/// `networks_per_stack`). Networks never touch each other.
pub fn grow_networks(config: &SynthesisConfig, seed: u64) -> Result<Vec<HyphalTree>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = config.networks_per_stack;
    let count = rng.random_range(lo..=hi);
    let mut g = Grower::new(config, &mut rng)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (start, dir) = g.sample_start()?;
        out.push(g.grow(start, dir)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::label_components;
    use crate::synth::trees_to_skeleton;

    fn small() -> SynthesisConfig {
        SynthesisConfig { dims: vec![150, 150, 50], ..Default::default() }
    }

    #[test]
    fn degenerate_probabilities_give_a_straight_branch() {
        let config = SynthesisConfig {
            p_branch: 0.0,
            p_keep_direction: 1.0,
            max_branch_length: 10,
            ..Default::default()
        };
        let tree = grow_network_from(&config, &Noxel::from([250, 250, 5]), &[1, 0, 0], 3).unwrap();
        assert_eq!(tree.branches.len(), 1);
        let expected: Vec<Noxel> = (0..11).map(|k| Noxel::from([250 + k, 250, 5])).collect();
        assert_eq!(tree.branches[0].path, expected);
    }

    #[test]
    fn growth_is_deterministic() {
        let a = grow_network(&small(), 17).unwrap();
        let b = grow_network(&small(), 17).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert_ne!(a, grow_network(&small(), 18).unwrap());
    }

    #[test]
    fn trees_are_valid_and_never_curl_back() {
        let config = small();
        let mut branches = 0;
        let mut seed = 0;
        while branches < 1000 {
            let tree = grow_network(&config, seed).unwrap();
            tree.validate().unwrap();
            for b in &tree.branches {
                let dirs: Vec<Vec<isize>> = b
                    .path
                    .windows(2)
                    .map(|w| w[1].coords().iter().zip(w[0].coords()).map(|(&x, &y)| x as isize - y as isize).collect())
                    .collect();
                for d in dirs.windows(2) {
                    assert!(dot(&d[0], &d[1]) > 0, "curl back {:?} -> {:?}", d[0], d[1]);
                }
            }
            branches += tree.branches.len();
            seed += 1;
        }
    }

    #[test]
    fn each_network_is_one_component() {
        let config = SynthesisConfig { dims: vec![200, 200, 60], ..Default::default() };
        for seed in 0..8 {
            let trees = grow_networks(&config, seed).unwrap();
            assert!((1..=5).contains(&trees.len()));
            let skel = trees_to_skeleton(&trees, &config.dims).unwrap();
            assert_eq!(label_components(&skel).count(), trees.len(), "seed {seed}");
        }
    }

    #[test]
    fn upward_moves_are_rarest() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let offsets = unit_offsets(3);
        let w = DirectionWeights::default();
        let mut counts = HashMap::new();
        let mut prev: Dir = SmallVec::from_slice(&[1, 0, 0]);
        for _ in 0..100_000 {
            let d = sample_from(&offsets, &prev, &w, &mut rng).unwrap();
            *counts.entry(DirectionCategory::of(&d)).or_insert(0usize) += 1;
            prev = d;
        }
        let up = counts[&DirectionCategory::Up];
        assert!(up < counts[&DirectionCategory::InPlane]);
        assert!(up < counts[&DirectionCategory::Down]);
    }

    #[test]
    fn too_small_volume_is_rejected() {
        let config = SynthesisConfig { dims: vec![40, 100, 50], ..Default::default() };
        assert!(matches!(grow_network(&config, 0), Err(Error::InvalidArgument(_))));
    }
}
