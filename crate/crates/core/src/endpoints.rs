//! N-D skeleton endpoint detection.
//!
//! The volume is convolved with a 3^N hypercube filter that is 1 everywhere
//! except the center, which holds 3^N + 1. A background noxel scores at most
//! 3^N - 1, so a score of exactly 3^N + 2 marks a foreground noxel with one
//! foreground neighbor. Borders are zero padded.

use crate::volume::{BinaryVolume, Noxel, Shape};

#[derive(Clone, Debug)]
pub struct EndpointScan {
    shape: Shape,
    neighbor_score: Vec<u32>,
    endpoints: Vec<usize>,
}

impl EndpointScan {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The filtered volume, one score per noxel.
    pub fn neighbor_score(&self) -> &[u32] {
        &self.neighbor_score
    }

    /// Linear indices of endpoints, ascending.
    pub fn endpoint_indices(&self) -> &[usize] {
        &self.endpoints
    }

    pub fn endpoints(&self) -> Vec<Noxel> {
        self.endpoints.iter().map(|&i| self.shape.noxel(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// Filter center weight, 3^N + 1.
    pub fn center_weight(&self) -> u32 {
        center_weight(self.shape.ndim())
    }

    /// Foreground noxels without any foreground neighbor (score 3^N + 1).
    pub fn isolated_indices(&self) -> Vec<usize> {
        let c = self.center_weight();
        self.neighbor_score
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == c).then_some(i))
            .collect()
    }

    pub fn is_endpoint(&self, idx: usize) -> bool {
        self.neighbor_score[idx] == self.center_weight() + 1
    }
}

pub(crate) fn center_weight(ndim: usize) -> u32 {
    3u32.pow(ndim as u32) + 1
}

pub fn detect_endpoints(vol: &BinaryVolume) -> EndpointScan {
    let shape = vol.shape().clone();
    let offsets = shape.neighbor_offsets();
    let center = center_weight(shape.ndim());
    let foreground = vol.foreground_indices();

    // Direct neighbor summation: the filter is symmetric, so scattering each
    // foreground noxel onto its neighbors equals the convolution.
    let mut score = vec![0u32; shape.len()];
    for &i in &foreground {
        score[i] += center;
        shape.for_each_neighbor(i, &offsets, |j| score[j] += 1);
    }
    let endpoints = foreground
        .into_iter()
        .filter(|&i| score[i] == center + 1)
        .collect();

    EndpointScan {
        shape,
        neighbor_score: score,
        endpoints,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Generic zero-padded convolution with the hypercube endpoint kernel.
    fn convolve_hypercube(vol: &BinaryVolume) -> Vec<u32> {
        let shape = vol.shape();
        let n = shape.ndim();
        let kernel_len = 3usize.pow(n as u32);
        let center = center_weight(n);
        let mut out = vec![0u32; shape.len()];
        let mut c = vec![0usize; n];
        for (i, o) in out.iter_mut().enumerate() {
            shape.coords_into(i, &mut c);
            for k in 0..kernel_len {
                let mut code = k;
                let mut off = vec![0isize; n];
                for v in off.iter_mut() {
                    *v = (code % 3) as isize - 1;
                    code /= 3;
                }
                let weight = if off.iter().all(|&x| x == 0) { center } else { 1 };
                let q: Vec<isize> = c.iter().zip(&off).map(|(&a, &b)| a as isize + b).collect();
                if shape.contains_signed(&q) {
                    let q: Vec<usize> = q.iter().map(|&x| x as usize).collect();
                    *o += weight * vol.data()[shape.index(&q)] as u32;
                }
            }
        }
        out
    }

    #[test]
    fn three_voxel_line_3d() {
        let pts = [[0, 1, 1], [1, 1, 1], [2, 1, 1]].map(Noxel::from);
        let v = BinaryVolume::from_noxels(&[4, 3, 3], &pts).unwrap();
        let scan = detect_endpoints(&v);
        assert_eq!(scan.endpoints(), vec![pts[0].clone(), pts[2].clone()]);
        for e in scan.endpoint_indices() {
            assert_eq!(scan.neighbor_score()[*e], 29);
        }
    }

    #[test]
    fn isolated_voxel_is_not_an_endpoint() {
        let v = BinaryVolume::from_noxels(&[3, 3, 3], &[Noxel::from([1, 1, 1])]).unwrap();
        let scan = detect_endpoints(&v);
        assert!(scan.is_empty());
        assert_eq!(scan.neighbor_score()[13], 28);
        assert_eq!(scan.isolated_indices(), vec![13]);
    }

    #[test]
    fn two_d_line_scores_eleven() {
        let pts = [[1, 2], [2, 2], [3, 2]].map(Noxel::from);
        let v = BinaryVolume::from_noxels(&[5, 5], &pts).unwrap();
        let scan = detect_endpoints(&v);
        assert_eq!(scan.endpoints(), vec![pts[0].clone(), pts[2].clone()]);
        let s = v.shape();
        assert_eq!(scan.neighbor_score()[s.index(&[1, 2])], 11);
        assert_eq!(scan.neighbor_score()[s.index(&[3, 2])], 11);
    }

    #[test]
    fn scatter_matches_generic_convolution() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for dims in [vec![9usize], vec![7, 6], vec![5, 6, 4], vec![3, 4, 3, 3]] {
            let len: usize = dims.iter().product();
            let data = (0..len).map(|_| rng.random_bool(0.35) as u8).collect();
            let v = BinaryVolume::from_vec(&dims, data).unwrap();
            assert_eq!(detect_endpoints(&v).neighbor_score(), convolve_hypercube(&v).as_slice());
        }
    }
}
