//! Dense N-D grids stored x-fastest, plus the integer grid point type.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An N-D grid point ("noxel"): one integer index per axis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Noxel(pub SmallVec<[usize; 4]>);

impl Noxel {
    pub fn new(coords: &[usize]) -> Self {
        Noxel(SmallVec::from_slice(coords))
    }

    pub fn ndim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Largest per-axis index difference.
    pub fn chebyshev(&self, other: &Noxel) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| a.abs_diff(b))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Debug for Noxel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl From<&[usize]> for Noxel {
    fn from(c: &[usize]) -> Self {
        Noxel::new(c)
    }
}

impl<const N: usize> From<[usize; N]> for Noxel {
    fn from(c: [usize; N]) -> Self {
        Noxel::new(&c)
    }
}

/// Grid extents and x-fastest strides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("a volume needs at least one axis"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid(format!("zero-length axis in dims {dims:?}")));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut len: usize = 1;
        for &d in dims {
            strides.push(len);
            len = len
                .checked_mul(d)
                .ok_or_else(|| Error::invalid(format!("dims {dims:?} overflow usize")))?;
        }
        Ok(Shape {
            dims: dims.to_vec(),
            strides,
            len,
        })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, coords: &[usize]) -> bool {
        coords.len() == self.ndim() && coords.iter().zip(&self.dims).all(|(&c, &d)| c < d)
    }

    pub fn contains_signed(&self, coords: &[isize]) -> bool {
        coords.len() == self.ndim()
            && coords
                .iter()
                .zip(&self.dims)
                .all(|(&c, &d)| c >= 0 && (c as usize) < d)
    }

    /// Linear index of in-bounds coordinates.
    #[inline]
    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert!(self.contains(coords));
        coords.iter().zip(&self.strides).map(|(&c, &s)| c * s).sum()
    }

    pub fn checked_index(&self, coords: &[usize]) -> Result<usize> {
        if self.contains(coords) {
            Ok(self.index(coords))
        } else {
            Err(Error::invalid(format!(
                "noxel {coords:?} outside dims {:?}",
                self.dims
            )))
        }
    }

    #[inline]
    pub fn coords_into(&self, mut idx: usize, out: &mut [usize]) {
        for (o, &d) in out.iter_mut().zip(&self.dims) {
            *o = idx % d;
            idx /= d;
        }
    }

    pub fn noxel(&self, idx: usize) -> Noxel {
        let mut c = SmallVec::from_elem(0, self.ndim());
        self.coords_into(idx, &mut c);
        Noxel(c)
    }

    /// The 3^N - 1 unit offsets of the full hypercube neighborhood, in
    /// lexicographic order of the offset vector (last axis slowest).
    pub fn neighbor_offsets(&self) -> Vec<SmallVec<[isize; 4]>> {
        unit_offsets(self.ndim())
    }

    /// Calls `f` with the linear index of every in-bounds neighbor of `idx`
    /// under full (3^N - 1) connectivity.
    pub fn for_each_neighbor(&self, idx: usize, offsets: &[SmallVec<[isize; 4]>], mut f: impl FnMut(usize)) {
        let n = self.ndim();
        let mut c: SmallVec<[usize; 4]> = SmallVec::from_elem(0, n);
        self.coords_into(idx, &mut c);
        let interior = c.iter().zip(&self.dims).all(|(&ci, &d)| ci > 0 && ci + 1 < d);
        for off in offsets {
            if interior {
                let mut j = idx as isize;
                for (o, &s) in off.iter().zip(&self.strides) {
                    j += o * s as isize;
                }
                f(j as usize);
            } else {
                let mut j = 0usize;
                let mut inside = true;
                for axis in 0..n {
                    let v = c[axis] as isize + off[axis];
                    if v < 0 || v as usize >= self.dims[axis] {
                        inside = false;
                        break;
                    }
                    j += v as usize * self.strides[axis];
                }
                if inside {
                    f(j);
                }
            }
        }
    }
}

/// All nonzero vectors in {-1, 0, 1}^n.
pub fn unit_offsets(n: usize) -> Vec<SmallVec<[isize; 4]>> {
    let total = 3usize.pow(n as u32);
    let mut out = Vec::with_capacity(total - 1);
    for code in 0..total {
        let mut v = SmallVec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            v.push((c % 3) as isize - 1);
            c /= 3;
        }
        if v.iter().any(|&x| x != 0) {
            out.push(v);
        }
    }
    out
}

fn check_scale(scale: &[f64], n: usize) -> Result<()> {
    if scale.len() != n {
        return Err(Error::invalid(format!(
            "scale has {} components for a {n}-D volume",
            scale.len()
        )));
    }
    if scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::invalid(format!("scale components must be positive, got {scale:?}")));
    }
    Ok(())
}

/// Grayscale volume with finite values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    shape: Shape,
    data: Vec<T>,
    scale: Vec<f64>,
}

impl<T: Scalar> Volume<T> {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        Ok(Volume {
            data: vec![T::zero(); shape.len()],
            scale: vec![1.0; shape.ndim()],
            shape,
        })
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "data length {} != product of dims {dims:?} = {}",
                data.len(),
                shape.len()
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|v| !(v.is_finite() && *v >= T::zero() && *v <= T::one()))
        {
            return Err(Error::invalid(format!(
                "grayscale value {} at index {i} is outside [0, 1]",
                data[i]
            )));
        }
        Ok(Volume {
            scale: vec![1.0; shape.ndim()],
            shape,
            data,
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let shape = Shape::new(dims)?;
        let mut c = vec![0; shape.ndim()];
        let data = (0..shape.len())
            .map(|i| {
                shape.coords_into(i, &mut c);
                f(&c)
            })
            .collect();
        Self::from_vec(dims, data)
    }

    /// Builds a volume from data already known to lie in [0, 1].
    pub(crate) fn from_parts_unchecked(shape: Shape, data: Vec<T>, scale: Vec<f64>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Volume { shape, data, scale }
    }

    pub fn with_scale(mut self, scale: &[f64]) -> Result<Self> {
        check_scale(scale, self.shape.ndim())?;
        self.scale = scale.to_vec();
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn ndim(&self) -> usize {
        self.shape.ndim()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, coords: &[usize]) -> T {
        self.data[self.shape.index(coords)]
    }
}

/// Binary volume holding only 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryVolume {
    shape: Shape,
    data: Vec<u8>,
    scale: Vec<f64>,
}

impl BinaryVolume {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let shape = Shape::new(dims)?;
        Ok(Self::from_shape(shape))
    }

    pub(crate) fn from_shape(shape: Shape) -> Self {
        BinaryVolume {
            data: vec![0; shape.len()],
            scale: vec![1.0; shape.ndim()],
            shape,
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<u8>) -> Result<Self> {
        let shape = Shape::new(dims)?;
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "data length {} != product of dims {dims:?} = {}",
                data.len(),
                shape.len()
            )));
        }
        if let Some(i) = data.iter().position(|&v| v > 1) {
            return Err(Error::invalid(format!(
                "binary volume holds value {} at index {i}",
                data[i]
            )));
        }
        Ok(BinaryVolume {
            scale: vec![1.0; shape.ndim()],
            shape,
            data,
        })
    }

    /// Converts a grayscale volume that holds only exact 0s and 1s.
    pub fn try_from_gray<T: Scalar>(vol: &Volume<T>) -> Result<Self> {
        let mut data = Vec::with_capacity(vol.data().len());
        for (i, &v) in vol.data().iter().enumerate() {
            if v == T::zero() {
                data.push(0);
            } else if v == T::one() {
                data.push(1);
            } else {
                return Err(Error::invalid(format!(
                    "volume is not binary: value {v} at index {i}"
                )));
            }
        }
        Ok(BinaryVolume {
            shape: vol.shape().clone(),
            data,
            scale: vol.scale().to_vec(),
        })
    }

    pub fn from_noxels<'a>(dims: &[usize], noxels: impl IntoIterator<Item = &'a Noxel>) -> Result<Self> {
        let mut vol = Self::zeros(dims)?;
        for p in noxels {
            let i = vol.shape.checked_index(p.coords())?;
            vol.data[i] = 1;
        }
        Ok(vol)
    }

    pub fn with_scale(mut self, scale: &[f64]) -> Result<Self> {
        check_scale(scale, self.shape.ndim())?;
        self.scale = scale.to_vec();
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn ndim(&self) -> usize {
        self.shape.ndim()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, coords: &[usize]) -> bool {
        self.data[self.shape.index(coords)] != 0
    }

    #[inline]
    pub fn is_set(&self, idx: usize) -> bool {
        self.data[idx] != 0
    }

    pub fn set(&mut self, coords: &[usize], value: bool) -> Result<()> {
        let i = self.shape.checked_index(coords)?;
        self.data[i] = value as u8;
        Ok(())
    }

    #[inline]
    pub fn set_index(&mut self, idx: usize, value: bool) {
        self.data[idx] = value as u8;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// Linear indices of all foreground noxels, ascending.
    pub fn foreground_indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v != 0).then_some(i))
            .collect()
    }

    pub fn to_gray<T: Scalar>(&self) -> Volume<T> {
        Volume {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .map(|&v| if v != 0 { T::one() } else { T::zero() })
                .collect(),
            scale: self.scale.clone(),
        }
    }
}
