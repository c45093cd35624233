//! Separable 1-D convolution along one axis of a dense grid, and the
//! Gaussian blur built from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{Shape, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Border {
    /// Samples outside the grid are zero.
    Zero,
    /// Samples outside the grid repeat the nearest edge sample.
    Replicate,
}

/// Sampled Gaussian on `[-r, r]` with `r = ceil(3 sigma)`, normalized to sum 1.
pub fn gaussian_kernel<T: Scalar>(sigma: T) -> Result<Vec<T>> {
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let radius = kernel_radius(sigma);
    let two_s2 = T::of(2.0) * sigma * sigma;
    let mut k: Vec<T> = (-(radius as i64)..=radius as i64)
        .map(|j| {
            let x = T::of(j as f64);
            (-(x * x) / two_s2).exp()
        })
        .collect();
    let sum: T = k.iter().copied().sum();
    for w in &mut k {
        *w /= sum;
    }
    Ok(k)
}

pub(crate) fn kernel_radius<T: Scalar>(sigma: T) -> usize {
    (T::of(3.0) * sigma).ceil().to_usize().unwrap_or(0).max(1)
}

/// Convolves `src` along `axis` with an odd-length kernel centered at its
/// middle tap: `out[k] = sum_j w[j] src[k - j]`.
pub(crate) fn convolve_axis<T: Scalar>(
    shape: &Shape,
    src: &[T],
    axis: usize,
    kernel: &[T],
    border: Border,
) -> Vec<T> {
    debug_assert_eq!(kernel.len() % 2, 1);
    let radius = (kernel.len() / 2) as isize;
    let d = shape.dims()[axis] as isize;
    let s = shape.strides()[axis];
    let mut out = vec![T::zero(); src.len()];

    // Source position along the axis for output k and tap t, or None when it
    // falls in zero padding.
    let tap = move |k: isize, t: usize| -> Option<usize> {
        let pos = k - (t as isize - radius);
        if pos >= 0 && pos < d {
            Some(pos as usize)
        } else {
            match border {
                Border::Zero => None,
                Border::Replicate => Some(pos.clamp(0, d - 1) as usize),
            }
        }
    };

    if s == 1 {
        let du = d as usize;
        out.par_chunks_mut(du)
            .zip(src.par_chunks(du))
            .for_each(|(row_out, row_in)| {
                for (k, o) in row_out.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for (t, &w) in kernel.iter().enumerate() {
                        if let Some(p) = tap(k as isize, t) {
                            acc += w * row_in[p];
                        }
                    }
                    *o = acc;
                }
            });
    } else {
        let du = d as usize;
        out.par_chunks_mut(s).enumerate().for_each(|(c, plane)| {
            let outer = c / du;
            let k = (c % du) as isize;
            let base = outer * s * du;
            for (t, &w) in kernel.iter().enumerate() {
                if let Some(p) = tap(k, t) {
                    let src_plane = &src[base + p * s..base + (p + 1) * s];
                    for (o, &v) in plane.iter_mut().zip(src_plane) {
                        *o += w * v;
                    }
                }
            }
        });
    }
    out
}

/// Applies the same 1-D kernel along every axis.
pub(crate) fn convolve_separable<T: Scalar>(shape: &Shape, src: &[T], kernel: &[T], border: Border) -> Vec<T> {
    let mut cur = convolve_axis(shape, src, 0, kernel, border);
    for axis in 1..shape.ndim() {
        cur = convolve_axis(shape, &cur, axis, kernel, border);
    }
    cur
}

/// Separable Gaussian blur with zero padding; the result is clamped to [0, 1].
pub fn gaussian_blur<T: Scalar>(vol: &Volume<T>, sigma: T) -> Result<Volume<T>> {
    let kernel = gaussian_kernel(sigma)?;
    let mut data = convolve_separable(vol.shape(), vol.data(), &kernel, Border::Zero);
    for v in &mut data {
        *v = v.max(T::zero()).min(T::one());
    }
    Ok(Volume::from_parts_unchecked(
        vol.shape().clone(),
        data,
        vol.scale().to_vec(),
    ))
}
