use rayon::prelude::*;

use crate::blur::{convolve_axis, gaussian_kernel, Border};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{Shape, Volume};

/// Gaussian smoothing, first and second derivative taps at scale `sigma`,
/// sampled on `[-r, r]` and corrected so their discrete moments are exact:
/// `sum g = 1`, `-sum k g'(k) = 1`, `sum g'' = 0`, `sum k^2 g''(k) = 2`.
/// With these, linear and quadratic signals differentiate exactly.
pub(crate) fn derivative_kernels(sigma: f64) -> Result<[Vec<f64>; 3]> {
    let g = gaussian_kernel(sigma)?;
    let r = (g.len() / 2) as i64;
    let ks: Vec<f64> = (-r..=r).map(|k| k as f64).collect();
    let s2 = sigma * sigma;

    let mut d1: Vec<f64> = ks.iter().zip(&g).map(|(k, w)| -k / s2 * w).collect();
    let m1: f64 = ks.iter().zip(&d1).map(|(k, w)| -k * w).sum();
    d1.iter_mut().for_each(|w| *w /= m1);

    let mut d2: Vec<f64> = ks.iter().zip(&g).map(|(k, w)| (k * k / (s2 * s2) - 1.0 / s2) * w).collect();
    let m0: f64 = d2.iter().sum();
    d2.iter_mut().zip(&g).for_each(|(w, gw)| *w -= m0 * gw);
    let m2: f64 = ks.iter().zip(&d2).map(|(k, w)| k * k * w).sum();
    d2.iter_mut().for_each(|w| *w *= 2.0 / m2);

    Ok([g, d1, d2])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Parity {
    Odd,
    Even,
}

/// Convolution with a zero-sum derivative kernel along `axis`, replicated
/// borders. Taps are paired around the center so that constant input gives
/// exactly zero: odd kernels use `w_j (x[k-j] - x[k+j])`, even kernels
/// `w_j (x[k-j] + x[k+j] - 2 x[k])`.
fn derivative_axis<T: Scalar>(shape: &Shape, src: &[T], axis: usize, kernel: &[T], parity: Parity) -> Vec<T> {
    let r = kernel.len() / 2;
    let half = &kernel[r + 1..];
    let d = shape.dims()[axis] as isize;
    let s = shape.strides()[axis];
    let du = d as usize;
    let clamp = |p: isize| p.clamp(0, d - 1) as usize;
    let mut out = vec![T::zero(); src.len()];
    out.par_chunks_mut(s).enumerate().for_each(|(c, plane)| {
        let k = (c % du) as isize;
        let base = (c / du) * s * du;
        let row = |p: usize| &src[base + p * s..base + (p + 1) * s];
        let center = row(k as usize);
        for (j, &w) in half.iter().enumerate() {
            let j = j as isize + 1;
            let (lo, hi) = (row(clamp(k - j)), row(clamp(k + j)));
            match parity {
                Parity::Odd => {
                    for ((o, &a), &b) in plane.iter_mut().zip(lo).zip(hi) {
                        *o += w * (a - b);
                    }
                }
                Parity::Even => {
                    for (((o, &a), &b), &m) in plane.iter_mut().zip(lo).zip(hi).zip(center) {
                        *o += w * (a + b - (m + m));
                    }
                }
            }
        }
    });
    out
}

/// The six distinct entries of the sigma^2-normalized Gaussian-derivative
/// Hessian, each a dense grid: xx, xy, xz, yy, yz, zz.
pub(crate) fn hessian_components<T: Scalar>(vol: &Volume<T>, sigma: f64) -> Result<[Vec<T>; 6]> {
    if vol.ndim() != 3 {
        return Err(Error::UnsupportedDimension {
            op: "hessian",
            expected: 3,
            got: vol.ndim(),
        });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let [g, d1, d2] = derivative_kernels(sigma)?;
    let cast = |k: &[f64]| k.iter().map(|&w| T::of(w)).collect::<Vec<T>>();
    let (g, d1, d2) = (cast(&g), cast(&d1), cast(&d2));
    let shape = vol.shape();
    let f = vol.data();
    let smooth = |src: &[T], axis: usize| convolve_axis(shape, src, axis, &g, Border::Replicate);
    let first = |src: &[T], axis: usize| derivative_axis(shape, src, axis, &d1, Parity::Odd);
    let second = |src: &[T], axis: usize| derivative_axis(shape, src, axis, &d2, Parity::Even);

    let a = smooth(f, 2);
    let (b, c, d) = (smooth(&a, 1), first(&a, 1), second(&a, 1));
    drop(a);
    let hxx = second(&b, 0);
    drop(b);
    let hxy = first(&c, 0);
    drop(c);
    let hyy = smooth(&d, 0);
    drop(d);
    let e = first(f, 2);
    let hxz = first(&smooth(&e, 1), 0);
    let hyz = smooth(&first(&e, 1), 0);
    drop(e);
    let hzz = smooth(&smooth(&second(f, 2), 1), 0);

    let norm = T::of(sigma * sigma);
    let mut out = [hxx, hxy, hxz, hyy, hyz, hzz];
    for h in &mut out {
        h.par_iter_mut().for_each(|v| *v *= norm);
    }
    Ok(out)
}

/// Eigenvalues of the symmetric matrix `[[a, d, e], [d, b, f], [e, f, c]]`,
/// sorted by absolute value.
pub fn symmetric_eigenvalues3(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> [f64; 3] {
    let p1 = d * d + e * e + f * f;
    let mut l = if p1 == 0.0 {
        [a, b, c]
    } else {
        let q = (a + b + c) / 3.0;
        let p2 = (a - q).powi(2) + (b - q).powi(2) + (c - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let (ba, bb, bc) = ((a - q) / p, (b - q) / p, (c - q) / p);
        let (bd, be, bf) = (d / p, e / p, f / p);
        let det = ba * (bb * bc - bf * bf) - bd * (bd * bc - bf * be) + be * (bd * bf - bb * be);
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        let l1 = q + 2.0 * p * phi.cos();
        let l3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [l1, 3.0 * q - l1 - l3, l3]
    };
    l.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    l
}

/// Per-voxel Hessian eigenvalues at one scale.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianEigen<T> {
    shape: Shape,
    values: Vec<[T; 3]>,
}

impl<T: Scalar> HessianEigen<T> {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Triples sorted by `|l1| <= |l2| <= |l3|`, x-fastest.
    pub fn values(&self) -> &[[T; 3]] {
        &self.values
    }

    pub fn at(&self, coords: &[usize]) -> [T; 3] {
        self.values[self.shape.index(coords)]
    }
}

/// Eigenvalues of the sigma^2-normalized Gaussian-derivative Hessian of a
/// 3-D volume, with replicated borders.
pub fn hessian_eigenvalues<T: Scalar>(vol: &Volume<T>, sigma: f64) -> Result<HessianEigen<T>> {
    let h = hessian_components(vol, sigma)?;
    let values = (0..vol.data().len())
        .into_par_iter()
        .map(|i| {
            let g = |k: usize| h[k][i].to_f64_lossy();
            let l = symmetric_eigenvalues3(g(0), g(3), g(5), g(1), g(2), g(4));
            [T::of(l[0]), T::of(l[1]), T::of(l[2])]
        })
        .collect();
    Ok(HessianEigen {
        shape: vol.shape().clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_moments_are_exact() {
        for sigma in [0.75, 1.0, 1.5, 2.5] {
            let [g, d1, d2] = derivative_kernels(sigma).unwrap();
            let r = (g.len() / 2) as f64;
            let k = |i: usize| i as f64 - r;
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d1.iter().sum::<f64>().abs() < 1e-12);
            assert!((d1.iter().enumerate().map(|(i, w)| -k(i) * w).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d2.iter().sum::<f64>().abs() < 1e-12);
            assert!((d2.iter().enumerate().map(|(i, w)| k(i) * k(i) * w).sum::<f64>() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let l = symmetric_eigenvalues3(2.0, -3.0, 1.0, 0.0, 0.0, 0.0);
        assert_eq!(l, [1.0, 2.0, -3.0]);
        // [[2,1,0],[1,2,0],[0,0,5]] has eigenvalues 1, 3, 5.
        let l = symmetric_eigenvalues3(2.0, 2.0, 5.0, 1.0, 0.0, 0.0);
        for (x, y) in l.iter().zip([1.0, 3.0, 5.0]) {
            assert!((x - y).abs() < 1e-12, "{l:?}");
        }
        // Trace and determinant of a full matrix.
        let (a, b, c, d, e, f) = (0.3, -1.2, 0.7, 0.4, -0.25, 0.9);
        let l = symmetric_eigenvalues3(a, b, c, d, e, f);
        let det = a * (b * c - f * f) - d * (d * c - f * e) + e * (d * f - b * e);
        assert!((l.iter().sum::<f64>() - (a + b + c)).abs() < 1e-12);
        assert!((l.iter().product::<f64>() - det).abs() < 1e-12);
    }

    #[test]
    fn constant_volume_has_zero_hessian() {
        let v = Volume::<f64>::from_fn(&[12, 12, 12], |_| 0.37).unwrap();
        let h = hessian_eigenvalues(&v, 1.0).unwrap();
        assert!(h.values().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn requires_three_dimensions() {
        let v = Volume::<f64>::zeros(&[8, 8]).unwrap();
        assert!(matches!(
            hessian_eigenvalues(&v, 1.0),
            Err(Error::UnsupportedDimension { got: 2, .. })
        ));
    }

    #[test]
    fn bright_tube_structure() {
        let s = 1.5f64;
        let v = Volume::<f64>::from_fn(&[24, 21, 21], |c| {
            let (y, z) = (c[1] as f64 - 10.0, c[2] as f64 - 10.0);
            (-(y * y + z * z) / (2.0 * s * s)).exp()
        })
        .unwrap();
        let [l1, l2, l3] = hessian_eigenvalues(&v, 1.5).unwrap().at(&[12, 10, 10]);
        assert!(l2 < 0.0 && l3 < 0.0);
        assert!(l1.abs() < 1e-3 * l2.abs());
        assert!((l2 - l3).abs() < 1e-6 * l3.abs());
    }

    #[test]
    fn quadratic_matches_finite_differences() {
        // f = (x^2 + 2 y^2 + 3 z^2) / 4000 stays inside [0, 1] on the grid.
        let scale = 1.0 / 4000.0;
        let f = |x: f64, y: f64, z: f64| (x * x + 2.0 * y * y + 3.0 * z * z) * scale;
        let dims = [20, 20, 20];
        let v = Volume::<f64>::from_fn(&dims, |c| f(c[0] as f64, c[1] as f64, c[2] as f64)).unwrap();
        let sigma = 1.0;
        let h = hessian_components(&v, sigma).unwrap();
        let shape = v.shape();
        let fd = |c: [f64; 3], a: usize, b: usize| {
            let step = |c: [f64; 3], ax: usize, d: f64| {
                let mut c = c;
                c[ax] += d;
                c
            };
            let e = |c: [f64; 3]| f(c[0], c[1], c[2]);
            if a == b {
                e(step(c, a, 1.0)) - 2.0 * e(c) + e(step(c, a, -1.0))
            } else {
                (e(step(step(c, a, 1.0), b, 1.0)) - e(step(step(c, a, 1.0), b, -1.0))
                    - e(step(step(c, a, -1.0), b, 1.0))
                    + e(step(step(c, a, -1.0), b, -1.0)))
                    / 4.0
            }
        };
        let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        for z in 6..14 {
            for y in 6..14 {
                for x in 6..14 {
                    let i = shape.index(&[x, y, z]);
                    let c = [x as f64, y as f64, z as f64];
                    for (k, &(a, b)) in pairs.iter().enumerate() {
                        let want = fd(c, a, b) * sigma * sigma;
                        assert!((h[k][i] - want).abs() < 1e-3 * scale.max(want.abs()), "{k} at {c:?}");
                    }
                }
            }
        }
    }
}
