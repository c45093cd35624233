use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hessian::hessian_eigenvalues;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::Volume;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrangiParams {
    pub scales: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Structureness constant; `None` uses half the maximum Hessian
    /// Frobenius norm at each scale.
    pub c: Option<f64>,
    pub bright_on_dark: bool,
}

impl Default for FrangiParams {
    fn default() -> Self {
        FrangiParams {
            scales: vec![0.75, 1.0, 1.5],
            alpha: 0.5,
            beta: 0.5,
            c: None,
            bright_on_dark: true,
        }
    }
}

impl FrangiParams {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() || self.scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::invalid(format!("scales must be nonempty and positive, got {:?}", self.scales)));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::invalid("alpha and beta must be positive"));
        }
        if let Some(c) = self.c {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid(format!("c must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Vesselness together with the structureness constant used at each scale.
#[derive(Clone, Debug, PartialEq)]
pub struct FrangiOutput<T> {
    pub vesselness: Volume<T>,
    pub c_per_scale: Vec<f64>,
}

fn vesselness_at(l: [f64; 3], alpha: f64, beta: f64, c: f64, bright_on_dark: bool) -> f64 {
    let [l1, l2, l3] = l;
    let wrong_sign = if bright_on_dark { l2 > 0.0 || l3 > 0.0 } else { l2 < 0.0 || l3 < 0.0 };
    if wrong_sign || l3 == 0.0 || l2 == 0.0 {
        return 0.0;
    }
    let ra = l2.abs() / l3.abs();
    let rb = l1.abs() / (l2 * l3).abs().sqrt();
    let s2 = l1 * l1 + l2 * l2 + l3 * l3;
    (1.0 - (-ra * ra / (2.0 * alpha * alpha)).exp())
        * (-rb * rb / (2.0 * beta * beta)).exp()
        * (1.0 - (-s2 / (2.0 * c * c)).exp())
}

/// Multiscale vesselness of a 3-D volume, the maximum over scales of the
/// per-scale response. Output lies in [0, 1].
pub fn frangi_vesselness<T: Scalar>(vol: &Volume<T>, params: &FrangiParams) -> Result<Volume<T>> {
    Ok(frangi_vesselness_detailed(vol, params)?.vesselness)
}

pub fn frangi_vesselness_detailed<T: Scalar>(vol: &Volume<T>, params: &FrangiParams) -> Result<FrangiOutput<T>> {
    params.validate()?;
    let mut best = vec![0.0f64; vol.data().len()];
    let mut c_per_scale = Vec::with_capacity(params.scales.len());
    for &sigma in &params.scales {
        let eig = hessian_eigenvalues(vol, sigma)?;
        let to64 = |l: &[T; 3]| [l[0].to_f64_lossy(), l[1].to_f64_lossy(), l[2].to_f64_lossy()];
        let c = match params.c {
            Some(c) => c,
            None => {
                let max_s = eig
                    .values()
                    .par_iter()
                    .map(|l| to64(l).iter().map(|x| x * x).sum::<f64>().sqrt())
                    .reduce(|| 0.0, f64::max);
                0.5 * max_s
            }
        };
        c_per_scale.push(c);
        if c <= 0.0 {
            continue;
        }
        best.par_iter_mut().zip(eig.values().par_iter()).for_each(|(b, l)| {
            let v = vesselness_at(to64(l), params.alpha, params.beta, c, params.bright_on_dark);
            if v > *b {
                *b = v;
            }
        });
    }
    let data = best.into_iter().map(|v| T::of(v.clamp(0.0, 1.0))).collect();
    Ok(FrangiOutput {
        vesselness: Volume::from_parts_unchecked(vol.shape().clone(), data, vol.scale().to_vec()),
        c_per_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tube(dims: [usize; 3], center: [f64; 2], width: f64, amp: f64, base: f64) -> Volume<f64> {
        Volume::from_fn(&dims, |c| {
            let (y, z) = (c[1] as f64 - center[0], c[2] as f64 - center[1]);
            base + amp * (-(y * y + z * z) / (2.0 * width * width)).exp()
        })
        .unwrap()
    }

    #[test]
    fn constant_volume_has_no_vesselness() {
        let v = Volume::<f64>::from_fn(&[10, 10, 10], |_| 0.6).unwrap();
        let out = frangi_vesselness(&v, &FrangiParams::default()).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tube_beats_plate_at_matched_contrast() {
        let t = tube([20, 21, 21], [10.0, 10.0], 1.0, 1.0, 0.0);
        let p = Volume::<f64>::from_fn(&[20, 21, 21], |c| {
            let z = c[2] as f64 - 10.0;
            (-(z * z) / 2.0).exp()
        })
        .unwrap();
        let params = FrangiParams { c: Some(0.1), ..Default::default() };
        let vt = frangi_vesselness(&t, &params).unwrap();
        let vp = frangi_vesselness(&p, &params).unwrap();
        let max = |v: &Volume<f64>| v.data().iter().cloned().fold(0.0, f64::max);
        assert!(max(&vt) > 0.1);
        assert!(max(&vt) > 10.0 * max(&vp), "tube {} plate {}", max(&vt), max(&vp));
    }

    #[test]
    fn maximum_sits_on_the_centerline() {
        let v = tube([24, 21, 21], [10.0, 9.0], 1.0, 0.8, 0.1);
        let out = frangi_vesselness(&v, &FrangiParams::default()).unwrap();
        let (i, _) = out
            .data()
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
        let c = out.shape().noxel(i);
        assert!(c.coords()[1].abs_diff(10) <= 1 && c.coords()[2].abs_diff(9) <= 1, "{c:?}");
    }

    #[test]
    fn invariant_to_constant_offset_and_bounded() {
        let a = tube([16, 17, 17], [8.0, 8.0], 1.2, 0.5, 0.0);
        let b = tube([16, 17, 17], [8.0, 8.0], 1.2, 0.5, 0.3);
        let (va, vb) = (
            frangi_vesselness(&a, &FrangiParams::default()).unwrap(),
            frangi_vesselness(&b, &FrangiParams::default()).unwrap(),
        );
        for (x, y) in va.data().iter().zip(vb.data()) {
            assert!((x - y).abs() < 1e-6);
            assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn reports_c_per_scale() {
        let v = tube([12, 13, 13], [6.0, 6.0], 1.0, 1.0, 0.0);
        let out = frangi_vesselness_detailed(&v, &FrangiParams::default()).unwrap();
        assert_eq!(out.c_per_scale.len(), 3);
        assert!(out.c_per_scale.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn dark_tubes_need_the_flag() {
        let v = tube([16, 17, 17], [8.0, 8.0], 1.0, -0.8, 0.9);
        let bright = frangi_vesselness(&v, &FrangiParams::default()).unwrap();
        let dark = frangi_vesselness(&v, &FrangiParams { bright_on_dark: false, ..Default::default() }).unwrap();
        assert_eq!(bright.get(&[8, 8, 8]), 0.0);
        assert!(dark.get(&[8, 8, 8]) > 0.1);
    }

    #[test]
    fn rejects_bad_params() {
        let v = Volume::<f64>::zeros(&[4, 4, 4]).unwrap();
        for p in [
            FrangiParams { scales: vec![], ..Default::default() },
            FrangiParams { alpha: 0.0, ..Default::default() },
            FrangiParams { c: Some(-1.0), ..Default::default() },
        ] {
            assert!(matches!(frangi_vesselness(&v, &p), Err(Error::InvalidArgument(_))));
        }
    }
}
