use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::volume::{BinaryVolume, Volume};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhansalkarParams {
    /// Half-width of the square window in each slice.
    pub radius: usize,
    pub k: f64,
    pub r: f64,
    pub p: f64,
    pub q: f64,
}

impl Default for PhansalkarParams {
    fn default() -> Self {
        PhansalkarParams {
            radius: 7,
            k: 0.25,
            r: 0.5,
            p: 2.0,
            q: 10.0,
        }
    }
}

impl PhansalkarParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::invalid("radius must be at least 1"));
        }
        if self.r.is_nan() || self.r <= 0.0 {
            return Err(Error::invalid(format!("r must be positive, got {}", self.r)));
        }
        Ok(())
    }

    /// Threshold for a window with mean `m` and standard deviation `s`.
    pub fn threshold(&self, m: f64, s: f64) -> f64 {
        m * (1.0 + self.p * (-self.q * m).exp() + self.k * (s / self.r - 1.0))
    }
}

/// Local thresholding on each slice perpendicular to the last axis (the
/// whole volume when N = 2). Window statistics cover the in-bounds part of
/// the square window; a voxel is foreground iff its value exceeds the
/// window threshold.
pub fn phansalkar_threshold<T: Scalar>(vol: &Volume<T>, params: &PhansalkarParams) -> Result<BinaryVolume> {
    params.validate()?;
    if vol.ndim() < 2 {
        return Err(Error::UnsupportedDimension {
            op: "phansalkar_threshold",
            expected: 3,
            got: vol.ndim(),
        });
    }
    let (w, h) = (vol.dims()[0], vol.dims()[1]);
    let plane = w * h;
    let mut out = BinaryVolume::from_shape(vol.shape().clone());
    let rad = params.radius;
    let flags: Vec<u8> = vol
        .data()
        .par_chunks(plane)
        .flat_map_iter(|slice| {
            // Integral images with a zero row and column in front.
            let iw = w + 1;
            let mut s1 = vec![0.0f64; iw * (h + 1)];
            let mut s2 = vec![0.0f64; iw * (h + 1)];
            for y in 0..h {
                let (mut r1, mut r2) = (0.0, 0.0);
                for x in 0..w {
                    let v = slice[y * w + x].to_f64_lossy();
                    r1 += v;
                    r2 += v * v;
                    s1[(y + 1) * iw + x + 1] = s1[y * iw + x + 1] + r1;
                    s2[(y + 1) * iw + x + 1] = s2[y * iw + x + 1] + r2;
                }
            }
            let rect = |s: &[f64], x0: usize, y0: usize, x1: usize, y1: usize| {
                s[y1 * iw + x1] - s[y0 * iw + x1] - s[y1 * iw + x0] + s[y0 * iw + x0]
            };
            let mut flags = vec![0u8; plane];
            for y in 0..h {
                let (y0, y1) = (y.saturating_sub(rad), (y + rad + 1).min(h));
                for x in 0..w {
                    let (x0, x1) = (x.saturating_sub(rad), (x + rad + 1).min(w));
                    let n = ((x1 - x0) * (y1 - y0)) as f64;
                    let m = rect(&s1, x0, y0, x1, y1) / n;
                    let var = rect(&s2, x0, y0, x1, y1) / n - m * m;
                    let t = params.threshold(m, var.max(0.0).sqrt());
                    flags[y * w + x] = (slice[y * w + x].to_f64_lossy() > t) as u8;
                }
            }
            flags
        })
        .collect();
    for (i, f) in flags.into_iter().enumerate() {
        if f != 0 {
            out.set_index(i, true);
        }
    }
    Ok(out)
}
