use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::MetricsReport;
use crate::scalar::Scalar;
use crate::volume::{BinaryVolume, Volume};

/// Foreground iff value > `t`.
pub fn apply_threshold<T: Scalar>(vol: &Volume<T>, t: T) -> BinaryVolume {
    let mut out = BinaryVolume::from_shape(vol.shape().clone());
    for (i, &v) in vol.data().iter().enumerate() {
        if v > t {
            out.set_index(i, true);
        }
    }
    out.with_scale(vol.scale()).expect("scale already validated")
}

pub const DEFAULT_MAX_CANDIDATES: usize = 512;

/// Best global threshold by F1 with its metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub metrics: MetricsReport,
    pub candidates: usize,
}

/// Candidate thresholds: one value below the minimum (everything
/// foreground) and the distinct values, which threshold away everything up
/// to and including themselves. When there are more than `max_candidates`,
/// the distinct values are thinned to `max_candidates - 1` uniform
/// quantiles that always include the minimum and maximum.
fn candidates(sorted_distinct: &[f64], max_candidates: usize) -> Vec<f64> {
    let m = sorted_distinct.len();
    let mut out = Vec::with_capacity(m.min(max_candidates) + 1);
    out.push(sorted_distinct[0] - 1.0);
    if m < max_candidates {
        out.extend_from_slice(sorted_distinct);
    } else {
        let q = max_candidates - 1;
        let mut last = usize::MAX;
        for i in 0..q {
            let j = ((i as f64 * (m - 1) as f64 / (q - 1) as f64).round() as usize).min(m - 1);
            if j != last {
                out.push(sorted_distinct[j]);
                last = j;
            }
        }
    }
    out
}

/// Scans global thresholds and returns the one maximizing F1, ties broken
/// toward the larger threshold.
pub fn optimal_threshold_f1<T: Scalar>(confidence: &Volume<T>, gt: &BinaryVolume) -> Result<ThresholdChoice> {
    optimal_threshold_f1_with(confidence, gt, DEFAULT_MAX_CANDIDATES)
}

pub fn optimal_threshold_f1_with<T: Scalar>(
    confidence: &Volume<T>,
    gt: &BinaryVolume,
    max_candidates: usize,
) -> Result<ThresholdChoice> {
    if confidence.dims() != gt.dims() {
        return Err(Error::invalid(format!(
            "confidence dims {:?} differ from ground-truth dims {:?}",
            confidence.dims(),
            gt.dims()
        )));
    }
    if max_candidates < 3 {
        return Err(Error::invalid("max_candidates must be at least 3"));
    }
    let mut all: Vec<f64> = confidence.data().par_iter().map(|v| v.to_f64_lossy()).collect();
    let mut pos: Vec<f64> = all
        .iter()
        .zip(gt.data())
        .filter_map(|(&v, &g)| (g != 0).then_some(v))
        .collect();
    all.par_sort_unstable_by(f64::total_cmp);
    pos.par_sort_unstable_by(f64::total_cmp);
    let mut distinct = all.clone();
    distinct.dedup();

    let total = all.len() as u64;
    let actual = pos.len() as u64;
    let cands = candidates(&distinct, max_candidates);
    let mut best: Option<(f64, MetricsReport)> = None;
    for &t in &cands {
        let predicted = (all.len() - all.partition_point(|&v| v <= t)) as u64;
        let tp = (pos.len() - pos.partition_point(|&v| v <= t)) as u64;
        let (fp, fn_) = (predicted - tp, actual - tp);
        let m = MetricsReport::from_counts(tp, fp, fn_, total - tp - fp - fn_);
        if best.is_none_or(|(_, b)| m.f1 >= b.f1) {
            best = Some((t, m));
        }
    }
    let (threshold, metrics) = best.expect("at least one candidate");
    Ok(ThresholdChoice {
        threshold,
        metrics,
        candidates: cands.len(),
    })
}
