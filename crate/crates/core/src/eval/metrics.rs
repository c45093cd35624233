use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::BinaryVolume;

/// Confusion counts with precision, recall and F1.
///
/// Degenerate rule: with no predicted and no true positives all three scores
/// are 1; when only one side is empty the undefined ratio is 0 and F1 is 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let predicted = tp + fp;
        let actual = tp + fn_;
        let (precision, recall, f1) = if predicted == 0 && actual == 0 {
            (1.0, 1.0, 1.0)
        } else {
            let p = if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 };
            let r = if actual > 0 { tp as f64 / actual as f64 } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            (p, r, f)
        };
        MetricsReport {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
        }
    }
}

/// Voxel-level confusion counts of a predicted mask against ground truth.
pub fn voxel_metrics(pred: &BinaryVolume, gt: &BinaryVolume) -> Result<MetricsReport> {
    if pred.dims() != gt.dims() {
        return Err(Error::invalid(format!(
            "prediction dims {:?} differ from ground-truth dims {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    let mut counts = [0u64; 4];
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        counts[((p != 0) as usize) << 1 | (g != 0) as usize] += 1;
    }
    let [tn, fn_, fp, tp] = counts;
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mask(rng: &mut ChaCha8Rng, dims: &[usize], p: f64) -> BinaryVolume {
        let len = dims.iter().product();
        BinaryVolume::from_vec(dims, (0..len).map(|_| rng.random_bool(p) as u8).collect()).unwrap()
    }

    #[test]
    fn identical_masks_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_mask(&mut rng, &[8, 8, 8], 0.2);
        let r = voxel_metrics(&m, &m).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.fp + r.fn_, 0);
    }

    #[test]
    fn formula_arithmetic() {
        let r = MetricsReport::from_counts(2, 2, 6, 0);
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 0.25);
        assert!((r.f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(MetricsReport::from_counts(0, 0, 0, 10).f1, 1.0);
        let r = MetricsReport::from_counts(0, 0, 3, 10);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = MetricsReport::from_counts(0, 4, 0, 10);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn matches_elementwise_oracle_and_swaps_symmetrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_mask(&mut rng, &[16, 16, 16], 0.1);
            let b = random_mask(&mut rng, &[16, 16, 16], 0.1);
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for i in 0..a.data().len() {
                match (a.is_set(i), b.is_set(i)) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            let r = voxel_metrics(&a, &b).unwrap();
            assert_eq!((r.tp, r.fp, r.fn_, r.tn), (tp, fp, fn_, tn));
            let s = voxel_metrics(&b, &a).unwrap();
            assert_eq!((s.precision, s.recall), (r.recall, r.precision));
        }
    }

    #[test]
    fn dims_must_match() {
        let a = BinaryVolume::zeros(&[4, 4]).unwrap();
        let b = BinaryVolume::zeros(&[4, 5]).unwrap();
        assert!(matches!(voxel_metrics(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn serializes_false_negatives_as_fn() {
        let s = serde_json::to_string(&MetricsReport::from_counts(1, 0, 1, 0)).unwrap();
        assert!(s.contains("\"fn\":1"), "{s}");
    }
}
