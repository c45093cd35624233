//! Shape-preserving piecewise cubic Hermite interpolation (PCHIP).
//!
//! Interior slopes use the Fritsch–Carlson rule in its weighted
//! harmonic-mean form: zero where the data has a local extremum, otherwise
//! the harmonic mean of the neighboring secants weighted by interval
//! lengths. End slopes use the one-sided three-point formula, limited so
//! the end intervals stay monotone.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Pchip<T> {
    x: Vec<T>,
    y: Vec<T>,
    slopes: Vec<T>,
}

fn sign<T: Scalar>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

fn end_slope<T: Scalar>(h1: T, h2: T, del1: T, del2: T) -> T {
    let two = T::of(2.0);
    let three = T::of(3.0);
    let d = ((two * h1 + h2) * del1 - h1 * del2) / (h1 + h2);
    if sign(d) != sign(del1) {
        T::zero()
    } else if sign(del1) != sign(del2) && d.abs() > (three * del1).abs() {
        three * del1
    } else {
        d
    }
}

impl<T: Scalar> Pchip<T> {
    /// Builds the interpolant through `(x, y)` control points with strictly
    /// increasing `x`.
    pub fn new(points: &[(T, T)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("PCHIP needs at least two control points"));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("PCHIP control points must be finite"));
        }
        if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(format!(
                "PCHIP positions must be strictly increasing, got {} then {}",
                w[0].0, w[1].0
            )));
        }
        let x: Vec<T> = points.iter().map(|p| p.0).collect();
        let y: Vec<T> = points.iter().map(|p| p.1).collect();
        let n = x.len();
        let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<T> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();

        let mut slopes = vec![T::zero(); n];
        if n == 2 {
            slopes[0] = del[0];
            slopes[1] = del[0];
        } else {
            let two = T::of(2.0);
            for k in 1..n - 1 {
                if sign(del[k - 1]) * sign(del[k]) > 0 {
                    let w1 = two * h[k] + h[k - 1];
                    let w2 = h[k] + two * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], del[0], del[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Pchip { x, y, slopes })
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    /// Evaluates the interpolant; queries outside the knot range are clamped
    /// to it.
    pub fn eval(&self, q: T) -> T {
        let n = self.x.len();
        let q = q.max(self.x[0]).min(self.x[n - 1]);
        // last knot not greater than q, capped so k + 1 exists
        let k = match self.x.partition_point(|&v| v <= q) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let t = (q - self.x[k]) / h;
        let one = T::one();
        let two = T::of(2.0);
        let three = T::of(3.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = two * t3 - three * t2 + one;
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Intensity along a branch: a PCHIP curve over arc position in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityProfile<T> {
    control_points: Vec<(T, T)>,
    curve: Pchip<T>,
}

impl<T: Scalar> IntensityProfile<T> {
    pub fn new(control_points: Vec<(T, T)>) -> Result<Self> {
        let first = control_points.first().map(|p| p.0);
        let last = control_points.last().map(|p| p.0);
        if first != Some(T::zero()) || last != Some(T::one()) {
            return Err(Error::invalid(
                "intensity profile positions must start at 0 and end at 1",
            ));
        }
        let curve = Pchip::new(&control_points)?;
        Ok(IntensityProfile {
            control_points,
            curve,
        })
    }

    pub fn control_points(&self) -> &[(T, T)] {
        &self.control_points
    }

    pub fn eval(&self, arc: T) -> T {
        self.curve.eval(arc)
    }
}

/// Builds the interpolant for a list of control points.
pub fn pchip_profile<T: Scalar>(control_points: &[(T, T)]) -> Result<Pchip<T>> {
    Pchip::new(control_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolates_two_points() {
        let p = pchip_profile(&[(0.0f64, 0.5), (1.0, 1.0)]).unwrap();
        assert_eq!(p.eval(0.0), 0.5);
        assert_eq!(p.eval(1.0), 1.0);
        assert!((p.eval(0.5) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn three_point_hand_oracle() {
        // h = (0.5, 0.5), secants (0.8, -0.6).
        // interior slope: secant signs differ -> 0.
        // end slope: ((2h0 + h1) d0 - h0 d1) / (h0 + h1) = 1.2 + 0.3 = 1.5,
        //   same sign as d0 and |1.5| < 3 |0.8|, kept.
        // At x = 0.25, t = 0.5: basis (0.5, 0.125, 0.5, -0.125), h = 0.5:
        //   0.5*0.5 + 0.125*0.5*1.5 + 0.5*0.9 + 0 = 0.79375
        let p = pchip_profile(&[(0.0, 0.5), (0.5, 0.9), (1.0, 0.6)]).unwrap();
        assert_eq!(p.slopes()[1], 0.0);
        assert!((p.slopes()[0] - 1.5f64).abs() < 1e-12);
        assert!((p.eval(0.25) - 0.79375).abs() < 1e-12);
    }

    #[test]
    fn passes_through_control_points() {
        let pts = [(0.0f32, 0.6f32), (0.2, 0.95), (0.45, 0.5), (0.7, 0.8), (1.0, 0.7)];
        let p = pchip_profile(&pts).unwrap();
        for (x, y) in pts {
            assert!((p.eval(x) - y).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_unsorted_or_duplicate_positions() {
        assert!(pchip_profile(&[(0.0, 0.5), (0.0, 0.7), (1.0, 0.6)]).is_err());
        assert!(pchip_profile(&[(0.0, 0.5), (0.6, 0.7), (0.4, 0.6)]).is_err());
        assert!(pchip_profile::<f64>(&[(0.0, 0.5)]).is_err());
        assert!(IntensityProfile::new(vec![(0.1, 0.5), (1.0, 0.6)]).is_err());
    }

    proptest! {
        #[test]
        fn no_overshoot(ys in prop::collection::vec(0.5f64..=1.0, 3..7), gaps in prop::collection::vec(0.05f64..1.0, 6)) {
            let n = ys.len();
            let total: f64 = gaps[..n - 1].iter().sum();
            let mut x = 0.0;
            let mut pts = vec![(0.0, ys[0])];
            for k in 1..n {
                x += gaps[k - 1] / total;
                pts.push((if k == n - 1 { 1.0 } else { x }, ys[k]));
            }
            let prof = IntensityProfile::new(pts.clone()).unwrap();
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for i in 0..=400 {
                let v = prof.eval(i as f64 / 400.0);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
            }
            // C1 continuity at interior knots
            let c = pchip_profile(&pts).unwrap();
            for &(xk, _) in &pts[1..n - 1] {
                let e = 1e-7;
                let left = (c.eval(xk) - c.eval(xk - e)) / e;
                let right = (c.eval(xk + e) - c.eval(xk)) / e;
                prop_assert!((left - right).abs() < 1e-3 * (1.0 + left.abs()));
            }
        }
    }
}
