//! N-D Bresenham-style line rasterization.
//!
//! A line from `p` to `q` takes `max_i |q_i - p_i|` unit steps; step `k` sits
//! at `p + k (q - p) / steps`, rounded per axis half away from zero. The
//! rounding is done in exact integer arithmetic.

use crate::error::{Error, Result};
use crate::volume::{Noxel, Shape};

#[inline]
fn round_div_half_away(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    let mag = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -mag
    } else {
        mag
    }
}

/// Number of steps between two points (Chebyshev distance).
pub fn line_steps(p: &[usize], q: &[usize]) -> usize {
    p.iter().zip(q).map(|(&a, &b)| a.abs_diff(b)).max().unwrap_or(0)
}

/// Visits every noxel of the line from `p` to `q`, both included, as
/// coordinate slices.
pub(crate) fn for_each_line_point(p: &[usize], q: &[usize], mut f: impl FnMut(&[usize])) {
    let steps = line_steps(p, q) as i64;
    let n = p.len();
    let mut cur = vec![0usize; n];
    if steps == 0 {
        f(p);
        return;
    }
    for k in 0..=steps {
        for axis in 0..n {
            let d = q[axis] as i64 - p[axis] as i64;
            cur[axis] = (p[axis] as i64 + round_div_half_away(k * d, steps)) as usize;
        }
        f(&cur);
    }
}

pub fn rasterize_line(p: &Noxel, q: &Noxel, dims: &[usize]) -> Result<Vec<Noxel>> {
    let shape = Shape::new(dims)?;
    for (name, x) in [("start", p), ("end", q)] {
        if !shape.contains(x.coords()) {
            return Err(Error::invalid(format!(
                "line {name} {x:?} outside dims {dims:?}"
            )));
        }
    }
    let mut out = Vec::with_capacity(line_steps(p.coords(), q.coords()) + 1);
    for_each_line_point(p.coords(), q.coords(), |c| out.push(Noxel::new(c)));
    Ok(out)
}
