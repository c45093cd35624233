use anyhow::{bail, Context, Result};

/// Parses `a:b:step` into `a, a+step, ...` up to `b`, including `b` when
/// `b - a` is a whole number of steps. A bare number is a one-element grid;
/// a comma list is taken literally.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().with_context(|| format!("`{s}` is not a number in `{text}`"))?;
        if !v.is_finite() {
            bail!("`{s}` is not finite in `{text}`");
        }
        Ok(v)
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(num).collect(),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step <= 0.0 || b < a {
                bail!("range `{text}` needs a positive step and start <= end");
            }
            // Tolerate rounding so 0.1-sized steps still reach an exact end.
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|k| a + k as f64 * step).collect())
        }
        _ => bail!("malformed range `{text}`; expected a:b:step, a number, or a comma list"),
    }
}

/// Integer variant of [`parse_grid`] for seed lists.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                bail!("seed `{v}` in `{text}` is not a non-negative integer");
            }
            Ok(v as u64)
        })
        .collect()
}

/// Parses a comma-separated list of positive scale factors.
pub fn parse_scale(text: &str) -> Result<Vec<f64>> {
    let scale = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("`{s}` in scale `{text}` is not a number")))
        .collect::<Result<Vec<f64>>>()?;
    if scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        bail!("scale `{text}` must contain positive finite numbers");
    }
    Ok(scale)
}

/// Parses an inclusive `lo,hi` integer pair.
pub fn parse_pair(text: &str) -> Result<[usize; 2]> {
    let v: Vec<usize> = text
        .split(',')
        .map(|s| s.trim().parse().with_context(|| format!("`{s}` in `{text}` is not a count")))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [lo, hi] if lo <= hi => Ok([*lo, *hi]),
        [x] => Ok([*x, *x]),
        _ => bail!("expected `lo,hi` with lo <= hi, got `{text}`"),
    }
}
