use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use super::{BackgroundSource, HyphalTree, IntensityProfile, ProceduralBackground, SynthesisConfig};
use crate::blur::gaussian_blur;
use crate::error::{Error, Result};
use crate::io::read_pgm;
use crate::scalar::Scalar;
use crate::volume::{BinaryVolume, Shape, Volume};

// Independent ChaCha streams keep each stage's draws separate, so disabling
// one stage does not shift the random numbers of another. Stream 0 belongs
// to network growth.
const STREAM_PROFILES: u64 = 1;
const STREAM_BACKGROUND_PICK: u64 = 2;
const STREAM_SLICE_BASE: u64 = 1 << 32;

fn slice_rng(seed: u64, stage: u64, slice: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_SLICE_BASE + 2 * slice as u64 + stage);
    rng
}

fn random_profile<T: Scalar, R: Rng>(config: &SynthesisConfig, rng: &mut R) -> Result<IntensityProfile<T>> {
    let [clo, chi] = config.control_points;
    let count = rng.random_range(clo..=chi);
    let mut inner: Vec<f64> = Vec::with_capacity(count - 2);
    while inner.len() < count - 2 {
        let x: f64 = rng.random();
        if x > 0.0 && !inner.contains(&x) {
            inner.push(x);
        }
    }
    inner.sort_by(f64::total_cmp);
    let [lo, hi] = config.intensity_range;
    let positions = std::iter::once(0.0).chain(inner).chain(std::iter::once(1.0));
    let points = positions
        .map(|x| (T::of(x), T::of(rng.random_range(lo..=hi))))
        .collect();
    IntensityProfile::new(points)
}

/// Renders networks into a grayscale stack. Pipeline: per-branch PCHIP
/// intensities on the centerline, Gaussian defocus, per-slice background
/// composited by maximum, additive Gaussian noise, clamp to [0, 1].
/// Returns the stack and the centerline ground truth.
pub fn render_stack<T: Scalar>(
    trees: &[HyphalTree],
    config: &SynthesisConfig,
    seed: u64,
) -> Result<(Volume<T>, BinaryVolume)> {
    config.validate()?;
    let shape = Shape::new(&config.dims)?;
    let n = shape.ndim();
    let mut data = vec![T::zero(); shape.len()];
    let mut truth = BinaryVolume::from_shape(shape.clone());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_PROFILES);
    for tree in trees {
        for branch in &tree.branches {
            let profile = random_profile::<T, _>(config, &mut rng)?;
            let last = branch.path.len().saturating_sub(1).max(1);
            for (k, p) in branch.path.iter().enumerate() {
                let i = shape.checked_index(p.coords())?;
                let v = profile.eval(T::from_count(k) / T::from_count(last));
                data[i] = data[i].max(v);
                truth.set_index(i, true);
            }
        }
    }

    let mut vol = Volume::from_parts_unchecked(shape.clone(), data, vec![1.0; n]);
    if config.blur_sigma > 0.0 {
        vol = gaussian_blur(&vol, T::of(config.blur_sigma))?;
    }
    let mut data = vol.into_data();
    let slice_len: usize = shape.dims()[..n - 1].iter().product();
    let slice_dims = &shape.dims()[..n - 1];

    match &config.background {
        BackgroundSource::None => {}
        BackgroundSource::Procedural => {
            data.par_chunks_mut(slice_len).enumerate().for_each(|(z, slice)| {
                let mut r = slice_rng(seed, 0, z);
                let bg = procedural_background_slice::<T, _>(slice_dims, &config.procedural, &mut r);
                for (v, b) in slice.iter_mut().zip(bg) {
                    *v = v.max(b);
                }
            });
        }
        BackgroundSource::Directory(dir) => {
            let bank = load_background_bank::<T>(dir, slice_dims)?;
            let mut pick = ChaCha8Rng::seed_from_u64(seed);
            pick.set_stream(STREAM_BACKGROUND_PICK);
            for slice in data.chunks_mut(slice_len) {
                let bg = &bank[pick.random_range(0..bank.len())];
                for (v, &b) in slice.iter_mut().zip(bg) {
                    *v = v.max(b);
                }
            }
        }
    }

    if config.noise_variance > 0.0 {
        let normal = Normal::new(0.0, config.noise_variance.sqrt())
            .map_err(|e| Error::invalid(format!("noise: {e}")))?;
        data.par_chunks_mut(slice_len).enumerate().for_each(|(z, slice)| {
            let mut r = slice_rng(seed, 1, z);
            for v in slice.iter_mut() {
                *v += T::of(normal.sample(&mut r));
            }
        });
    }
    for v in &mut data {
        *v = v.max(T::zero()).min(T::one());
    }
    Ok((Volume::from_parts_unchecked(shape, data, vec![1.0; n]), truth))
}

/// One slice of blurred bright blobs: a Poisson number of isotropic
/// Gaussian bumps with uniform peak amplitude, combined by maximum.
pub fn procedural_background_slice<T: Scalar, R: Rng>(
    slice_dims: &[usize],
    params: &ProceduralBackground,
    rng: &mut R,
) -> Vec<T> {
    let len: usize = slice_dims.iter().product();
    let mut out = vec![T::zero(); len];
    let mean = params.density * len as f64;
    if mean <= 0.0 {
        return out;
    }
    let count = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
    let radius = (3.0 * params.sigma).ceil() as isize;
    let two_s2 = 2.0 * params.sigma * params.sigma;
    let shape = Shape::new(slice_dims).expect("nonempty slice dims");
    let m = slice_dims.len();
    let [alo, ahi] = params.amplitude;
    let window = (2 * radius + 1) as usize;
    let cells = window.pow(m as u32);
    let mut pos = vec![0isize; m];
    for _ in 0..count {
        let center: Vec<isize> = slice_dims.iter().map(|&d| rng.random_range(0..d) as isize).collect();
        let amp = if ahi > alo { rng.random_range(alo..=ahi) } else { alo };
        'cell: for code in 0..cells {
            let mut c = code;
            let mut r2 = 0.0;
            for a in 0..m {
                let off = (c % window) as isize - radius;
                c /= window;
                pos[a] = center[a] + off;
                if pos[a] < 0 || pos[a] as usize >= slice_dims[a] {
                    continue 'cell;
                }
                r2 += (off * off) as f64;
            }
            let i: usize = pos.iter().zip(shape.strides()).map(|(&p, &s)| p as usize * s).sum();
            let v = T::of(amp * (-r2 / two_s2).exp());
            if v > out[i] {
                out[i] = v;
            }
        }
    }
    out
}

fn load_background_bank<T: Scalar>(dir: &Path, slice_dims: &[usize]) -> Result<Vec<Vec<T>>> {
    if slice_dims.len() != 2 {
        return Err(Error::UnsupportedDimension {
            op: "directory backgrounds",
            expected: 3,
            got: slice_dims.len() + 1,
        });
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no .pgm background slices"),
        ));
    }
    files
        .iter()
        .map(|f| {
            let img = read_pgm(f)?;
            if [img.width, img.height] != [slice_dims[0], slice_dims[1]] {
                return Err(Error::Format {
                    path: f.clone(),
                    field: "dims",
                    message: format!(
                        "background slice is {}x{}, stack slices are {}x{}",
                        img.width, img.height, slice_dims[0], slice_dims[1]
                    ),
                });
            }
            let max = T::of(img.maxval as f64);
            Ok(img.pixels.iter().map(|&p| T::of(p as f64) / max).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{grow_network, Branch};
    use crate::volume::Noxel;

    fn quiet(dims: Vec<usize>) -> SynthesisConfig {
        SynthesisConfig {
            dims,
            blur_sigma: 0.0,
            noise_variance: 0.0,
            background: BackgroundSource::None,
            ..Default::default()
        }
    }

    #[test]
    fn nothing_to_render_is_black() {
        let (v, gt) = render_stack::<f32>(&[], &quiet(vec![50, 50, 10]), 1).unwrap();
        assert!(v.data().iter().all(|&x| x == 0.0));
        assert_eq!(gt.count_foreground(), 0);
    }

    #[test]
    fn branch_intensity_stays_in_range() {
        let path: Vec<Noxel> = (0..30).map(|x| Noxel::from([x + 10, 25, 4])).collect();
        let tree = HyphalTree { branches: vec![Branch { parent: None, path: path.clone() }] };
        for seed in 0..20 {
            let (v, gt) = render_stack::<f64>(std::slice::from_ref(&tree), &quiet(vec![50, 50, 10]), seed).unwrap();
            assert_eq!(gt.count_foreground(), 30);
            for p in &path {
                let x = v.get(p.coords());
                assert!((0.5..=1.0).contains(&x), "{x}");
            }
            assert_eq!(v.data().iter().filter(|&&x| x > 0.0).count(), 30);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let config = SynthesisConfig { dims: vec![64, 64, 12], start_margin: 10, ..Default::default() };
        let tree = grow_network(&config, 2).unwrap();
        let a = render_stack::<f32>(std::slice::from_ref(&tree), &config, 9).unwrap();
        let b = render_stack::<f32>(std::slice::from_ref(&tree), &config, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_residual_statistics() {
        let config = SynthesisConfig {
            dims: vec![250, 250, 75],
            ..Default::default()
        };
        let trees = crate::synth::grow_networks(&config, 4).unwrap();
        let (noisy, _) = render_stack::<f64>(&trees, &config, 4).unwrap();
        let clean_config = SynthesisConfig { noise_variance: 0.0, ..config.clone() };
        let (clean, _) = render_stack::<f64>(&trees, &clean_config, 4).unwrap();
        let residual: Vec<f64> = noisy
            .data()
            .iter()
            .zip(clean.data())
            .filter(|(_, &c)| (0.15..=0.85).contains(&c))
            .map(|(&n, &c)| n - c)
            .collect();
        assert!(residual.len() > 5000, "{} samples", residual.len());
        let m = residual.iter().sum::<f64>() / residual.len() as f64;
        let var = residual.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (residual.len() - 1) as f64;
        assert!(m.abs() < 1e-3, "mean {m}");
        assert!((var / 0.001 - 1.0).abs() < 0.15, "variance {var}");
    }

    #[test]
    fn missing_background_directory_is_an_io_error() {
        let config = SynthesisConfig {
            dims: vec![64, 64, 4],
            background: BackgroundSource::Directory("/nonexistent/backgrounds".into()),
            ..Default::default()
        };
        assert!(matches!(render_stack::<f32>(&[], &config, 0), Err(Error::Io { .. })));
    }
}
