//! File formats: raw volumes with a JSON sidecar, 8-bit/16-bit PGM slices,
//! tree JSON, and pretty JSON reports.
//!
//! A volume saved at base path `p` is the header `p.json` plus the payload
//! `p.raw`, little-endian, x-fastest. Gray volumes are stored as `f32le`,
//! binary volumes as `u8`.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::synth::{HyphalTree, SynthesisConfig};
use crate::volume::{BinaryVolume, Shape, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "u8")]
    U8,
    #[serde(rename = "f32le")]
    F32Le,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::F32Le => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeKind {
    Gray,
    Binary,
}

pub const ORDER_X_FASTEST: &str = "x-fastest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeHeader {
    pub dims: Vec<usize>,
    pub dtype: Dtype,
    pub order: String,
    pub scale: Vec<f64>,
    pub kind: VolumeKind,
}

/// A volume read from disk, gray or binary as declared by its header.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedVolume {
    Gray(Volume<f32>),
    Binary(BinaryVolume),
}

impl LoadedVolume {
    pub fn dims(&self) -> &[usize] {
        match self {
            LoadedVolume::Gray(v) => v.dims(),
            LoadedVolume::Binary(v) => v.dims(),
        }
    }

    /// Gray view: binary volumes map to exact 0 and 1.
    pub fn into_gray<T: Scalar>(self) -> Volume<T> {
        match self {
            LoadedVolume::Gray(v) => {
                let shape = v.shape().clone();
                let scale = v.scale().to_vec();
                let data = v.into_data().into_iter().map(|x| T::of(x as f64)).collect();
                Volume::from_parts_unchecked(shape, data, scale)
            }
            LoadedVolume::Binary(b) => b.to_gray(),
        }
    }

    /// Binary view: gray volumes must hold only exact 0 and 1.
    pub fn into_binary(self) -> Result<BinaryVolume> {
        match self {
            LoadedVolume::Gray(v) => BinaryVolume::try_from_gray(&v),
            LoadedVolume::Binary(b) => Ok(b),
        }
    }
}

/// Header and payload paths for a base path. A trailing `.json` or `.raw`
/// extension on `base` is ignored.
pub fn volume_paths(base: &Path) -> (PathBuf, PathBuf) {
    let stem = match base.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => base.with_extension(""),
        _ => base.to_path_buf(),
    };
    let mut header = stem.clone().into_os_string();
    header.push(".json");
    let mut payload = stem.into_os_string();
    payload.push(".raw");
    (header.into(), payload.into())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_volume(base: &Path, header: &VolumeHeader, payload: &[u8]) -> Result<()> {
    let (hp, pp) = volume_paths(base);
    let mut json = serde_json::to_vec_pretty(header)?;
    json.push(b'\n');
    write_file(&hp, &json)?;
    write_file(&pp, payload)
}

/// Saves a gray volume as `f32le`.
pub fn save_gray<T: Scalar>(vol: &Volume<T>, base: &Path) -> Result<()> {
    let header = VolumeHeader {
        dims: vol.dims().to_vec(),
        dtype: Dtype::F32Le,
        order: ORDER_X_FASTEST.into(),
        scale: vol.scale().to_vec(),
        kind: VolumeKind::Gray,
    };
    let mut payload = Vec::with_capacity(vol.data().len() * 4);
    for v in vol.data() {
        let x = v.to_f32().unwrap_or(f32::NAN);
        payload.extend_from_slice(&x.to_le_bytes());
    }
    write_volume(base, &header, &payload)
}

pub fn save_binary(vol: &BinaryVolume, base: &Path) -> Result<()> {
    let header = VolumeHeader {
        dims: vol.dims().to_vec(),
        dtype: Dtype::U8,
        order: ORDER_X_FASTEST.into(),
        scale: vol.scale().to_vec(),
        kind: VolumeKind::Binary,
    };
    write_volume(base, &header, vol.data())
}

pub fn save_volume(vol: &LoadedVolume, base: &Path) -> Result<()> {
    match vol {
        LoadedVolume::Gray(v) => save_gray(v, base),
        LoadedVolume::Binary(v) => save_binary(v, base),
    }
}

pub fn read_header(base: &Path) -> Result<VolumeHeader> {
    let (hp, _) = volume_paths(base);
    let text = fs::read(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: VolumeHeader = serde_json::from_slice(&text).map_err(|e| Error::Format {
        path: hp.clone(),
        field: "header",
        message: e.to_string(),
    })?;
    let bad = |field, message: String| Error::Format {
        path: hp.clone(),
        field,
        message,
    };
    if header.order != ORDER_X_FASTEST {
        return Err(bad("order", format!("expected \"{ORDER_X_FASTEST}\", got \"{}\"", header.order)));
    }
    Shape::new(&header.dims).map_err(|e| bad("dims", e.to_string()))?;
    if header.scale.len() != header.dims.len() || header.scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(bad("scale", format!("{:?} is not a positive vector of length {}", header.scale, header.dims.len())));
    }
    let expected = match header.kind {
        VolumeKind::Gray => Dtype::F32Le,
        VolumeKind::Binary => Dtype::U8,
    };
    if header.dtype != expected {
        return Err(bad("dtype", format!("{:?} volumes are stored as {expected:?}", header.kind)));
    }
    Ok(header)
}

pub fn load_volume(base: &Path) -> Result<LoadedVolume> {
    let header = read_header(base)?;
    let (_, pp) = volume_paths(base);
    let bytes = fs::read(&pp).map_err(|e| Error::io(&pp, e))?;
    let len: usize = header.dims.iter().product();
    let bad = |field, message: String| Error::Format {
        path: pp.clone(),
        field,
        message,
    };
    if bytes.len() != len * header.dtype.size() {
        return Err(bad(
            "dims",
            format!(
                "header dims {:?} with dtype {:?} need {} payload bytes, found {}",
                header.dims,
                header.dtype,
                len * header.dtype.size(),
                bytes.len()
            ),
        ));
    }
    match header.kind {
        VolumeKind::Binary => {
            let v = BinaryVolume::from_vec(&header.dims, bytes).map_err(|e| bad("payload", e.to_string()))?;
            Ok(LoadedVolume::Binary(v.with_scale(&header.scale)?))
        }
        VolumeKind::Gray => {
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let v = Volume::from_vec(&header.dims, data).map_err(|e| bad("payload", e.to_string()))?;
            Ok(LoadedVolume::Gray(v.with_scale(&header.scale)?))
        }
    }
}

pub fn load_gray<T: Scalar>(base: &Path) -> Result<Volume<T>> {
    Ok(load_volume(base)?.into_gray())
}

pub fn load_binary(base: &Path) -> Result<BinaryVolume> {
    let (hp, _) = volume_paths(base);
    load_volume(base)?.into_binary().map_err(|e| Error::Format {
        path: hp,
        field: "kind",
        message: e.to_string(),
    })
}

/// A decoded binary (P5) PGM image, rows top to bottom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

fn pgm_token<R: BufRead>(r: &mut R, path: &Path) -> Result<usize> {
    let mut tok = Vec::new();
    loop {
        let mut b = [0u8];
        if r.read(&mut b).map_err(|e| Error::io(path, e))? == 0 {
            break;
        }
        match b[0] {
            b'#' if tok.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip).map_err(|e| Error::io(path, e))?;
            }
            c if c.is_ascii_whitespace() => {
                if !tok.is_empty() {
                    break;
                }
            }
            c => tok.push(c),
        }
    }
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            field: "header",
            message: format!("bad PGM header token {:?}", String::from_utf8_lossy(&tok)),
        })
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    let bad = |field, message: String| Error::Format {
        path: path.to_path_buf(),
        field,
        message,
    };
    if &magic != b"P5" {
        return Err(bad("magic", "only binary PGM (P5) is supported".into()));
    }
    let width = pgm_token(&mut r, path)?;
    let height = pgm_token(&mut r, path)?;
    let maxval = pgm_token(&mut r, path)?;
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval", format!("{maxval} is outside 1..=65535")));
    }
    let bpp = if maxval < 256 { 1 } else { 2 };
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.len() < width * height * bpp {
        return Err(bad("pixels", format!("expected {} bytes, found {}", width * height * bpp, raw.len())));
    }
    let pixels = if bpp == 1 {
        raw[..width * height].iter().map(|&b| b as u16).collect()
    } else {
        raw[..width * height * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(PgmImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

/// Writes an 8-bit P5 PGM with maxval 255.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::invalid(format!(
            "{} pixels do not fill a {width}x{height} image",
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    write_file(path, &out)
}

/// Writes every z slice of a 3-D gray volume as `{prefix}_{z:04}.pgm` in
/// `dir`, with values scaled by 255 and rounded. Returns the written paths.
pub fn export_slices<T: Scalar>(vol: &Volume<T>, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    if vol.ndim() != 3 {
        return Err(Error::UnsupportedDimension {
            op: "export_slices",
            expected: 3,
            got: vol.ndim(),
        });
    }
    let [w, h, d] = [vol.dims()[0], vol.dims()[1], vol.dims()[2]];
    let mut paths = Vec::with_capacity(d);
    for (z, slice) in vol.data().chunks(w * h).enumerate() {
        let px: Vec<u8> = slice
            .iter()
            .map(|v| (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let p = dir.join(format!("{prefix}_{z:04}.pgm"));
        write_pgm(&p, w, h, &px)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Ground-truth networks of one stack together with the generating config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    pub dims: Vec<usize>,
    pub seed: u64,
    pub config: SynthesisConfig,
    pub networks: Vec<HyphalTree>,
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    write_file(path, &json)
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        field: "json",
        message: e.to_string(),
    })
}

/// Writes raw bytes, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes)
}

/// Writes the CSV rows produced by `f` to a new file at `path`.
pub fn write_csv(path: &Path, f: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_file(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::grow_network;

    #[test]
    fn gray_round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::<f32>::from_fn(&[5, 4, 3], |c| ((c[0] * 13 + c[1] * 7 + c[2]) % 17) as f32 / 16.0)
            .unwrap()
            .with_scale(&[1.0, 1.0, 7.0])
            .unwrap();
        let base = dir.path().join("a");
        save_gray(&v, &base).unwrap();
        let loaded = load_volume(&base).unwrap();
        assert_eq!(loaded, LoadedVolume::Gray(v));
        let base2 = dir.path().join("b.json");
        save_volume(&loaded, &base2).unwrap();
        assert_eq!(
            fs::read(dir.path().join("a.raw")).unwrap(),
            fs::read(dir.path().join("b.raw")).unwrap()
        );
        assert_eq!(
            fs::read(dir.path().join("a.json")).unwrap(),
            fs::read(dir.path().join("b.json")).unwrap()
        );
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = BinaryVolume::zeros(&[3, 3, 3]).unwrap();
        b.set(&[1, 2, 0], true).unwrap();
        let base = dir.path().join("m");
        save_binary(&b, &base).unwrap();
        assert_eq!(load_binary(&base).unwrap(), b);
        assert!(load_gray::<f64>(&base).unwrap().get(&[1, 2, 0]) == 1.0);
    }

    #[test]
    fn short_payload_names_the_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("v");
        fs::write(
            dir.path().join("v.json"),
            r#"{"dims":[2,2,2],"dtype":"u8","order":"x-fastest","scale":[1,1,1],"kind":"binary"}"#,
        )
        .unwrap();
        fs::write(dir.path().join("v.raw"), [0u8; 7]).unwrap();
        match load_volume(&base) {
            Err(Error::Format { field, message, .. }) => {
                assert_eq!(field, "dims");
                assert!(message.contains("need 8"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_dtype_and_missing_files_fail() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("v");
        assert!(matches!(load_volume(&base), Err(Error::Io { .. })));
        fs::write(
            dir.path().join("v.json"),
            r#"{"dims":[2],"dtype":"i16","order":"x-fastest","scale":[1],"kind":"gray"}"#,
        )
        .unwrap();
        assert!(matches!(load_volume(&base), Err(Error::Format { field: "header", .. })));
    }

    #[test]
    fn f32_layout_is_x_fastest_little_endian() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::<f32>::from_fn(&[2, 2, 2], |c| if c == [1, 0, 0] { 0.5 } else { 0.0 }).unwrap();
        let base = dir.path().join("v");
        save_gray(&v, &base).unwrap();
        let bytes = fs::read(dir.path().join("v.raw")).unwrap();
        assert_eq!(&bytes[4..8], &[0x00, 0x00, 0x00, 0x3f]);
        assert!(bytes[..4].iter().chain(&bytes[8..]).all(|&b| b == 0));
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.pgm");
        write_pgm(&p, 3, 2, &[0, 10, 20, 30, 40, 255]).unwrap();
        let img = read_pgm(&p).unwrap();
        assert_eq!((img.width, img.height, img.maxval), (3, 2, 255));
        assert_eq!(img.pixels, vec![0, 10, 20, 30, 40, 255]);
    }

    #[test]
    fn export_writes_one_pgm_per_slice() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::<f64>::from_fn(&[4, 3, 5], |c| c[2] as f64 / 4.0).unwrap();
        let paths = export_slices(&v, dir.path(), "z").unwrap();
        assert_eq!(paths.len(), 5);
        let img = read_pgm(&paths[2]).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 128));
    }

    #[test]
    fn tree_json_shape() {
        let config = SynthesisConfig { dims: vec![80, 80, 20], ..Default::default() };
        let tree = grow_network(&config, 3).unwrap();
        let tf = TreeFile { dims: config.dims.clone(), seed: 3, config, networks: vec![tree] };
        let v: serde_json::Value = serde_json::to_value(&tf).unwrap();
        let b0 = &v["networks"][0]["branches"][0];
        assert!(b0["parent"].is_null());
        assert_eq!(b0["path"][0].as_array().unwrap().len(), 3);
        let back: TreeFile = serde_json::from_value(v).unwrap();
        assert_eq!(back, tf);
    }
}
