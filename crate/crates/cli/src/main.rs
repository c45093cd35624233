//! `hyphae`: generate synthetic stacks, segment, close skeleton gaps,
//! extract features, score masks and sweep gap-closing parameters.

mod range;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hyphae::eval::{inject_gaps, parameter_sweep_with, voxel_metrics, GapInjectionConfig, MetricsReport};
use hyphae::gaps::{close_gaps, DistanceMode, GapClosingConfig};
use hyphae::io::{self, TreeFile};
use hyphae::segment::{
    apply_threshold, frangi_vesselness, optimal_threshold_f1, optimal_threshold_f1_with, phansalkar_threshold,
    FrangiParams, PhansalkarParams, DEFAULT_MAX_CANDIDATES,
};
use hyphae::{component_features, grow_networks, render_stack, skeleton_to_graph, SynthesisConfig};

#[derive(Parser)]
#[command(name = "hyphae", version, about = "Synthetic hyphal stacks, segmentation, and MST skeleton gap closing")]
struct Cli {
    /// Worker threads; defaults to the available parallelism. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow networks and render a stack with its ground-truth skeleton.
    Generate {
        #[arg(long)]
        seed: Option<u64>,
        /// JSON synthesis config; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Segment a gray stack.
    Segment {
        #[arg(long, value_enum)]
        method: Method,
        /// JSON parameters for the method; missing fields take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ground truth for the optimal-F1 or voxel-metrics report.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Report destination; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Reconnect skeleton fragments with minimum-spanning-tree edges.
    CloseGaps {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_gap: f64,
        /// Per-axis scale `sx,sy,sz`; defaults to all 1.
        #[arg(long)]
        scale: Option<String>,
        #[arg(long, value_enum, default_value = "euclid")]
        distance: Distance,
        /// Let isolated noxels propose edges like endpoints.
        #[arg(long)]
        isolated_endpoints: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-network depth, mass and branching of a skeleton.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        scale: Option<String>,
        /// `.csv` for one row per network, anything else for JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxel precision, recall and F1 of a mask against ground truth.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inject gaps into ground-truth trees and sweep gap length and z-scale.
    Sweep {
        /// Directory searched recursively for `trees.json` files.
        #[arg(long)]
        trees: PathBuf,
        /// Gap lengths as `a:b:step`, a number, or a comma list.
        #[arg(long, default_value = "2:20:2")]
        l: String,
        #[arg(long, default_value = "1:10:1")]
        sz: String,
        /// Gap-injection seeds; every tree file is gapped once per seed.
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Inclusive `lo,hi` gap count per branch.
        #[arg(long, default_value = "1,5")]
        gap_count: String,
        /// Inclusive `lo,hi` removed noxels per gap.
        #[arg(long, default_value = "1,10")]
        gap_size: String,
        #[arg(long, value_enum, default_value = "euclid")]
        distance: Distance,
        /// Output directory for `precision.csv`, `recall.csv`, `f1.csv` and `sweep.json`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write each z slice of a volume as an 8-bit PGM.
    ExportSlices {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "slice")]
        prefix: String,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Frangi,
    Phansalkar,
    Threshold,
}

#[derive(Clone, Copy, ValueEnum)]
enum Distance {
    Euclid,
    Geodesic,
}

impl From<Distance> for DistanceMode {
    fn from(d: Distance) -> Self {
        match d {
            Distance::Euclid => DistanceMode::ScaledEuclidean,
            Distance::Geodesic => DistanceMode::GeodesicTime,
        }
    }
}

/// Global threshold; without `threshold` the F1-optimal one is chosen
/// against `--gt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ThresholdParams {
    threshold: Option<f64>,
    max_candidates: usize,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            threshold: None,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum Params {
    Frangi(FrangiParams),
    Phansalkar(PhansalkarParams),
    Threshold(ThresholdParams),
}

#[derive(Serialize)]
struct SegmentReport {
    method: Method,
    params: Params,
    input: PathBuf,
    gt: Option<PathBuf>,
    /// Threshold applied to a confidence output, when one was chosen.
    threshold: Option<f64>,
    /// Distinct thresholds scanned by the optimal-F1 search.
    candidates: Option<usize>,
    metrics: Option<MetricsReport>,
}

#[derive(Serialize)]
struct ScoreReport {
    pred: PathBuf,
    gt: PathBuf,
    metrics: MetricsReport,
}

#[derive(Serialize)]
struct SweepReport {
    tree_files: Vec<PathBuf>,
    seeds: Vec<u64>,
    injection: GapInjectionConfig,
    flank_pairs: usize,
    surface: hyphae::eval::SweepSurface,
}

fn read_params<P: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<P> {
    match path {
        Some(p) => Ok(io::read_json(p)?),
        None => Ok(P::default()),
    }
}

fn emit_json<S: Serialize>(value: &S, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => io::write_json(p, value)?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn check_dims(a: &[usize], b: &[usize], what: &str) -> Result<()> {
    if a != b {
        bail!("{what}: dims {a:?} and {b:?} differ");
    }
    Ok(())
}

/// Rejects a report path that would overwrite the output volume's files.
fn check_report_path(out: &Path, report: Option<&Path>) -> Result<()> {
    let (header, payload) = io::volume_paths(out);
    if let Some(r) = report.filter(|r| *r == header || *r == payload) {
        bail!("--report {} would overwrite the output volume {}", r.display(), out.display());
    }
    Ok(())
}

fn generate(seed: Option<u64>, config: Option<&Path>, out_dir: &Path) -> Result<()> {
    let mut config: SynthesisConfig = read_params(config)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    let trees = grow_networks(&config, config.seed)?;
    let (stack, skeleton) = render_stack::<f32>(&trees, &config, config.seed)?;
    io::save_gray(&stack, &out_dir.join("stack"))?;
    io::save_binary(&skeleton, &out_dir.join("skeleton"))?;
    io::write_json(
        &out_dir.join("trees.json"),
        &TreeFile {
            dims: config.dims.clone(),
            seed: config.seed,
            config: config.clone(),
            networks: trees,
        },
    )?;
    Ok(())
}

fn segment(
    method: Method,
    params: Option<&Path>,
    input: &Path,
    out: &Path,
    gt: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    check_report_path(out, report)?;
    let vol = io::load_gray::<f32>(input)?;
    let gt_vol = gt.map(io::load_binary).transpose()?;
    if let Some(g) = &gt_vol {
        check_dims(vol.dims(), g.dims(), "input and ground truth")?;
    }
    let mut rep = SegmentReport {
        method,
        params: Params::Threshold(ThresholdParams::default()),
        input: input.to_path_buf(),
        gt: gt.map(Path::to_path_buf),
        threshold: None,
        candidates: None,
        metrics: None,
    };
    match method {
        Method::Frangi => {
            let p: FrangiParams = read_params(params)?;
            let v = frangi_vesselness(&vol, &p)?;
            io::save_gray(&v, out)?;
            if let Some(g) = &gt_vol {
                let choice = optimal_threshold_f1(&v, g)?;
                rep.threshold = Some(choice.threshold);
                rep.candidates = Some(choice.candidates);
                rep.metrics = Some(choice.metrics);
            }
            rep.params = Params::Frangi(p);
        }
        Method::Phansalkar => {
            let p: PhansalkarParams = read_params(params)?;
            let mask = phansalkar_threshold(&vol, &p)?;
            io::save_binary(&mask, out)?;
            rep.metrics = gt_vol.as_ref().map(|g| voxel_metrics(&mask, g)).transpose()?;
            rep.params = Params::Phansalkar(p);
        }
        Method::Threshold => {
            let p: ThresholdParams = read_params(params)?;
            let t = match (p.threshold, &gt_vol) {
                (Some(t), _) => t,
                (None, Some(g)) => {
                    let choice = optimal_threshold_f1_with(&vol, g, p.max_candidates)?;
                    rep.candidates = Some(choice.candidates);
                    choice.threshold
                }
                (None, None) => bail!("threshold segmentation needs `threshold` in --params or --gt"),
            };
            let mask = apply_threshold(&vol, t as f32);
            io::save_binary(&mask, out)?;
            rep.threshold = Some(t);
            rep.metrics = gt_vol.as_ref().map(|g| voxel_metrics(&mask, g)).transpose()?;
            rep.params = Params::Threshold(p);
        }
    }
    if gt_vol.is_some() || report.is_some() {
        emit_json(&rep, report)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn close(
    input: &Path,
    out: &Path,
    max_gap: f64,
    scale: Option<&str>,
    distance: Distance,
    isolated: bool,
    report: Option<&Path>,
) -> Result<()> {
    check_report_path(out, report)?;
    let skel = io::load_binary(input)?;
    let config = GapClosingConfig {
        scale: scale.map(range::parse_scale).transpose()?.unwrap_or_default(),
        max_gap,
        distance_mode: distance.into(),
        isolated_as_endpoints: isolated,
        ..Default::default()
    };
    let (closed, rep) = close_gaps(&skel, &config)?;
    io::save_binary(&closed, out)?;
    emit_json(&rep, report)
}

fn features(input: &Path, scale: Option<&str>, out: &Path) -> Result<()> {
    let skel = io::load_binary(input)?;
    let scale = scale.map(range::parse_scale).transpose()?.unwrap_or_default();
    let rep = component_features(&skeleton_to_graph(&skel), &scale)?;
    if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        rep.write_csv(out)?;
    } else {
        io::write_json(out, &rep)?;
    }
    Ok(())
}

fn score(pred: &Path, gt: &Path, out: Option<&Path>) -> Result<()> {
    let (p, g) = (io::load_binary(pred)?, io::load_binary(gt)?);
    check_dims(p.dims(), g.dims(), "prediction and ground truth")?;
    let rep = ScoreReport {
        pred: pred.to_path_buf(),
        gt: gt.to_path_buf(),
        metrics: voxel_metrics(&p, &g)?,
    };
    emit_json(&rep, out)
}

fn find_tree_files(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.is_dir() {
            find_tree_files(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == "trees.json") {
            found.push(path);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    trees: &Path,
    l: &str,
    sz: &str,
    seeds: &str,
    gap_count: &str,
    gap_size: &str,
    distance: Distance,
    out: &Path,
) -> Result<()> {
    let (ls, szs, seeds) = (range::parse_grid(l)?, range::parse_grid(sz)?, range::parse_seeds(seeds)?);
    let injection = GapInjectionConfig {
        gap_count: range::parse_pair(gap_count)?,
        gap_size: range::parse_pair(gap_size)?,
        ..Default::default()
    };
    let mut files = Vec::new();
    find_tree_files(trees, &mut files)?;
    files.sort();
    if files.is_empty() {
        bail!("no trees.json files under {}", trees.display());
    }
    let mut records = Vec::with_capacity(files.len() * seeds.len());
    for f in &files {
        let tf: TreeFile = io::read_json(f)?;
        for &seed in &seeds {
            records.push(inject_gaps(&tf.networks, &tf.dims, &injection, seed)?);
        }
    }
    let base = GapClosingConfig {
        distance_mode: distance.into(),
        ..Default::default()
    };
    let surface = parameter_sweep_with(&records, &ls, &szs, &base)?;
    surface.write_csv_dir(out)?;
    io::write_json(
        &out.join("sweep.json"),
        &SweepReport {
            tree_files: files,
            seeds,
            injection,
            flank_pairs: records.iter().map(|r| r.flank_pairs.len()).sum(),
            surface,
        },
    )?;
    Ok(())
}

fn export(input: &Path, out_dir: &Path, prefix: &str) -> Result<()> {
    let vol = io::load_volume(input)?.into_gray::<f32>();
    io::export_slices(&vol, out_dir, prefix)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Generate { seed, config, out_dir } => generate(seed, config.as_deref(), &out_dir),
        Command::Segment {
            method,
            params,
            input,
            out,
            gt,
            report,
        } => segment(method, params.as_deref(), &input, &out, gt.as_deref(), report.as_deref()),
        Command::CloseGaps {
            input,
            out,
            max_gap,
            scale,
            distance,
            isolated_endpoints,
            report,
        } => close(&input, &out, max_gap, scale.as_deref(), distance, isolated_endpoints, report.as_deref()),
        Command::Features { input, scale, out } => features(&input, scale.as_deref(), &out),
        Command::Score { pred, gt, out } => score(&pred, &gt, out.as_deref()),
        Command::Sweep {
            trees,
            l,
            sz,
            seeds,
            gap_count,
            gap_size,
            distance,
            out,
        } => sweep(&trees, &l, &sz, &seeds, &gap_count, &gap_size, distance, &out),
        Command::ExportSlices { input, out_dir, prefix } => export(&input, &out_dir, &prefix),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
