use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inject::{flank_set, GapInjectionRecord};
use super::MetricsReport;
use crate::endpoints::{detect_endpoints, EndpointScan};
use crate::error::{Error, Result};
use crate::gaps::{close_indexed, CandidateEdge, GapClosingConfig, GapClosingReport, SkeletonIndex};
use crate::io::{write_csv, write_json};
use crate::volume::{unit_offsets, Shape};

/// Endpoint-level confusion counts of one closing run.
///
/// An endpoint counts as connected by the algorithm when it is the source
/// of an accepted edge or lies within Chebyshev distance 1 of an accepted
/// edge's target. It is connected in ground truth when it is a flank noxel.
pub fn endpoint_connection_metrics(
    report: &GapClosingReport,
    record: &GapInjectionRecord,
    endpoints: &EndpointScan,
) -> Result<MetricsReport> {
    let dims = record.dims();
    if endpoints.shape().dims() != dims {
        return Err(Error::invalid(format!(
            "endpoint scan dims {:?} differ from gapped skeleton dims {dims:?}",
            endpoints.shape().dims()
        )));
    }
    let n = dims.len();
    let bad_edge = report
        .edges_added
        .iter()
        .flat_map(|e| [&e.source, &e.target])
        .find(|p| p.ndim() != n || !endpoints.shape().contains(p.coords()));
    if report.config.scale.len() != n || bad_edge.is_some() {
        return Err(Error::invalid(format!(
            "gap closing report does not belong to a skeleton of dims {dims:?}"
        )));
    }
    Ok(score_edges(
        endpoints.shape(),
        &report.edges_added,
        &flank_set(record),
        endpoints.endpoint_indices(),
    ))
}

fn score_edges(shape: &Shape, edges: &[CandidateEdge], flanks: &HashSet<usize>, endpoints: &[usize]) -> MetricsReport {
    let offsets = unit_offsets(shape.ndim());
    let mut connected: HashSet<usize> = HashSet::new();
    for e in edges {
        connected.insert(shape.index(e.source.coords()));
        let t = shape.index(e.target.coords());
        connected.insert(t);
        shape.for_each_neighbor(t, &offsets, |q| {
            connected.insert(q);
        });
    }
    let mut counts = [0u64; 4];
    for i in endpoints {
        counts[(connected.contains(i) as usize) << 1 | flanks.contains(i) as usize] += 1;
    }
    let [tn, fn_, fp, tp] = counts;
    MetricsReport::from_counts(tp, fp, fn_, tn)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

/// Mean endpoint metrics over a `(l, s_z)` grid. Rows follow `l_values`,
/// columns follow `s_z_values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSurface {
    /// Settings shared by every cell; `max_gap` and `scale` vary per cell.
    pub base_config: GapClosingConfig,
    pub records: usize,
    pub l_values: Vec<f64>,
    pub s_z_values: Vec<f64>,
    pub precision: Vec<Vec<f64>>,
    pub recall: Vec<Vec<f64>>,
    pub f1: Vec<Vec<f64>>,
}

impl SweepSurface {
    pub fn grid(&self, metric: Metric) -> &[Vec<f64>] {
        match metric {
            Metric::Precision => &self.precision,
            Metric::Recall => &self.recall,
            Metric::F1 => &self.f1,
        }
    }

    /// Largest cell value with its `(l, s_z)`.
    pub fn peak(&self, metric: Metric) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, f64::NAN, f64::NAN);
        for (row, &l) in self.grid(metric).iter().zip(&self.l_values) {
            for (&v, &sz) in row.iter().zip(&self.s_z_values) {
                if v > best.0 {
                    best = (v, l, sz);
                }
            }
        }
        best
    }

    /// Mean of each `s_z` column over all `l`.
    pub fn column_means(&self, metric: Metric) -> Vec<f64> {
        let grid = self.grid(metric);
        (0..self.s_z_values.len())
            .map(|j| grid.iter().map(|row| row[j]).sum::<f64>() / grid.len() as f64)
            .collect()
    }

    /// One CSV per metric: header row of `s_z` values, first column `l`.
    pub fn write_csv_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Metric::ALL
            .iter()
            .map(|&m| {
                let path = dir.join(format!("{}.csv", m.name()));
                write_csv(&path, |w| {
                    let header = std::iter::once("l\\s_z".to_string()).chain(self.s_z_values.iter().map(|v| v.to_string()));
                    w.write_record(header)?;
                    for (row, l) in self.grid(m).iter().zip(&self.l_values) {
                        w.write_record(std::iter::once(l.to_string()).chain(row.iter().map(|v| v.to_string())))?;
                    }
                    Ok(())
                })?;
                Ok(path)
            })
            .collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

struct Prepared {
    index: SkeletonIndex,
    flanks: HashSet<usize>,
    endpoints: EndpointScan,
}

/// Per-axis scale with every axis at 1 except the last at `s_z`.
pub fn z_scale(ndim: usize, s_z: f64) -> Vec<f64> {
    let mut scale = vec![1.0; ndim];
    scale[ndim - 1] = s_z;
    scale
}

/// [`parameter_sweep_with`] using the default scaled Euclidean distance.
pub fn parameter_sweep(records: &[GapInjectionRecord], l_values: &[f64], s_z_values: &[f64]) -> Result<SweepSurface> {
    parameter_sweep_with(records, l_values, s_z_values, &GapClosingConfig::default())
}

/// Closes gaps on every record for every `(l, s_z)` and averages the
/// endpoint metrics in record order.
pub fn parameter_sweep_with(
    records: &[GapInjectionRecord],
    l_values: &[f64],
    s_z_values: &[f64],
    base: &GapClosingConfig,
) -> Result<SweepSurface> {
    if records.is_empty() || l_values.is_empty() || s_z_values.is_empty() {
        return Err(Error::invalid("parameter sweep needs records and nonempty l and s_z grids"));
    }
    let configs: Vec<Vec<GapClosingConfig>> = l_values
        .iter()
        .map(|&l| {
            s_z_values
                .iter()
                .map(|&sz| {
                    let config = GapClosingConfig {
                        max_gap: l,
                        scale: z_scale(records[0].gapped.ndim(), sz),
                        ..base.clone()
                    };
                    config.validate().map(|_| config)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let prepared = records
        .par_iter()
        .map(|r| {
            Ok(Prepared {
                index: SkeletonIndex::from_skeleton(&r.gapped, base.isolated_as_endpoints)?,
                flanks: flank_set(r),
                endpoints: detect_endpoints(&r.gapped),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(r) = records.iter().find(|r| r.gapped.ndim() != records[0].gapped.ndim()) {
        return Err(Error::invalid(format!("records mix dimensionalities: {:?}", r.dims())));
    }

    let (nl, ns, nr) = (l_values.len(), s_z_values.len(), records.len());
    let scores = (0..nl * ns * nr)
        .into_par_iter()
        .map(|job| {
            let (cell, r) = (job / nr, job % nr);
            let p = &prepared[r];
            let (_, closure) = close_indexed(&p.index, &configs[cell / ns][cell % ns])?;
            Ok(score_edges(&p.index.shape, &closure.accepted, &p.flanks, p.endpoints.endpoint_indices()))
        })
        .collect::<Result<Vec<MetricsReport>>>()?;

    let mean = |cell: usize, f: fn(&MetricsReport) -> f64| {
        scores[cell * nr..(cell + 1) * nr].iter().map(f).sum::<f64>() / nr as f64
    };
    let grid = |f: fn(&MetricsReport) -> f64| -> Vec<Vec<f64>> {
        (0..nl).map(|i| (0..ns).map(|j| mean(i * ns + j, f)).collect()).collect()
    };
    Ok(SweepSurface {
        base_config: base.clone(),
        records: nr,
        l_values: l_values.to_vec(),
        s_z_values: s_z_values.to_vec(),
        precision: grid(|m| m.precision),
        recall: grid(|m| m.recall),
        f1: grid(|m| m.f1),
    })
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}
