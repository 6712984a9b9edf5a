// SPDX-License-Identifier: Apache-2.0

//! Two-dimensional Gaussian kernel density estimation over score space and
//! mode detection on the evaluated grid.
//!
//! The density at grid vertex `(u, v)` is
//!
//! ```text
//! f(u, v) = 1 / (n · 2π · h_x · h_y) · Σ_i exp(−(u − x_i)² / 2h_x² − (v − y_i)² / 2h_y²)
//! ```
//!
//! on a uniform `g × g` vertex grid over `[0, 1]²`. No boundary correction
//! is applied, so mass near the edges of the square leaks out.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bot_scoring::{score_pairs, Axis, ScoreCache};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_MIN_DENSITY_FRACTION: f64 = 0.05;
/// Bandwidth used when a data-driven rule cannot be applied (n < 2 or a
/// constant axis) inside [`bimodality_report`].
pub const FALLBACK_BANDWIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "rule", content = "h")]
pub enum BandwidthRule {
    Scott,
    Silverman,
    Fixed(f64),
}

impl std::str::FromStr for BandwidthRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scott" => Ok(BandwidthRule::Scott),
            "silverman" => Ok(BandwidthRule::Silverman),
            other => {
                let h: f64 = other
                    .strip_prefix("fixed:")
                    .unwrap_or(other)
                    .parse()
                    .map_err(|_| Error::config(format!("bandwidth '{s}' is not scott, silverman or a number")))?;
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::config(format!("fixed bandwidth must be positive, got {h}")));
                }
                Ok(BandwidthRule::Fixed(h))
            }
        }
    }
}

impl std::fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandwidthRule::Scott => f.write_str("scott"),
            BandwidthRule::Silverman => f.write_str("silverman"),
            BandwidthRule::Fixed(h) => write!(f, "{h}"),
        }
    }
}

fn sample_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

/// Per-axis bandwidths. Scott: `σ·n^(−1/6)`; Silverman:
/// `σ·(4/((d+2)n))^(1/(d+4))` with `d = 2`, which coincides with Scott.
pub fn select_bandwidth(points: &[(f64, f64)], rule: BandwidthRule) -> Result<(f64, f64)> {
    let n = points.len();
    let factor = match rule {
        BandwidthRule::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config(format!("fixed bandwidth must be positive, got {h}")));
            }
            return Ok((h, h));
        }
        BandwidthRule::Scott | BandwidthRule::Silverman if n < 2 => {
            return Err(Error::data(format!(
                "{rule} bandwidth needs at least 2 points, got {n}; use a fixed bandwidth"
            )))
        }
        BandwidthRule::Scott => (n as f64).powf(-1.0 / 6.0),
        BandwidthRule::Silverman => {
            let d = 2.0;
            (4.0 / ((d + 2.0) * n as f64)).powf(1.0 / (d + 4.0))
        }
    };
    let sx = sample_std(points.iter().map(|p| p.0), n);
    let sy = sample_std(points.iter().map(|p| p.1), n);
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::data(format!(
            "{rule} bandwidth needs nonzero variance on both axes (σx = {sx}, σy = {sy}); use a fixed bandwidth"
        )));
    }
    Ok((sx * factor, sy * factor))
}

/// Density evaluated on a uniform vertex grid over `[0, 1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeGrid {
    pub axis: Vec<f64>,
    /// Row-major: `density[row * g + col]` is at `(axis[col], axis[row])`.
    pub density: Vec<f64>,
    pub bandwidth: (f64, f64),
    pub n: usize,
}

impl KdeGrid {
    pub fn resolution(&self) -> usize {
        self.axis.len()
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.density[row * self.resolution() + col]
    }

    pub fn cell(&self) -> f64 {
        1.0 / (self.resolution() - 1) as f64
    }

    /// Trapezoidal integral of the density over the unit square.
    pub fn mass(&self) -> f64 {
        let g = self.resolution();
        let w = |i: usize| if i == 0 || i == g - 1 { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for row in 0..g {
            for col in 0..g {
                total += w(row) * w(col) * self.at(col, row);
            }
        }
        total * self.cell() * self.cell()
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.density.iter().enumerate() {
            if v > self.density[best] {
                best = i;
            }
        }
        (best % self.resolution(), best / self.resolution())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = self.resolution();
        for row in 0..g {
            let line: Vec<String> = (0..g).map(|col| format!("{:e}", self.at(col, row))).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()
    }
}

fn grid_axis(g: usize) -> Vec<f64> {
    (0..g).map(|i| i as f64 / (g - 1) as f64).collect()
}

pub fn kde2d(points: &[(f64, f64)], bandwidth: (f64, f64), grid_resolution: usize) -> Result<KdeGrid> {
    kde2d_with(points, bandwidth, grid_resolution, Execution::default())
}

/// Separable evaluation: the kernel factors into an x term and a y term, so
/// each vertex costs `n` multiplications over precomputed exponentials.
/// Summation per vertex runs in point order regardless of `exec`.
pub fn kde2d_with(points: &[(f64, f64)], bandwidth: (f64, f64), g: usize, exec: Execution) -> Result<KdeGrid> {
    validate_kde_input(points, bandwidth, g)?;
    let (hx, hy) = bandwidth;
    let n = points.len();
    let axis = grid_axis(g);
    let kernel = |u: f64, c: f64, h: f64| (-(u - c) * (u - c) / (2.0 * h * h)).exp();
    // ex[col * n + i], ey[row * n + i]
    let ex: Vec<f64> = axis.iter().flat_map(|&u| points.iter().map(move |p| kernel(u, p.0, hx))).collect();
    let ey: Vec<f64> = axis.iter().flat_map(|&v| points.iter().map(move |p| kernel(v, p.1, hy))).collect();
    let norm = 1.0 / (n as f64 * 2.0 * std::f64::consts::PI * hx * hy);
    let rows = exec.map_range(g, |row| {
        let ey_row = &ey[row * n..(row + 1) * n];
        (0..g)
            .map(|col| {
                let ex_col = &ex[col * n..(col + 1) * n];
                let mut s = 0.0;
                for i in 0..n {
                    s += ex_col[i] * ey_row[i];
                }
                s * norm
            })
            .collect::<Vec<f64>>()
    });
    Ok(KdeGrid {
        axis,
        density: rows.into_iter().flatten().collect(),
        bandwidth,
        n,
    })
}

/// Direct evaluation of the double sum with one exponential per term.
pub fn kde2d_direct(points: &[(f64, f64)], bandwidth: (f64, f64), g: usize, exec: Execution) -> Result<KdeGrid> {
    validate_kde_input(points, bandwidth, g)?;
    let (hx, hy) = bandwidth;
    let n = points.len();
    let axis = grid_axis(g);
    let norm = 1.0 / (n as f64 * 2.0 * std::f64::consts::PI * hx * hy);
    let rows = exec.map_range(g, |row| {
        let v = axis[row];
        axis.iter()
            .map(|&u| {
                let s: f64 = points
                    .iter()
                    .map(|&(x, y)| (-((u - x) * (u - x) / (2.0 * hx * hx) + (v - y) * (v - y) / (2.0 * hy * hy))).exp())
                    .sum();
                s * norm
            })
            .collect::<Vec<f64>>()
    });
    Ok(KdeGrid {
        axis,
        density: rows.into_iter().flatten().collect(),
        bandwidth,
        n,
    })
}

fn validate_kde_input(points: &[(f64, f64)], (hx, hy): (f64, f64), g: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::data("density estimation needs at least one point"));
    }
    if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
        return Err(Error::config(format!("bandwidth must be positive, got ({hx}, {hy})")));
    }
    if g < 2 {
        return Err(Error::config(format!("grid resolution must be >= 2, got {g}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// No strict local maximum anywhere on the grid.
    Flat,
    Unimodal,
    Bimodal,
    Multimodal,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::Flat => "flat",
            Modality::Unimodal => "unimodal",
            Modality::Bimodal => "bimodal",
            Modality::Multimodal => "multimodal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    /// Descending by density.
    pub modes: Vec<Mode>,
    /// Distance between the two densest modes.
    pub separation: Option<f64>,
    pub classification: Modality,
}

/// Strict 8-neighbour maxima above `min_density_fraction · max`, merged
/// greedily (densest first) within `merge_radius`.
pub fn find_modes(grid: &KdeGrid, min_density_fraction: f64, merge_radius: f64) -> ModeReport {
    let g = grid.resolution();
    let global_max = grid.density.iter().cloned().fold(0.0, f64::max);
    let floor = min_density_fraction * global_max;
    let mut candidates = Vec::new();
    for row in 0..g {
        for col in 0..g {
            let v = grid.at(col, row);
            if v < floor || v <= 0.0 {
                continue;
            }
            let mut strict = true;
            'nb: for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (r, c) = (row as i64 + dr, col as i64 + dc);
                    if r < 0 || c < 0 || r >= g as i64 || c >= g as i64 {
                        continue;
                    }
                    if grid.at(c as usize, r as usize) >= v {
                        strict = false;
                        break 'nb;
                    }
                }
            }
            if strict {
                candidates.push(Mode {
                    x: grid.axis[col],
                    y: grid.axis[row],
                    density: v,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.density
            .total_cmp(&a.density)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    let mut modes: Vec<Mode> = Vec::new();
    for c in candidates {
        if modes.iter().all(|m| ((m.x - c.x).powi(2) + (m.y - c.y).powi(2)).sqrt() > merge_radius) {
            modes.push(c);
        }
    }
    let separation = (modes.len() >= 2).then(|| ((modes[0].x - modes[1].x).powi(2) + (modes[0].y - modes[1].y).powi(2)).sqrt());
    let classification = match modes.len() {
        0 => Modality::Flat,
        1 => Modality::Unimodal,
        2 => Modality::Bimodal,
        _ => Modality::Multimodal,
    };
    ModeReport {
        modes,
        separation,
        classification,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub bandwidth: BandwidthRule,
    pub grid: usize,
    pub min_density_fraction: f64,
    /// Defaults to `max(h_x, h_y)` when absent.
    pub merge_radius: Option<f64>,
    pub fallback_bandwidth: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams {
            bandwidth: BandwidthRule::Scott,
            grid: DEFAULT_GRID,
            min_density_fraction: DEFAULT_MIN_DENSITY_FRACTION,
            merge_radius: None,
            fallback_bandwidth: FALLBACK_BANDWIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAnalysis {
    pub grid: KdeGrid,
    pub modes: ModeReport,
    pub bandwidth_fallback: bool,
    pub merge_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub x: Axis,
    pub y: Axis,
    pub points: usize,
    pub outcome: std::result::Result<PairAnalysis, String>,
}

impl PairResult {
    pub fn file_stem(&self) -> String {
        format!("kde_{}_{}", self.x, self.y)
    }
}

/// Bandwidth selection, grid evaluation and mode finding for one point set.
pub fn analyze_points(points: &[(f64, f64)], params: &DensityParams) -> Result<PairAnalysis> {
    let (bandwidth, fallback) = match select_bandwidth(points, params.bandwidth) {
        Ok(h) => (h, false),
        Err(Error::Data(_)) if !points.is_empty() => {
            let h = params.fallback_bandwidth;
            (select_bandwidth(points, BandwidthRule::Fixed(h))?, true)
        }
        Err(e) => return Err(e),
    };
    let grid = kde2d(points, bandwidth, params.grid)?;
    let merge_radius = params.merge_radius.unwrap_or(bandwidth.0.max(bandwidth.1));
    let modes = find_modes(&grid, params.min_density_fraction, merge_radius);
    Ok(PairAnalysis {
        grid,
        modes,
        bandwidth_fallback: fallback,
        merge_radius,
    })
}

/// Runs the density analysis for every pair; a failing pair is reported in
/// place and does not stop the others.
pub fn bimodality_report(cache: &ScoreCache, pairs: &[(Axis, Axis)], params: &DensityParams) -> Result<Vec<PairResult>> {
    if cache.is_empty() {
        return Err(Error::data("score cache is empty"));
    }
    Ok(pairs
        .iter()
        .map(|&(x, y)| {
            let pts = score_pairs(cache, x, y);
            let points = pts.as_ref().map_or(0, Vec::len);
            let outcome = pts
                .and_then(|p| analyze_points(&p, params))
                .map_err(|e| e.to_string());
            PairResult { x, y, points, outcome }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub x_axis: String,
    pub y_axis: String,
    pub resolution: usize,
    pub axis: Vec<f64>,
    pub bandwidth: (f64, f64),
    pub bandwidth_fallback: bool,
    pub n: usize,
    pub merge_radius: f64,
    pub modes: ModeReport,
}

/// Writes `<stem>.csv` (density matrix, rows = y) and `<stem>.json`.
pub fn write_grid_files(dir: &Path, result: &PairResult) -> Result<Option<(PathBuf, PathBuf)>> {
    let Ok(a) = &result.outcome else {
        return Ok(None);
    };
    let csv_path = dir.join(format!("{}.csv", result.file_stem()));
    let json_path = dir.join(format!("{}.json", result.file_stem()));
    let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    a.grid
        .write_csv(std::io::BufWriter::new(f))
        .map_err(|e| Error::io(&csv_path, e))?;
    let side = GridSidecar {
        x_axis: result.x.to_string(),
        y_axis: result.y.to_string(),
        resolution: a.grid.resolution(),
        axis: a.grid.axis.clone(),
        bandwidth: a.grid.bandwidth,
        bandwidth_fallback: a.bandwidth_fallback,
        n: a.grid.n,
        merge_radius: a.merge_radius,
        modes: a.modes.clone(),
    };
    let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(Some((csv_path, json_path)))
}
