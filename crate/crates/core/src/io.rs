// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Artifact export: spike rasters (CSV), weight images (PGM plus a CSV of the
//! raw weights), run summaries and run manifests.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! reader never sees a half-written artifact.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;
use crate::dataset::SIDE;
use crate::error::{Error, Result};
use crate::experiment::{Category, Raster, ResultsSummary, TrialOutcome, Winner};
use crate::plasticity::SynapseProjection;
use crate::N_INPUT;

/// Replaces `path` with `bytes` via write-to-temp and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Decimal places needed to print multiples of `dt` exactly.
fn time_decimals(dt: f64) -> usize {
    (0..=9)
        .find(|&d| {
            let s = dt * 10f64.powi(d as i32);
            (s - s.round()).abs() < 1e-9
        })
        .unwrap_or(9)
}

pub fn raster_csv(raster: &Raster) -> String {
    let mut rows = raster.spikes.clone();
    rows.sort_unstable();
    let d = time_decimals(raster.dt);
    let mut s = String::from("neuron_id,time_ms\n");
    for (tick, id) in rows {
        let _ = writeln!(s, "{id},{:.d$}", tick as f64 * raster.dt);
    }
    s
}

pub fn export_raster(raster: &Raster, path: &Path) -> Result<()> {
    write_atomic(path, raster_csv(raster).as_bytes())
}

/// Parses a raster written by [`export_raster`]; times are snapped back to
/// ticks of `dt`.
pub fn read_raster(path: &Path, dt: f64) -> Result<Raster> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::Config { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "neuron_id,time_ms")) => {}
        _ => return Err(bad(1, "expected header neuron_id,time_ms".into())),
    }
    let mut raster = Raster::new(dt);
    for (i, line) in lines {
        let (id, t) = line
            .split_once(',')
            .ok_or_else(|| bad(i + 1, format!("malformed row {line:?}")))?;
        let id: u32 = id
            .parse()
            .map_err(|_| bad(i + 1, format!("bad neuron id {id:?}")))?;
        let t: f64 = t
            .parse()
            .map_err(|_| bad(i + 1, format!("bad time {t:?}")))?;
        raster.spikes.push(((t / dt).round() as u64, id));
    }
    Ok(raster)
}

/// The 784 incoming weights of `post` as an 8-bit grayscale image, with
/// `[0, w_max]` mapped linearly onto `[0, 255]`.
pub fn weight_image(proj: &SynapseProjection, post: usize) -> Result<Vec<u8>> {
    if proj.n_pre != N_INPUT {
        return Err(Error::WrongShape(proj.n_pre));
    }
    if post >= proj.n_post {
        return Err(Error::InvalidArgument(format!(
            "post neuron {post} out of range for {} neurons",
            proj.n_post
        )));
    }
    let w_max = proj.params.w_max;
    Ok(proj
        .incoming(post)
        .iter()
        .map(|&w| {
            let x = if w_max > 0.0 { w / w_max } else { 0.0 };
            (x.clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect())
}

/// Writes `path` as a binary PGM and `path` with a `.csv` extension holding
/// the raw weights (28 rows of 28 values).
pub fn export_weight_image(proj: &SynapseProjection, post: usize, path: &Path) -> Result<PathBuf> {
    let pixels = weight_image(proj, post)?;
    let mut pgm = format!("P5\n{SIDE} {SIDE}\n255\n").into_bytes();
    pgm.extend_from_slice(&pixels);
    write_atomic(path, &pgm)?;

    let w = proj.incoming(post);
    let mut csv = String::new();
    for row in w.chunks(SIDE) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let sidecar = path.with_extension("csv");
    write_atomic(&sidecar, csv.as_bytes())?;
    Ok(sidecar)
}

/// Full weight matrix, one row per post neuron.
pub fn export_weight_matrix(proj: &SynapseProjection, path: &Path) -> Result<()> {
    let mut csv = String::new();
    for post in 0..proj.n_post {
        let cells: Vec<String> = proj
            .incoming(post)
            .iter()
            .map(|x| format!("{x:?}"))
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_atomic(path, csv.as_bytes())
}

/// One row per trial in presentation order.
pub fn outcomes_csv(outcomes: &[TrialOutcome]) -> String {
    let mut s = String::from("trial,category,winner,latency_ms,correct\n");
    for (i, o) in outcomes.iter().enumerate() {
        let winner = match o.winner {
            Winner::Target => "target",
            Winner::NonTarget => "non_target",
            Winner::None => "none",
        };
        let latency = o
            .first_spike_latency
            .map_or(String::new(), |l| format!("{l:?}"));
        let _ = writeln!(
            s,
            "{i},{},{winner},{latency},{}",
            o.category.key(),
            o.correct as u8
        );
    }
    s
}

/// Population rate trace, one row per bin.
pub fn rates_csv(bin_ms: f64, rates_hz: &[f64]) -> String {
    let mut s = String::from("bin_start_ms,rate_hz\n");
    for (i, r) in rates_hz.iter().enumerate() {
        let _ = writeln!(s, "{:?},{r:?}", i as f64 * bin_ms);
    }
    s
}

/// Resolved configuration and bookkeeping for one invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<(String, PathBuf)>,
    pub tool_version: String,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn new(config: ExperimentConfig, seeds: Vec<u64>) -> Self {
        Self {
            config,
            seeds,
            artifacts: Vec::new(),
            tool_version: format!("pfc-snn {}", env!("CARGO_PKG_VERSION")),
            wall_clock_ms: 0,
        }
    }

    /// The config snapshot followed by bookkeeping as comments, so the file
    /// itself can be passed back as `--config`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tool = {}", self.tool_version);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "# seeds = {}", seeds.join(","));
        for (k, p) in &self.artifacts {
            let _ = writeln!(s, "# artifact.{k} = {}", p.display());
        }
        let _ = writeln!(s, "# wall_clock_ms = {}", self.wall_clock_ms);
        s.push_str(&self.config.to_text());
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

/// Key-value summary with a fixed field order. Categories that were never
/// presented are left out.
pub fn summary_text(summary: &ResultsSummary, manifest: &RunManifest) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("condition", summary.label.clone());
    kv("connectivity", summary.connectivity.to_string());
    kv(
        "p_connect",
        format!("{:?}", summary.connectivity.p_connect()),
    );
    kv("schedule", summary.schedule.key().to_string());
    kv("presentation_ms", format!("{:?}", summary.presentation_ms));
    kv("gap_ms", format!("{:?}", summary.gap_ms));
    kv("n_trials", summary.n_trials.to_string());
    kv("seed", summary.seed.to_string());
    let seeds: Vec<String> = manifest.seeds.iter().map(u64::to_string).collect();
    kv("seeds", seeds.join(","));
    kv(
        "assignment.target_neuron",
        summary.assignment.target_neuron.to_string(),
    );
    kv(
        "assignment.spike_counts",
        format!(
            "{},{}",
            summary.assignment.spike_counts[0], summary.assignment.spike_counts[1]
        ),
    );
    for cat in Category::ALL {
        if let Some(t) = summary.tallies.get(&cat) {
            kv(
                &format!("accuracy.{}", cat.key()),
                format!("{:.4}", t.accuracy()),
            );
        }
    }
    for cat in Category::ALL {
        if let Some(t) = summary.tallies.get(&cat) {
            kv(&format!("correct.{}", cat.key()), t.correct.to_string());
            kv(&format!("total.{}", cat.key()), t.total.to_string());
        }
    }
    kv("no_winner", summary.no_winner.to_string());
    kv(
        "target_memory_neuron",
        summary.target_memory_neuron.to_string(),
    );
    if let Some(r) = summary.weight_image_correlation {
        kv("weight_image_correlation", format!("{r:.4}"));
    }
    for (k, p) in &manifest.artifacts {
        kv(&format!("artifact.{k}"), p.display().to_string());
    }
    s
}

pub fn write_summary(summary: &ResultsSummary, manifest: &RunManifest, path: &Path) -> Result<()> {
    write_atomic(path, summary_text(summary, manifest).as_bytes())
}

/// Reads `key=value` lines back, as the acceptance harness does.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
