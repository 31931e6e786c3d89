// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 when the run itself fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pfc_snn::config::ExperimentConfig;
use pfc_snn::experiment::{
    run_condition, run_experiment, sustained_activity_probe, ResultsSummary, ScheduleKind,
};
use pfc_snn::io::{
    export_raster, export_weight_image, export_weight_matrix, outcomes_csv, rates_csv,
    write_atomic, write_summary, RunManifest,
};
use pfc_snn::topology::derive_seed;
use pfc_snn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pfc-snn",
    version,
    about = "Spiking working-memory model and task-switching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one (connectivity, schedule) condition and write its summary.
    Run(Common),
    /// Train, then record memory-layer activity after the Target is removed.
    Probe {
        #[command(flatten)]
        common: Common,
        /// Stimulus duration (ms).
        #[arg(long)]
        on_ms: Option<f64>,
        /// End of the observation window (ms).
        #[arg(long)]
        observe_ms: Option<f64>,
    },
    /// Repeat `run` for each connection probability in a list.
    LesionScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated connection probabilities.
        #[arg(long, value_delimiter = ',', value_parser = parse_probability, default_value = "1.0,0.75,0.5,0.25")]
        p_list: Vec<f64>,
    },
    /// Train, then dump every plastic weight matrix.
    ExportWeights(Common),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<ScheduleKind>,
    /// Connection probability of input-to-memory synapses (1.0 = intact).
    #[arg(long, value_parser = parse_probability)]
    lesion: Option<f64>,
    /// Trials per category.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory holding the Fashion-MNIST IDX files (gzipped or not).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability {p} outside [0, 1]"));
    }
    Ok(p)
}

fn parse_schedule(s: &str) -> std::result::Result<ScheduleKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn find_idx(dir: &Path, stem: &str) -> PathBuf {
    let plain = dir.join(stem);
    if plain.exists() {
        plain
    } else {
        dir.join(format!("{stem}.gz"))
    }
}

/// Artifact paths are recorded relative to the output directory.
fn relative(path: &Path, dir: &Path) -> PathBuf {
    path.strip_prefix(dir).unwrap_or(path).to_path_buf()
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.schedule {
            cfg.schedule = s;
        }
        if let Some(p) = self.lesion {
            cfg.p_connect = p;
        }
        if let Some(n) = self.trials {
            cfg.n_trials = n as usize;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dir) = &self.data {
            cfg.images = Some(find_idx(dir, "train-images-idx3-ubyte"));
            cfg.labels = Some(find_idx(dir, "train-labels-idx1-ubyte"));
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(&self.out)
    }
}

fn run_one(cfg: &ExperimentConfig, dir: &Path) -> Result<ResultsSummary> {
    let started = Instant::now();
    let stimuli = cfg.load_stimuli()?;
    let (summary, res) = run_experiment(cfg, &stimuli)?;
    let mut manifest = RunManifest::new(cfg.clone(), vec![cfg.seed]);

    let outcomes = dir.join("outcomes.csv");
    write_atomic(&outcomes, outcomes_csv(&res.outcomes).as_bytes())?;
    let pgm = dir.join("weights_target.pgm");
    let csv = export_weight_image(
        &res.network.input_memory,
        summary.target_memory_neuron,
        &pgm,
    )?;
    let summary_path = dir.join("summary.txt");
    manifest.artifacts = [
        ("outcomes", &outcomes),
        ("weights_pgm", &pgm),
        ("weights_csv", &csv),
        ("summary", &summary_path),
    ]
    .into_iter()
    .map(|(k, p)| (k.to_string(), relative(p, dir)))
    .collect();
    write_summary(&summary, &manifest, &summary_path)?;
    manifest.wall_clock_ms = started.elapsed().as_millis();
    manifest.write(&dir.join("manifest.txt"))?;
    Ok(summary)
}

fn report(summary: &ResultsSummary) {
    let accs: Vec<String> = summary
        .tallies
        .iter()
        .map(|(c, t)| format!("{}={:.4}", c.key(), t.accuracy()))
        .collect();
    println!(
        "{} seed {}: {}",
        summary.label,
        summary.seed,
        accs.join(" ")
    );
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let summary = run_one(&cfg, common.out_dir()?)?;
            report(&summary);
        }
        Command::LesionScan { common, p_list } => {
            let base = common.resolve()?;
            let out = common.out_dir()?;
            let mut table =
                String::from("p_connect,target,non_target,context_target,context_non_target\n");
            for p in p_list {
                let mut cfg = base.clone();
                cfg.p_connect = p;
                let dir = out.join(format!("p{p:.2}"));
                std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let summary = run_one(&cfg, &dir)?;
                report(&summary);
                let cell = |c| {
                    summary
                        .tallies
                        .get(&c)
                        .map_or(String::new(), |t| format!("{:.4}", t.accuracy()))
                };
                use pfc_snn::experiment::Category::*;
                table.push_str(&format!(
                    "{p:?},{},{},{},{}\n",
                    cell(Target),
                    cell(NonTarget),
                    cell(ContextTarget),
                    cell(ContextNonTarget)
                ));
            }
            write_atomic(&out.join("lesion_scan.csv"), table.as_bytes())?;
        }
        Command::Probe {
            common,
            on_ms,
            observe_ms,
        } => {
            let started = Instant::now();
            let mut cfg = common.resolve()?;
            if let Some(v) = on_ms {
                cfg.probe_on_ms = v;
            }
            if let Some(v) = observe_ms {
                cfg.probe_observe_ms = v;
            }
            let out = common.out_dir()?;
            let stimuli = cfg.load_stimuli()?;
            let cond = cfg.condition(cfg.schedule, cfg.p_connect)?;
            let mut res = run_condition(&cond, &stimuli)?;
            let sa = sustained_activity_probe(
                &mut res.network,
                &stimuli.target,
                cfg.probe_on_ms,
                cfg.probe_observe_ms,
                &cond.timing(),
                derive_seed(cfg.seed, 5),
            )?;
            let raster = out.join("probe_raster.csv");
            export_raster(&sa.raster, &raster)?;
            let rates = out.join("probe_rates.csv");
            write_atomic(&rates, rates_csv(sa.bin_ms, &sa.rates_hz).as_bytes())?;
            let n = cfg.network.n_mem;
            let on = sa.on_ms;
            let windows = [
                (on - 100.0, on),
                (on, on + 100.0),
                (sa.observe_ms - 100.0, sa.observe_ms),
            ];
            let mut text = format!(
                "condition={}\nseed={}\nspikes={}\n",
                cond.label(),
                cfg.seed,
                sa.raster.len()
            );
            for (a, b) in windows {
                let r = sa.rate_between(a.max(0.0), b, n);
                text.push_str(&format!("rate_hz.{a:.0}_{b:.0}={r:.4}\n"));
                println!("memory rate [{a:.0}, {b:.0}) ms: {r:.2} Hz");
            }
            write_atomic(&out.join("probe.txt"), text.as_bytes())?;
            let mut manifest = RunManifest::new(cfg.clone(), vec![cfg.seed]);
            manifest.artifacts = vec![
                ("raster".into(), relative(&raster, out)),
                ("rates".into(), relative(&rates, out)),
            ];
            manifest.wall_clock_ms = started.elapsed().as_millis();
            manifest.write(&out.join("manifest.txt"))?;
        }
        Command::ExportWeights(common) => {
            let started = Instant::now();
            let cfg = common.resolve()?;
            let out = common.out_dir()?;
            let stimuli = cfg.load_stimuli()?;
            let (summary, res) = run_experiment(&cfg, &stimuli)?;
            let net = &res.network;
            let mut manifest = RunManifest::new(cfg.clone(), vec![cfg.seed]);
            for (name, proj) in [
                ("input_memory", &net.input_memory),
                ("input_response", &net.input_response),
                ("memory_response", &net.memory_response),
            ] {
                let path = out.join(format!("{name}.csv"));
                export_weight_matrix(proj, &path)?;
                manifest.artifacts.push((name.into(), relative(&path, out)));
            }
            let pgm = out.join("weights_target.pgm");
            let csv = export_weight_image(&net.input_memory, summary.target_memory_neuron, &pgm)?;
            manifest
                .artifacts
                .push(("weights_pgm".into(), relative(&pgm, out)));
            manifest
                .artifacts
                .push(("weights_csv".into(), relative(&csv, out)));
            manifest.wall_clock_ms = started.elapsed().as_millis();
            manifest.write(&out.join("manifest.txt"))?;
            report(&summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
