// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Every tunable constant has a key;
//! [`ExperimentConfig::entries`] lists them all with their current values and
//! [`ExperimentConfig::to_text`] writes a complete snapshot that parses back
//! to an identical configuration (floats are printed in shortest round-trip
//! form).

use std::path::{Path, PathBuf};

use crate::dataset::{
    load_idx, select_stimuli, AnchorPolicy, StimulusSet, CLASS_ANKLE_BOOT, CLASS_TSHIRT,
};
use crate::encoding::DEFAULT_R_MAX_HZ;
use crate::error::{Error, Result};
use crate::experiment::{ConditionConfig, Connectivity, ScheduleKind};
use crate::lif::NeuronParams;
use crate::plasticity::StdpParams;
use crate::topology::NetworkConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub r_max: f64,
    pub schedule: ScheduleKind,
    pub short_presentation_ms: f64,
    pub short_gap_ms: f64,
    pub long_presentation_ms: f64,
    pub long_gap_ms: f64,
    pub anchor_ms: f64,
    pub n_trials: usize,
    pub mix: f64,
    pub p_connect: f64,
    pub calibration_trials: usize,
    pub seed: u64,
    pub target_class: u8,
    pub non_target_class: u8,
    pub anchor_policy: AnchorPolicy,
    pub anchor_seed: u64,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub probe_on_ms: f64,
    pub probe_observe_ms: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            r_max: DEFAULT_R_MAX_HZ,
            schedule: ScheduleKind::Short,
            short_presentation_ms: ScheduleKind::Short.presentation_ms(),
            short_gap_ms: ScheduleKind::Short.default_gap_ms(),
            long_presentation_ms: ScheduleKind::Long.presentation_ms(),
            long_gap_ms: ScheduleKind::Long.default_gap_ms(),
            anchor_ms: 100.0,
            n_trials: 200,
            mix: 0.7,
            p_connect: 1.0,
            calibration_trials: 40,
            seed: 1,
            target_class: CLASS_TSHIRT,
            non_target_class: CLASS_ANKLE_BOOT,
            anchor_policy: AnchorPolicy::First,
            anchor_seed: 0,
            images: None,
            labels: None,
            probe_on_ms: 500.0,
            probe_observe_ms: 800.0,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("{key}: expected a number, got {v:?}"))?;
    if !x.is_finite() {
        return Err(format!("{key}: value must be finite"));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse()
        .map_err(|_| format!("{key}: expected a non-negative integer, got {v:?}"))
}

fn parse_bool(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

fn neuron_entries(prefix: &str, p: &NeuronParams, out: &mut Vec<(String, String)>) {
    let f = |k: &str, v: f64| (format!("{prefix}.{k}"), format!("{v:?}"));
    out.extend([
        f("c_m", p.c_m),
        f("g_leak", p.g_leak),
        f("e_leak", p.e_leak),
        f("e_exc", p.e_exc),
        f("e_inh", p.e_inh),
        f("v_thresh", p.v_thresh),
        f("v_reset", p.v_reset),
        f("v_rest", p.v_rest),
        f("tau_exc", p.tau_exc),
        f("tau_inh", p.tau_inh),
        f("tau_ref", p.tau_ref),
        f("noise_sigma", p.noise_sigma),
    ]);
    out.push((
        format!("{prefix}.refractory_blocks_input"),
        p.refractory_blocks_input.to_string(),
    ));
}

fn set_neuron(
    p: &mut NeuronParams,
    field: &str,
    key: &str,
    v: &str,
) -> std::result::Result<bool, String> {
    let slot = match field {
        "c_m" => &mut p.c_m,
        "g_leak" => &mut p.g_leak,
        "e_leak" => &mut p.e_leak,
        "e_exc" => &mut p.e_exc,
        "e_inh" => &mut p.e_inh,
        "v_thresh" => &mut p.v_thresh,
        "v_reset" => &mut p.v_reset,
        "v_rest" => &mut p.v_rest,
        "tau_exc" => &mut p.tau_exc,
        "tau_inh" => &mut p.tau_inh,
        "tau_ref" => &mut p.tau_ref,
        "noise_sigma" => &mut p.noise_sigma,
        "refractory_blocks_input" => {
            p.refractory_blocks_input = parse_bool(key, v)?;
            return Ok(true);
        }
        _ => return Ok(false),
    };
    *slot = parse_f64(key, v)?;
    Ok(true)
}

fn stdp_entries(prefix: &str, p: &StdpParams, plastic: bool, out: &mut Vec<(String, String)>) {
    let f = |k: &str, v: f64| (format!("{prefix}.{k}"), format!("{v:?}"));
    out.extend([
        f("a_plus", p.a_plus),
        f("a_minus", p.a_minus),
        f("tau_plus", p.tau_plus),
        f("tau_minus", p.tau_minus),
        f("w_max", p.w_max),
        f("w_init_low", p.w_init_low),
        f("w_init_high", p.w_init_high),
    ]);
    out.push((format!("{prefix}.plastic"), plastic.to_string()));
}

fn set_stdp(
    p: &mut StdpParams,
    plastic: &mut bool,
    field: &str,
    key: &str,
    v: &str,
) -> std::result::Result<bool, String> {
    let slot = match field {
        "a_plus" => &mut p.a_plus,
        "a_minus" => &mut p.a_minus,
        "tau_plus" => &mut p.tau_plus,
        "tau_minus" => &mut p.tau_minus,
        "w_max" => &mut p.w_max,
        "w_init_low" => &mut p.w_init_low,
        "w_init_high" => &mut p.w_init_high,
        "plastic" => {
            *plastic = parse_bool(key, v)?;
            return Ok(true);
        }
        _ => return Ok(false),
    };
    *slot = parse_f64(key, v)?;
    Ok(true)
}

impl ExperimentConfig {
    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let n = &self.network;
        let mut out = Vec::new();
        let mut kv = |k: &str, v: String| out.push((k.to_string(), v));
        kv("network.n_mem", n.n_mem.to_string());
        kv("network.dt", format!("{:?}", n.dt));
        kv("network.w_inh_lateral", format!("{:?}", n.w_inh_lateral));
        kv(
            "network.w_exc_recurrent",
            format!("{:?}", n.w_exc_recurrent),
        );
        kv(
            "network.w_resp_mutual_inh",
            format!("{:?}", n.w_resp_mutual_inh),
        );
        neuron_entries("memory", &n.memory_neuron, &mut out);
        neuron_entries("response", &n.response_neuron, &mut out);
        stdp_entries(
            "input_memory",
            &n.input_memory,
            n.input_memory_plastic,
            &mut out,
        );
        stdp_entries(
            "input_response",
            &n.input_response,
            n.input_response_plastic,
            &mut out,
        );
        stdp_entries(
            "memory_response",
            &n.memory_response,
            n.memory_response_plastic,
            &mut out,
        );
        let mut kv = |k: &str, v: String| out.push((k.to_string(), v));
        kv("encoding.r_max", format!("{:?}", self.r_max));
        kv("experiment.schedule", self.schedule.key().to_string());
        kv(
            "experiment.short.presentation_ms",
            format!("{:?}", self.short_presentation_ms),
        );
        kv(
            "experiment.short.gap_ms",
            format!("{:?}", self.short_gap_ms),
        );
        kv(
            "experiment.long.presentation_ms",
            format!("{:?}", self.long_presentation_ms),
        );
        kv("experiment.long.gap_ms", format!("{:?}", self.long_gap_ms));
        kv("experiment.anchor_ms", format!("{:?}", self.anchor_ms));
        kv("experiment.trials", self.n_trials.to_string());
        kv("experiment.mix", format!("{:?}", self.mix));
        kv("experiment.lesion", format!("{:?}", self.p_connect));
        kv(
            "experiment.calibration_trials",
            self.calibration_trials.to_string(),
        );
        kv("experiment.seed", self.seed.to_string());
        kv("probe.on_ms", format!("{:?}", self.probe_on_ms));
        kv("probe.observe_ms", format!("{:?}", self.probe_observe_ms));
        kv("dataset.target_class", self.target_class.to_string());
        kv(
            "dataset.non_target_class",
            self.non_target_class.to_string(),
        );
        kv(
            "dataset.anchor_policy",
            match self.anchor_policy {
                AnchorPolicy::First => "first",
                AnchorPolicy::Random => "random",
            }
            .to_string(),
        );
        kv("dataset.anchor_seed", self.anchor_seed.to_string());
        if let Some(p) = &self.images {
            kv("dataset.images", p.display().to_string());
        }
        if let Some(p) = &self.labels {
            kv("dataset.labels", p.display().to_string());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let n = &mut self.network;
        let known = match key.split_once('.') {
            Some(("memory", f)) => set_neuron(&mut n.memory_neuron, f, key, v)?,
            Some(("response", f)) => set_neuron(&mut n.response_neuron, f, key, v)?,
            Some(("input_memory", f)) => {
                set_stdp(&mut n.input_memory, &mut n.input_memory_plastic, f, key, v)?
            }
            Some(("input_response", f)) => set_stdp(
                &mut n.input_response,
                &mut n.input_response_plastic,
                f,
                key,
                v,
            )?,
            Some(("memory_response", f)) => set_stdp(
                &mut n.memory_response,
                &mut n.memory_response_plastic,
                f,
                key,
                v,
            )?,
            _ => false,
        };
        if known {
            return Ok(());
        }
        match key {
            "network.n_mem" => n.n_mem = parse_int(key, v)?,
            "network.dt" => n.dt = parse_f64(key, v)?,
            "network.w_inh_lateral" => n.w_inh_lateral = parse_f64(key, v)?,
            "network.w_exc_recurrent" => n.w_exc_recurrent = parse_f64(key, v)?,
            "network.w_resp_mutual_inh" => n.w_resp_mutual_inh = parse_f64(key, v)?,
            "encoding.r_max" => self.r_max = parse_f64(key, v)?,
            "experiment.schedule" => self.schedule = v.parse().map_err(|e: Error| e.to_string())?,
            "experiment.short.presentation_ms" => self.short_presentation_ms = parse_f64(key, v)?,
            "experiment.short.gap_ms" => self.short_gap_ms = parse_f64(key, v)?,
            "experiment.long.presentation_ms" => self.long_presentation_ms = parse_f64(key, v)?,
            "experiment.long.gap_ms" => self.long_gap_ms = parse_f64(key, v)?,
            "experiment.anchor_ms" => self.anchor_ms = parse_f64(key, v)?,
            "experiment.trials" => self.n_trials = parse_int(key, v)?,
            "experiment.mix" => self.mix = parse_f64(key, v)?,
            "experiment.lesion" => self.p_connect = parse_f64(key, v)?,
            "experiment.calibration_trials" => self.calibration_trials = parse_int(key, v)?,
            "experiment.seed" => self.seed = parse_int(key, v)?,
            "probe.on_ms" => self.probe_on_ms = parse_f64(key, v)?,
            "probe.observe_ms" => self.probe_observe_ms = parse_f64(key, v)?,
            "dataset.target_class" => self.target_class = parse_int(key, v)?,
            "dataset.non_target_class" => self.non_target_class = parse_int(key, v)?,
            "dataset.anchor_policy" => {
                self.anchor_policy = match v {
                    "first" => AnchorPolicy::First,
                    "random" => AnchorPolicy::Random,
                    _ => return Err(format!("{key}: expected first or random, got {v:?}")),
                }
            }
            "dataset.anchor_seed" => self.anchor_seed = parse_int(key, v)?,
            "dataset.images" => self.images = Some(PathBuf::from(v)),
            "dataset.labels" => self.labels = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines over the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|message| Error::Config {
                    line: i + 1,
                    message,
                })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Loads a file; relative dataset paths are resolved against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.images, &mut cfg.labels].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn presentation_ms(&self, kind: ScheduleKind) -> f64 {
        match kind {
            ScheduleKind::Short => self.short_presentation_ms,
            ScheduleKind::Long => self.long_presentation_ms,
        }
    }

    pub fn gap_ms(&self, kind: ScheduleKind) -> f64 {
        match kind {
            ScheduleKind::Short => self.short_gap_ms,
            ScheduleKind::Long => self.long_gap_ms,
        }
    }

    /// Loads the dataset named by `dataset.images` / `dataset.labels` and
    /// picks the four stimuli.
    pub fn load_stimuli(&self) -> Result<StimulusSet> {
        let (Some(images), Some(labels)) = (&self.images, &self.labels) else {
            return Err(Error::InvalidArgument(
                "dataset.images and dataset.labels must both be set".into(),
            ));
        };
        let data = load_idx(images, labels)?;
        select_stimuli(
            &data,
            self.target_class,
            self.non_target_class,
            self.anchor_policy,
            self.anchor_seed,
        )
    }

    pub fn condition(&self, kind: ScheduleKind, p_connect: f64) -> Result<ConditionConfig> {
        let mut c = ConditionConfig::new(self.network.clone(), kind);
        c.presentation_ms = self.presentation_ms(kind);
        c.gap_ms = self.gap_ms(kind);
        c.anchor_ms = self.anchor_ms;
        c.n_trials = self.n_trials;
        c.mix = self.mix;
        c.connectivity = Connectivity::from_p_connect(p_connect)?;
        c.calibration_trials = self.calibration_trials;
        c.r_max = self.r_max;
        c.seed = self.seed;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.network.memory_neuron.noise_sigma = 0.1 + 0.2;
        cfg.seed = 42;
        cfg.images = Some(PathBuf::from("/data/train-images-idx3-ubyte.gz"));
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = ExperimentConfig::parse(
            "# header\n\nnetwork.n_mem = 50   # smaller\nexperiment.schedule=long\n",
        )
        .unwrap();
        assert_eq!(cfg.network.n_mem, 50);
        assert_eq!(cfg.schedule, ScheduleKind::Long);
    }

    #[test]
    fn errors_name_the_line() {
        let err = ExperimentConfig::parse("network.n_mem = 10\nbogus.key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = ExperimentConfig::parse("memory.tau_exc = fast").unwrap_err();
        assert!(err.to_string().contains("expected a number"));
        assert!(ExperimentConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let cfg = ExperimentConfig::default();
        let mut other = ExperimentConfig::default();
        for (k, v) in cfg.entries() {
            other.set(&k, &v).unwrap();
        }
        assert_eq!(other, cfg);
    }
}
