// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Task-switching protocol: response-label calibration, a 70:30 learning
//! block, context probe blocks, sustained-activity probes and accuracy
//! aggregation.
//!
//! A trial is `gap_ms` of silence followed by `presentation_ms` of one
//! stimulus. The network is never reset between trials. The trial outcome is
//! decided by which response neuron spikes first inside the presentation
//! window; a same-tick tie or no spike at all counts as incorrect.
//!
//! Context probes run with learning frozen. Each probe first shows the
//! matching anchor (Target before Context-Target, Non-Target before
//! Context-Non-Target) for `anchor_ms`, then the schedule's gap, then the
//! context stimulus, so retrieval relies on whatever activity survives the
//! gap.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Image, StimulusSet};
use crate::encoding::{image_to_rates, poisson_trains, SpikeTrains};
use crate::error::{Error, Result};
use crate::plasticity::SynapseProjection;
use crate::topology::{apply_lesion, build_network, derive_seed, Network, NetworkConfig};
use crate::N_INPUT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Target,
    NonTarget,
    ContextTarget,
    ContextNonTarget,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Target,
        Category::NonTarget,
        Category::ContextTarget,
        Category::ContextNonTarget,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Category::Target => "target",
            Category::NonTarget => "non_target",
            Category::ContextTarget => "context_target",
            Category::ContextNonTarget => "context_non_target",
        }
    }

    pub fn wants_target(self) -> bool {
        matches!(self, Category::Target | Category::ContextTarget)
    }

    pub fn is_context(self) -> bool {
        matches!(self, Category::ContextTarget | Category::ContextNonTarget)
    }

    /// Stimulus shown before a context probe.
    pub fn anchor(self) -> Category {
        match self {
            Category::ContextTarget => Category::Target,
            Category::ContextNonTarget => Category::NonTarget,
            c => c,
        }
    }

    pub fn image(self, stimuli: &StimulusSet) -> &Image {
        match self {
            Category::Target => &stimuli.target,
            Category::NonTarget => &stimuli.non_target,
            Category::ContextTarget => &stimuli.context_target,
            Category::ContextNonTarget => &stimuli.context_non_target,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Short,
    Long,
}

impl ScheduleKind {
    pub fn presentation_ms(self) -> f64 {
        match self {
            ScheduleKind::Short => 350.0,
            ScheduleKind::Long => 550.0,
        }
    }

    pub fn default_gap_ms(self) -> f64 {
        match self {
            ScheduleKind::Short => 0.0,
            ScheduleKind::Long => 350.0,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ScheduleKind::Short => "short",
            ScheduleKind::Long => "long",
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short" => Ok(ScheduleKind::Short),
            "long" => Ok(ScheduleKind::Long),
            other => Err(Error::InvalidArgument(format!(
                "schedule must be short or long, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledTrial {
    pub category: Category,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub presentation_ms: f64,
    pub inter_stimulus_gap_ms: f64,
    pub n_trials: usize,
    /// Interleaved Target / Non-Target trials with learning on.
    pub learning: Vec<ScheduledTrial>,
    /// Context-Target block followed by Context-Non-Target block, learning off.
    pub probes: Vec<ScheduledTrial>,
}

impl Schedule {
    pub fn trials(&self) -> impl Iterator<Item = &ScheduledTrial> {
        self.learning.iter().chain(&self.probes)
    }
}

/// Learning block of `2 * n_trials` presentations, `round(mix * 2n)` of them
/// Target and the rest Non-Target in seeded random order, followed by
/// `n_trials` Context-Target and `n_trials` Context-Non-Target probes.
pub fn build_schedule(
    kind: ScheduleKind,
    n_trials: usize,
    mix: f64,
    seed: u64,
) -> Result<Schedule> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument(
            "number of trials must be positive".into(),
        ));
    }
    if !(mix > 0.0 && mix <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target mix must lie in (0, 1], got {mix}"
        )));
    }
    let n_learn = 2 * n_trials;
    let n_target = (mix * n_learn as f64).round() as usize;
    let mut cats: Vec<Category> = std::iter::repeat_n(Category::Target, n_target)
        .chain(std::iter::repeat_n(Category::NonTarget, n_learn - n_target))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100));
    cats.shuffle(&mut rng);
    let mut k = 0u64;
    let mut next = |category| {
        k += 1;
        ScheduledTrial {
            category,
            seed: derive_seed(seed, 1000 + k),
        }
    };
    let learning = cats.into_iter().map(&mut next).collect();
    let probes = std::iter::repeat_n(Category::ContextTarget, n_trials)
        .chain(std::iter::repeat_n(Category::ContextNonTarget, n_trials))
        .map(&mut next)
        .collect();
    Ok(Schedule {
        kind,
        presentation_ms: kind.presentation_ms(),
        inter_stimulus_gap_ms: kind.default_gap_ms(),
        n_trials,
        learning,
        probes,
    })
}

/// Spikes recorded for one layer, as `(tick, neuron)` in firing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Raster {
    pub dt: f64,
    pub spikes: Vec<(u64, u32)>,
}

impl Raster {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            spikes: Vec::new(),
        }
    }

    pub fn time_ms(&self, tick: u64) -> f64 {
        tick as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    /// Spike counts in consecutive bins of `bin_ms`, from tick 0 up to
    /// `until_ms`.
    pub fn binned_counts(&self, bin_ms: f64, until_ms: f64) -> Vec<usize> {
        let n_bins = (until_ms / bin_ms).round() as usize;
        let mut bins = vec![0; n_bins];
        for &(t, _) in &self.spikes {
            let b = (self.time_ms(t) / bin_ms + 1e-9).floor() as usize;
            if b < n_bins {
                bins[b] += 1;
            }
        }
        bins
    }

    pub fn count_in(&self, from_ms: f64, to_ms: f64) -> usize {
        let (a, b) = (
            (from_ms / self.dt).round() as u64,
            (to_ms / self.dt).round() as u64,
        );
        self.spikes
            .iter()
            .filter(|(t, _)| *t >= a && *t < b)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Target,
    NonTarget,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub category: Category,
    pub winner: Winner,
    pub first_spike_latency: Option<f64>,
    pub correct: bool,
}

impl TrialOutcome {
    pub fn new(category: Category, winner: Winner, latency: Option<f64>) -> Self {
        let correct = match winner {
            Winner::Target => category.wants_target(),
            Winner::NonTarget => !category.wants_target(),
            Winner::None => false,
        };
        Self {
            category,
            winner,
            first_spike_latency: latency,
            correct,
        }
    }
}

/// Which response neuron plays the target role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub target_neuron: usize,
    pub spike_counts: [usize; 2],
}

impl Assignment {
    /// Argmax over spike counts under Target presentations, ties to 0.
    pub fn from_counts(counts: [usize; 2]) -> Self {
        Self {
            target_neuron: if counts[1] > counts[0] { 1 } else { 0 },
            spike_counts: counts,
        }
    }

    pub fn non_target_neuron(&self) -> usize {
        1 - self.target_neuron
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub dt: f64,
    pub presentation_ms: f64,
    pub gap_ms: f64,
    pub anchor_ms: f64,
    pub r_max: f64,
}

/// Per-trial record of everything that happened in the presentation window.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub outcome: TrialOutcome,
    pub memory: Raster,
    pub response: Raster,
    /// Memory-layer spike counts per neuron during the window.
    pub memory_counts: Vec<u32>,
    pub response_counts: [u32; 2],
}

fn trains_for(image: &Image, ms: f64, t: &Timing, seed: u64) -> Result<SpikeTrains> {
    let rates = image_to_rates(&image.to_f64(), t.r_max)?;
    poisson_trains(&rates.rates, ms, t.dt, seed)
}

/// Ticks the network through a stimulus (or silence when `image` is None)
/// for `ms`, recording spikes with ticks relative to the start.
pub fn present(
    net: &mut Network,
    image: Option<&Image>,
    ms: f64,
    timing: &Timing,
    seed: u64,
    memory: &mut Raster,
    response: &mut Raster,
) -> Result<()> {
    let n_ticks = (ms / timing.dt).round() as u64;
    let events = match image {
        Some(im) => trains_for(im, ms, timing, seed)?.events(),
        None => Vec::new(),
    };
    let mut cursor = 0;
    let mut inputs: Vec<u32> = Vec::with_capacity(N_INPUT);
    for k in 0..n_ticks {
        inputs.clear();
        while cursor < events.len() && events[cursor].0 as u64 == k {
            inputs.push(events[cursor].1);
            cursor += 1;
        }
        let report = net.tick(&inputs);
        for &j in &report.memory {
            memory.spikes.push((k, j as u32));
        }
        for &r in &report.response {
            response.spikes.push((k, r as u32));
        }
    }
    Ok(())
}

/// Runs one trial: the schedule gap in silence, then the stimulus. Only the
/// presentation window is recorded and scored.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    net: &mut Network,
    category: Category,
    image: &Image,
    anchor: Option<&Image>,
    timing: &Timing,
    assignment: &Assignment,
    seed: u64,
    plasticity_on: bool,
) -> Result<TrialRecord> {
    let was = net.learning;
    net.learning = plasticity_on;
    net.reseed_noise(derive_seed(seed, 1));
    let mut scratch_m = Raster::new(timing.dt);
    let mut scratch_r = Raster::new(timing.dt);
    if let Some(a) = anchor {
        present(
            net,
            Some(a),
            timing.anchor_ms,
            timing,
            derive_seed(seed, 2),
            &mut scratch_m,
            &mut scratch_r,
        )?;
    }
    if timing.gap_ms > 0.0 {
        present(
            net,
            None,
            timing.gap_ms,
            timing,
            0,
            &mut scratch_m,
            &mut scratch_r,
        )?;
    }
    let mut memory = Raster::new(timing.dt);
    let mut response = Raster::new(timing.dt);
    present(
        net,
        Some(image),
        timing.presentation_ms,
        timing,
        derive_seed(seed, 3),
        &mut memory,
        &mut response,
    )?;
    net.learning = was;

    let mut first: [Option<u64>; 2] = [None, None];
    let mut response_counts = [0u32; 2];
    for &(t, r) in &response.spikes {
        let r = r as usize;
        response_counts[r] += 1;
        if first[r].is_none() {
            first[r] = Some(t);
        }
    }
    let tn = assignment.target_neuron;
    let ntn = assignment.non_target_neuron();
    let (winner, latency) = match (first[tn], first[ntn]) {
        (None, None) => (Winner::None, None),
        (Some(a), None) => (Winner::Target, Some(a)),
        (None, Some(b)) => (Winner::NonTarget, Some(b)),
        (Some(a), Some(b)) if a < b => (Winner::Target, Some(a)),
        (Some(a), Some(b)) if b < a => (Winner::NonTarget, Some(b)),
        (Some(a), Some(_)) => (Winner::None, Some(a)),
    };
    let mut memory_counts = vec![0u32; net.cfg.n_mem];
    for &(_, j) in &memory.spikes {
        memory_counts[j as usize] += 1;
    }
    Ok(TrialRecord {
        outcome: TrialOutcome::new(
            category,
            winner,
            latency.map(|t| (t + 1) as f64 * timing.dt),
        ),
        memory,
        response,
        memory_counts,
        response_counts,
    })
}

/// Presents Target and Non-Target alternately, `k_trials / 2` times each,
/// with learning on, and names the response neuron that spiked more under
/// Target as the target neuron.
pub fn calibrate_response_labels(
    net: &mut Network,
    stimuli: &StimulusSet,
    k_trials: usize,
    timing: &Timing,
    seed: u64,
) -> Result<Assignment> {
    if k_trials < 2 {
        return Err(Error::InvalidArgument(
            "calibration needs at least two trials".into(),
        ));
    }
    let placeholder = Assignment::from_counts([0, 0]);
    let mut counts = [0usize; 2];
    for k in 0..k_trials / 2 * 2 {
        let cat = if k % 2 == 0 {
            Category::Target
        } else {
            Category::NonTarget
        };
        let rec = run_trial(
            net,
            cat,
            cat.image(stimuli),
            None,
            timing,
            &placeholder,
            derive_seed(seed, 10_000 + k as u64),
            true,
        )?;
        if cat == Category::Target {
            counts[0] += rec.response_counts[0] as usize;
            counts[1] += rec.response_counts[1] as usize;
        }
    }
    Ok(Assignment::from_counts(counts))
}

/// Memory-layer activity around stimulus offset.
#[derive(Debug, Clone)]
pub struct SustainedActivity {
    pub raster: Raster,
    pub bin_ms: f64,
    /// Population rate per bin (spikes / s / neuron).
    pub rates_hz: Vec<f64>,
    pub on_ms: f64,
    pub observe_ms: f64,
}

impl SustainedActivity {
    /// Mean population rate (Hz per neuron) in `[from, to)` ms.
    pub fn rate_between(&self, from_ms: f64, to_ms: f64, n_mem: usize) -> f64 {
        self.raster.count_in(from_ms, to_ms) as f64 / ((to_ms - from_ms) / 1000.0) / n_mem as f64
    }
}

/// Shows `image` for `on_ms` then silence until `observe_ms`, with learning
/// frozen, and records the memory layer.
pub fn sustained_activity_probe(
    net: &mut Network,
    image: &Image,
    on_ms: f64,
    observe_ms: f64,
    timing: &Timing,
    seed: u64,
) -> Result<SustainedActivity> {
    if !(observe_ms >= on_ms && on_ms >= 0.0) {
        return Err(Error::InvalidArgument(
            "observation window must cover the stimulus window".into(),
        ));
    }
    let was = net.learning;
    net.learning = false;
    net.reseed_noise(derive_seed(seed, 1));
    let mut memory = Raster::new(timing.dt);
    let mut response = Raster::new(timing.dt);
    let res = (|| {
        present(
            net,
            Some(image),
            on_ms,
            timing,
            derive_seed(seed, 2),
            &mut memory,
            &mut response,
        )?;
        let mut tail = Raster::new(timing.dt);
        present(
            net,
            None,
            observe_ms - on_ms,
            timing,
            0,
            &mut tail,
            &mut response,
        )?;
        let shift = (on_ms / timing.dt).round() as u64;
        memory
            .spikes
            .extend(tail.spikes.into_iter().map(|(t, j)| (t + shift, j)));
        Ok(())
    })();
    net.learning = was;
    res?;
    let bin_ms = 10.0;
    let n = net.cfg.n_mem as f64;
    let rates_hz = memory
        .binned_counts(bin_ms, observe_ms)
        .into_iter()
        .map(|c| c as f64 / (bin_ms / 1000.0) / n)
        .collect();
    Ok(SustainedActivity {
        raster: memory,
        bin_ms,
        rates_hz,
        on_ms,
        observe_ms,
    })
}

/// Correct / total per presented category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

pub fn compute_accuracy(outcomes: &[TrialOutcome]) -> Result<BTreeMap<Category, Tally>> {
    if outcomes.is_empty() {
        return Err(Error::InvalidArgument(
            "accuracy of an empty outcome list is undefined".into(),
        ));
    }
    let mut map: BTreeMap<Category, Tally> = BTreeMap::new();
    for o in outcomes {
        let t = map.entry(o.category).or_default();
        t.total += 1;
        t.correct += o.correct as usize;
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Connectivity {
    Full,
    Lesioned(f64),
}

impl Connectivity {
    pub fn from_p_connect(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "lesion probability {p} outside [0, 1]"
            )));
        }
        Ok(if p == 1.0 {
            Connectivity::Full
        } else {
            Connectivity::Lesioned(p)
        })
    }

    pub fn p_connect(self) -> f64 {
        match self {
            Connectivity::Full => 1.0,
            Connectivity::Lesioned(p) => p,
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connectivity::Full => f.write_str("full"),
            Connectivity::Lesioned(p) => write!(f, "lesioned({p})"),
        }
    }
}

/// Everything needed to run one (connectivity, schedule) condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionConfig {
    pub network: NetworkConfig,
    pub schedule: ScheduleKind,
    pub presentation_ms: f64,
    pub gap_ms: f64,
    pub anchor_ms: f64,
    pub n_trials: usize,
    pub mix: f64,
    pub connectivity: Connectivity,
    pub calibration_trials: usize,
    pub r_max: f64,
    pub seed: u64,
}

impl ConditionConfig {
    pub fn new(network: NetworkConfig, schedule: ScheduleKind) -> Self {
        Self {
            network,
            schedule,
            presentation_ms: schedule.presentation_ms(),
            gap_ms: schedule.default_gap_ms(),
            anchor_ms: 100.0,
            n_trials: 200,
            mix: 0.7,
            connectivity: Connectivity::Full,
            calibration_trials: 40,
            r_max: crate::encoding::DEFAULT_R_MAX_HZ,
            seed: 1,
        }
    }

    pub fn timing(&self) -> Timing {
        Timing {
            dt: self.network.dt,
            presentation_ms: self.presentation_ms,
            gap_ms: self.gap_ms,
            anchor_ms: self.anchor_ms,
            r_max: self.r_max,
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.connectivity, self.schedule.key())
    }
}

#[derive(Debug, Clone)]
pub struct ConditionResult {
    pub label: String,
    pub connectivity: Connectivity,
    pub schedule: ScheduleKind,
    pub seed: u64,
    pub assignment: Assignment,
    pub outcomes: Vec<TrialOutcome>,
    pub tallies: BTreeMap<Category, Tally>,
    /// Input->memory weight fingerprint after every learning trial.
    pub weight_chain: Vec<u64>,
    /// Memory neuron that fired most during Target learning trials.
    pub target_memory_neuron: usize,
    /// Spike counts per trial, in the order of `outcomes`.
    pub activity: Vec<TrialActivity>,
    pub network: Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialActivity {
    pub memory_spikes: u32,
    pub response_spikes: [u32; 2],
}

impl TrialActivity {
    fn of(rec: &TrialRecord) -> Self {
        Self {
            memory_spikes: rec.memory_counts.iter().sum(),
            response_spikes: rec.response_counts,
        }
    }
}

/// Pearson correlation between the effective incoming weights of one post
/// neuron and an image. `None` when either side is constant.
pub fn receptive_field_correlation(
    proj: &SynapseProjection,
    post: usize,
    image: &Image,
) -> Result<Option<f64>> {
    if proj.n_pre != image.pixels().len() || post >= proj.n_post {
        return Err(Error::WrongShape(proj.n_pre));
    }
    let w = proj.incoming(post);
    let x: Vec<f64> = image.pixels().iter().map(|&p| p as f64).collect();
    let n = w.len() as f64;
    let (mw, mx) = (w.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
    let (mut sxy, mut sww, mut sxx) = (0.0, 0.0, 0.0);
    for (a, b) in w.iter().zip(&x) {
        sxy += (a - mw) * (b - mx);
        sww += (a - mw) * (a - mw);
        sxx += (b - mx) * (b - mx);
    }
    if sww == 0.0 || sxx == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sww * sxx).sqrt()))
}

pub fn run_condition(cfg: &ConditionConfig, stimuli: &StimulusSet) -> Result<ConditionResult> {
    let ctx = cfg.label();
    run_condition_inner(cfg, stimuli).map_err(|e| e.in_condition(ctx))
}

fn run_condition_inner(cfg: &ConditionConfig, stimuli: &StimulusSet) -> Result<ConditionResult> {
    let mut net = build_network(&cfg.network, derive_seed(cfg.seed, 1))?;
    if let Connectivity::Lesioned(p) = cfg.connectivity {
        apply_lesion(&mut net, p, derive_seed(cfg.seed, 2))?;
    }
    let timing = cfg.timing();
    let assignment = calibrate_response_labels(
        &mut net,
        stimuli,
        cfg.calibration_trials,
        &timing,
        derive_seed(cfg.seed, 3),
    )?;
    let schedule = build_schedule(
        cfg.schedule,
        cfg.n_trials,
        cfg.mix,
        derive_seed(cfg.seed, 4),
    )?;

    let mut outcomes = Vec::with_capacity(schedule.learning.len() + schedule.probes.len());
    let mut weight_chain = Vec::with_capacity(schedule.learning.len());
    let mut activity = Vec::with_capacity(outcomes.capacity());
    let mut target_counts = vec![0u64; cfg.network.n_mem];
    for trial in &schedule.learning {
        let rec = run_trial(
            &mut net,
            trial.category,
            trial.category.image(stimuli),
            None,
            &timing,
            &assignment,
            trial.seed,
            true,
        )?;
        if trial.category == Category::Target {
            for (c, &m) in target_counts.iter_mut().zip(&rec.memory_counts) {
                *c += m as u64;
            }
        }
        weight_chain.push(net.input_memory.fingerprint());
        activity.push(TrialActivity::of(&rec));
        outcomes.push(rec.outcome);
    }
    for trial in &schedule.probes {
        let anchor = trial.category.anchor().image(stimuli);
        let rec = run_trial(
            &mut net,
            trial.category,
            trial.category.image(stimuli),
            Some(anchor),
            &timing,
            &assignment,
            trial.seed,
            false,
        )?;
        activity.push(TrialActivity::of(&rec));
        outcomes.push(rec.outcome);
    }
    let tallies = compute_accuracy(&outcomes)?;
    let target_memory_neuron = target_counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(j, _)| j);
    Ok(ConditionResult {
        label: cfg.label(),
        connectivity: cfg.connectivity,
        schedule: cfg.schedule,
        seed: cfg.seed,
        assignment,
        outcomes,
        tallies,
        weight_chain,
        target_memory_neuron,
        activity,
        network: net,
    })
}

/// Per-condition result as reported to the user.
#[derive(Debug, Clone)]
pub struct ResultsSummary {
    pub label: String,
    pub connectivity: Connectivity,
    pub schedule: ScheduleKind,
    pub presentation_ms: f64,
    pub gap_ms: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub assignment: Assignment,
    pub tallies: BTreeMap<Category, Tally>,
    pub no_winner: usize,
    pub target_memory_neuron: usize,
    /// Correlation of the target memory neuron's input weights with the
    /// Target image.
    pub weight_image_correlation: Option<f64>,
}

impl ResultsSummary {
    pub fn new(
        cfg: &ConditionConfig,
        res: &ConditionResult,
        stimuli: &StimulusSet,
    ) -> Result<Self> {
        Ok(Self {
            label: res.label.clone(),
            connectivity: res.connectivity,
            schedule: res.schedule,
            presentation_ms: cfg.presentation_ms,
            gap_ms: cfg.gap_ms,
            n_trials: cfg.n_trials,
            seed: res.seed,
            assignment: res.assignment,
            tallies: res.tallies.clone(),
            no_winner: res
                .outcomes
                .iter()
                .filter(|o| o.winner == Winner::None)
                .count(),
            target_memory_neuron: res.target_memory_neuron,
            weight_image_correlation: receptive_field_correlation(
                &res.network.input_memory,
                res.target_memory_neuron,
                &stimuli.target,
            )?,
        })
    }
}

/// Runs the configured condition end to end: build, lesion, calibrate,
/// learn, probe, score.
pub fn run_experiment(
    cfg: &crate::config::ExperimentConfig,
    stimuli: &StimulusSet,
) -> Result<(ResultsSummary, ConditionResult)> {
    let cond = cfg.condition(cfg.schedule, cfg.p_connect)?;
    let res = run_condition(&cond, stimuli)?;
    let summary = ResultsSummary::new(&cond, &res, stimuli)?;
    Ok((summary, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use proptest::prelude::*;

    fn outcome(category: Category, winner: Winner) -> TrialOutcome {
        TrialOutcome::new(category, winner, None)
    }

    fn quiet_net() -> Network {
        let mut cfg = NetworkConfig {
            n_mem: 8,
            ..Default::default()
        };
        cfg.memory_neuron.noise_sigma = 0.0;
        cfg.response_neuron.noise_sigma = 0.0;
        build_network(&cfg, 1).unwrap()
    }

    fn timing() -> Timing {
        Timing {
            dt: 0.1,
            presentation_ms: 20.0,
            gap_ms: 5.0,
            anchor_ms: 5.0,
            r_max: 63.75,
        }
    }

    fn stimuli() -> StimulusSet {
        let img = |v: u8| Image::new(vec![v; N_INPUT]).unwrap();
        StimulusSet {
            target: img(255),
            non_target: img(128),
            context_target: img(250),
            context_non_target: img(120),
            provenance: Provenance {
                target_index: 0,
                non_target_index: 1,
                context_target_index: 2,
                context_non_target_index: 3,
                context_target_similarity: 1.0,
                context_non_target_similarity: 1.0,
            },
        }
    }

    #[test]
    fn mix_counts_and_probe_blocks() {
        let s = build_schedule(ScheduleKind::Short, 500, 0.7, 3).unwrap();
        let targets = s
            .learning
            .iter()
            .filter(|t| t.category == Category::Target)
            .count();
        assert_eq!(s.learning.len(), 1000);
        assert!((699..=701).contains(&targets));
        assert_eq!(s.probes.len(), 1000);
        assert!(s.probes[..500]
            .iter()
            .all(|t| t.category == Category::ContextTarget));
        assert!(s.probes[500..]
            .iter()
            .all(|t| t.category == Category::ContextNonTarget));
        assert_eq!(s.presentation_ms, 350.0);
        assert_eq!(s.inter_stimulus_gap_ms, 0.0);
    }

    #[test]
    fn full_mix_is_all_target() {
        let s = build_schedule(ScheduleKind::Long, 20, 1.0, 0).unwrap();
        assert!(s.learning.iter().all(|t| t.category == Category::Target));
        assert_eq!(s.presentation_ms, 550.0);
    }

    #[test]
    fn schedule_is_seeded() {
        let a = build_schedule(ScheduleKind::Short, 50, 0.7, 9).unwrap();
        assert_eq!(a, build_schedule(ScheduleKind::Short, 50, 0.7, 9).unwrap());
        assert_ne!(a, build_schedule(ScheduleKind::Short, 50, 0.7, 10).unwrap());
    }

    #[test]
    fn schedule_preconditions() {
        assert!(build_schedule(ScheduleKind::Short, 0, 0.7, 0).is_err());
        assert!(build_schedule(ScheduleKind::Short, 10, 0.0, 0).is_err());
        assert!(build_schedule(ScheduleKind::Short, 10, 1.5, 0).is_err());
    }

    #[test]
    fn accuracy_ratio() {
        let mut v = vec![outcome(Category::Target, Winner::Target); 760];
        v.extend(vec![outcome(Category::Target, Winner::NonTarget); 240]);
        let acc = compute_accuracy(&v).unwrap();
        assert_eq!(acc[&Category::Target].accuracy(), 0.76);
        assert_eq!(acc.len(), 1);
    }

    #[test]
    fn all_none_scores_zero() {
        let v = vec![outcome(Category::NonTarget, Winner::None); 10];
        assert_eq!(
            compute_accuracy(&v).unwrap()[&Category::NonTarget].accuracy(),
            0.0
        );
        assert!(compute_accuracy(&[]).is_err());
    }

    #[test]
    fn correctness_rule() {
        assert!(outcome(Category::ContextTarget, Winner::Target).correct);
        assert!(outcome(Category::ContextNonTarget, Winner::NonTarget).correct);
        assert!(!outcome(Category::NonTarget, Winner::Target).correct);
        assert!(!outcome(Category::Target, Winner::None).correct);
    }

    #[test]
    fn assignment_argmax_and_tie() {
        assert_eq!(Assignment::from_counts([40, 12]).target_neuron, 0);
        assert_eq!(Assignment::from_counts([3, 9]).target_neuron, 1);
        assert_eq!(Assignment::from_counts([7, 7]).target_neuron, 0);
        assert_eq!(Assignment::from_counts([7, 7]).non_target_neuron(), 1);
    }

    #[test]
    fn lesion_probability_range() {
        assert_eq!(
            Connectivity::from_p_connect(1.0).unwrap(),
            Connectivity::Full
        );
        assert_eq!(
            Connectivity::from_p_connect(0.5).unwrap().to_string(),
            "lesioned(0.5)"
        );
        assert!(Connectivity::from_p_connect(1.5).is_err());
        assert!(Connectivity::from_p_connect(-0.1).is_err());
    }

    #[test]
    fn blank_stimulus_without_noise_has_no_winner() {
        let mut net = quiet_net();
        let a = Assignment::from_counts([0, 0]);
        let rec = run_trial(
            &mut net,
            Category::Target,
            &Image::blank(),
            None,
            &timing(),
            &a,
            1,
            true,
        )
        .unwrap();
        assert_eq!(rec.outcome.winner, Winner::None);
        assert_eq!(rec.outcome.first_spike_latency, None);
        assert!(rec.memory.is_empty() && rec.response.is_empty());
    }

    #[test]
    fn same_state_and_seed_same_trial() {
        let base = {
            let cfg = NetworkConfig {
                n_mem: 10,
                ..Default::default()
            };
            build_network(&cfg, 4).unwrap()
        };
        let s = stimuli();
        let a = Assignment::from_counts([1, 0]);
        let run = || {
            let mut net = base.clone();
            let rec = run_trial(
                &mut net,
                Category::Target,
                &s.target,
                Some(&s.target),
                &timing(),
                &a,
                77,
                true,
            )
            .unwrap();
            (
                rec.outcome,
                rec.memory,
                rec.response,
                net.input_memory.fingerprint(),
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trials_carry_state_forward() {
        let cfg = NetworkConfig {
            n_mem: 10,
            ..Default::default()
        };
        let s = stimuli();
        let a = Assignment::from_counts([1, 0]);
        let mut chained = build_network(&cfg, 2).unwrap();
        run_trial(
            &mut chained,
            Category::Target,
            &s.target,
            None,
            &timing(),
            &a,
            1,
            true,
        )
        .unwrap();
        let after_first = chained.input_memory.fingerprint();
        run_trial(
            &mut chained,
            Category::Target,
            &s.target,
            None,
            &timing(),
            &a,
            2,
            true,
        )
        .unwrap();

        let mut fresh = build_network(&cfg, 2).unwrap();
        run_trial(
            &mut fresh,
            Category::Target,
            &s.target,
            None,
            &timing(),
            &a,
            1,
            true,
        )
        .unwrap();
        assert_eq!(fresh.input_memory.fingerprint(), after_first);
        assert_ne!(chained.input_memory.fingerprint(), after_first);
        assert!(chained.clock_ms() > fresh.clock_ms());
    }

    #[test]
    fn probe_rejects_inverted_window() {
        let mut net = quiet_net();
        let err = sustained_activity_probe(&mut net, &Image::blank(), 500.0, 100.0, &timing(), 0);
        assert!(err.is_err());
    }

    #[test]
    fn condition_is_labelled_and_deterministic() {
        let net_cfg = NetworkConfig {
            n_mem: 6,
            ..Default::default()
        };
        let mut c = ConditionConfig::new(net_cfg, ScheduleKind::Short);
        c.presentation_ms = 10.0;
        c.n_trials = 3;
        c.calibration_trials = 2;
        c.connectivity = Connectivity::Lesioned(0.5);
        let s = stimuli();
        let a = run_condition(&c, &s).unwrap();
        let b = run_condition(&c, &s).unwrap();
        assert_eq!(a.label, "lesioned(0.5)/short");
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.weight_chain, b.weight_chain);
        assert_eq!(a.weight_chain.len(), 6);
        assert_eq!(a.outcomes.len(), 12);
        let total: usize = a.tallies.values().map(|t| t.total).sum();
        assert_eq!(total, a.outcomes.len());
    }

    proptest! {
        #[test]
        fn mix_within_one_trial(n in 1usize..300, mix in 0.05f64..=1.0, seed in any::<u64>()) {
            let s = build_schedule(ScheduleKind::Short, n, mix, seed).unwrap();
            let t = s.learning.iter().filter(|t| t.category == Category::Target).count() as f64;
            prop_assert!((t - mix * 2.0 * n as f64).abs() <= 1.0);
            prop_assert_eq!(s.trials().count(), 4 * n);
        }

        #[test]
        fn accuracies_partition_trials(picks in prop::collection::vec((0usize..4, 0usize..3), 1..200)) {
            let v: Vec<TrialOutcome> = picks
                .iter()
                .map(|&(c, w)| outcome(Category::ALL[c], [Winner::Target, Winner::NonTarget, Winner::None][w]))
                .collect();
            let acc = compute_accuracy(&v).unwrap();
            let total: usize = acc.values().map(|t| t.total).sum();
            prop_assert_eq!(total, v.len());
            for t in acc.values() {
                prop_assert!((0.0..=1.0).contains(&t.accuracy()));
            }
        }

        #[test]
        fn assignment_ignores_scale(a in 0usize..10_000, b in 0usize..10_000, k in 1usize..50) {
            prop_assert_eq!(
                Assignment::from_counts([a, b]).target_neuron,
                Assignment::from_counts([a * k, b * k]).target_neuron
            );
        }
    }
}
