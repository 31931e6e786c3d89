// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Trace-based STDP over dense synapse projections.
//!
//! Each projection keeps one potentiation trace per presynaptic neuron
//! (`a_plus`, non-negative) and one depression trace per postsynaptic neuron
//! (`a_minus`, non-positive). A presynaptic spike adds the postsynaptic
//! depression traces to its outgoing weights and then bumps its own trace by
//! `A+`; a postsynaptic spike adds the presynaptic traces to its incoming
//! weights and then bumps its trace by `A-`. With exponential trace decay this
//! realises the pair kernel returned by [`pair_delta_w`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lif::SynapseKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    /// Potentiation increment (nS), > 0.
    pub a_plus: f64,
    /// Depression increment (nS), < 0.
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
    pub w_max: f64,
    pub w_init_low: f64,
    pub w_init_high: f64,
}

impl StdpParams {
    /// Default rule scaled to a weight ceiling: `A+ = 0.01 w_max`,
    /// `A- = -0.012 w_max`, both traces at 20 ms.
    pub fn with_w_max(w_max: f64) -> Self {
        Self {
            a_plus: 0.01 * w_max,
            a_minus: -0.012 * w_max,
            tau_plus: 20.0,
            tau_minus: 20.0,
            w_max,
            w_init_low: 0.0,
            w_init_high: 0.3 * w_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidStdpParams(msg.to_string()));
        if !(self.a_plus > 0.0) {
            return bad("requires a_plus > 0");
        }
        if !(self.a_minus < 0.0) {
            return bad("requires a_minus < 0");
        }
        if !(self.tau_plus > 0.0 && self.tau_minus > 0.0) {
            return bad("requires tau_plus, tau_minus > 0");
        }
        if !(0.0 <= self.w_init_low
            && self.w_init_low <= self.w_init_high
            && self.w_init_high <= self.w_max)
        {
            return bad("requires 0 <= w_init_low <= w_init_high <= w_max");
        }
        Ok(())
    }
}

impl Default for StdpParams {
    fn default() -> Self {
        Self::with_w_max(1.0)
    }
}

/// Closed-form pair kernel: the weight change produced by one presynaptic
/// and one postsynaptic spike separated by `delta_t = t_post - t_pre` ms.
pub fn pair_delta_w(delta_t: f64, params: &StdpParams) -> Result<f64> {
    if delta_t > 0.0 {
        Ok(params.a_plus * (-delta_t / params.tau_plus).exp())
    } else if delta_t < 0.0 {
        Ok(params.a_minus * (delta_t / params.tau_minus).exp())
    } else {
        Err(Error::InvalidArgument(
            "pair kernel is undefined at delta_t = 0".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynapseProjection {
    pub n_pre: usize,
    pub n_post: usize,
    /// Row-major `n_pre x n_post` (nS).
    weights: Vec<f64>,
    a_plus: Traces,
    a_minus: Traces,
    active: Vec<bool>,
    pub plastic: bool,
    pub sign: SynapseKind,
    pub params: StdpParams,
}

impl SynapseProjection {
    /// Plastic (or frozen) projection with weights uniform in
    /// `[w_init_low, w_init_high]`.
    pub fn init(
        n_pre: usize,
        n_post: usize,
        params: StdpParams,
        plastic: bool,
        sign: SynapseKind,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        if n_pre == 0 || n_post == 0 {
            return Err(Error::InvalidArgument(
                "projection needs at least one pre and one post neuron".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (params.w_init_low, params.w_init_high);
        let weights = if lo == hi {
            vec![lo; n_pre * n_post]
        } else {
            (0..n_pre * n_post)
                .map(|_| rng.random_range(lo..=hi))
                .collect()
        };
        Ok(Self {
            n_pre,
            n_post,
            weights,
            a_plus: Traces::new(n_pre),
            a_minus: Traces::new(n_post),
            active: vec![true; n_pre * n_post],
            plastic,
            sign,
            params,
        })
    }

    /// Non-plastic projection. `pattern(pre, post)` decides which synapses
    /// exist; existing ones carry `weight`, the rest are inactive.
    pub fn fixed(
        n_pre: usize,
        n_post: usize,
        weight: f64,
        sign: SynapseKind,
        pattern: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::NegativeWeight(weight));
        }
        let mut active = Vec::with_capacity(n_pre * n_post);
        let mut weights = Vec::with_capacity(n_pre * n_post);
        for i in 0..n_pre {
            for j in 0..n_post {
                let on = pattern(i, j);
                active.push(on);
                weights.push(if on { weight } else { 0.0 });
            }
        }
        let w_max = weight.max(f64::MIN_POSITIVE);
        Ok(Self {
            n_pre,
            n_post,
            weights,
            a_plus: Traces::new(n_pre),
            a_minus: Traces::new(n_post),
            active,
            plastic: false,
            sign,
            params: StdpParams {
                w_max,
                w_init_low: weight,
                w_init_high: weight,
                ..StdpParams::with_w_max(w_max)
            },
        })
    }

    #[inline]
    fn idx(&self, pre: usize, post: usize) -> usize {
        pre * self.n_post + post
    }

    pub fn weight(&self, pre: usize, post: usize) -> f64 {
        self.weights[self.idx(pre, post)]
    }

    pub fn set_weight(&mut self, pre: usize, post: usize, w: f64) {
        let i = self.idx(pre, post);
        self.weights[i] = w.clamp(0.0, self.params.w_max);
    }

    pub fn is_active(&self, pre: usize, post: usize) -> bool {
        self.active[self.idx(pre, post)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    /// Weights as seen by the postsynaptic neuron: zero where inactive.
    pub fn effective_weight(&self, pre: usize, post: usize) -> f64 {
        let i = self.idx(pre, post);
        if self.active[i] {
            self.weights[i]
        } else {
            0.0
        }
    }

    /// Incoming effective weights of one postsynaptic neuron.
    pub fn incoming(&self, post: usize) -> Vec<f64> {
        (0..self.n_pre)
            .map(|i| self.effective_weight(i, post))
            .collect()
    }

    /// Outgoing row of one presynaptic neuron: `(weights, active)`.
    #[inline]
    pub fn row(&self, pre: usize) -> (&[f64], &[bool]) {
        let s = pre * self.n_post;
        (
            &self.weights[s..s + self.n_post],
            &self.active[s..s + self.n_post],
        )
    }

    pub fn a_plus(&self) -> Vec<f64> {
        self.a_plus.values()
    }

    pub fn a_minus(&self) -> Vec<f64> {
        self.a_minus.values()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Replaces the activity mask. Synapses switched off keep their weight
    /// but no longer transmit or learn.
    pub fn set_active_mask(&mut self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.active.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries, projection has {}",
                mask.len(),
                self.active.len()
            )));
        }
        for (a, &m) in self.active.iter_mut().zip(mask) {
            *a &= m;
        }
        Ok(())
    }

    pub fn decay_traces(&mut self, dt: f64) {
        let fp = (-dt / self.params.tau_plus).exp();
        let fm = (-dt / self.params.tau_minus).exp();
        self.decay_traces_by(fp, fm);
    }

    /// Trace decay with precomputed factors `exp(-dt/tau_plus)` and
    /// `exp(-dt/tau_minus)`.
    #[inline]
    pub fn decay_traces_by(&mut self, plus_factor: f64, minus_factor: f64) {
        self.a_plus.decay(plus_factor);
        self.a_minus.decay(minus_factor);
    }

    pub fn reset_traces(&mut self) {
        self.a_plus.reset();
        self.a_minus.reset();
    }

    /// Presynaptic spike: depress outgoing weights by the postsynaptic
    /// traces, then bump this neuron's potentiation trace.
    pub fn on_pre_spike(&mut self, pre: usize) {
        let w_max = self.params.w_max;
        let s = pre * self.n_post;
        let row = &mut self.weights[s..s + self.n_post];
        let act = &self.active[s..s + self.n_post];
        let scale = self.a_minus.scale;
        for ((w, &on), &am) in row.iter_mut().zip(act).zip(&self.a_minus.stored) {
            if on {
                *w = (*w + am * scale).clamp(0.0, w_max);
            }
        }
        self.a_plus.add(pre, self.params.a_plus);
    }

    /// Postsynaptic spike: potentiate incoming weights by the presynaptic
    /// traces, then bump this neuron's depression trace.
    pub fn on_post_spike(&mut self, post: usize) {
        let w_max = self.params.w_max;
        let n_post = self.n_post;
        let scale = self.a_plus.scale;
        for (i, &ap) in self.a_plus.stored.iter().enumerate() {
            let k = i * n_post + post;
            if self.active[k] && ap != 0.0 {
                self.weights[k] = (self.weights[k] + ap * scale).clamp(0.0, w_max);
            }
        }
        self.a_minus.add(post, self.params.a_minus);
    }

    /// FNV-1a style hash over the weight bit patterns, one word at a time,
    /// for cheap continuity checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in &self.weights {
            h ^= w.to_bits();
            h = h.wrapping_mul(0x0100_0000_01b3);
            h ^= h >> 29;
        }
        h
    }
}

/// Exponentially decaying traces stored as `stored[i] * scale`. Decay only
/// touches `scale`; the stored values are folded back in when it gets small.
#[derive(Debug, Clone, PartialEq)]
struct Traces {
    stored: Vec<f64>,
    scale: f64,
}

impl Traces {
    const RENORM_BELOW: f64 = 1e-150;

    fn new(n: usize) -> Self {
        Self {
            stored: vec![0.0; n],
            scale: 1.0,
        }
    }

    fn values(&self) -> Vec<f64> {
        self.stored.iter().map(|&a| a * self.scale).collect()
    }

    #[inline]
    fn add(&mut self, i: usize, x: f64) {
        self.stored[i] += x / self.scale;
    }

    #[inline]
    fn decay(&mut self, factor: f64) {
        if factor == 0.0 {
            self.reset();
            return;
        }
        self.scale *= factor;
        if self.scale < Self::RENORM_BELOW {
            let s = self.scale;
            for a in &mut self.stored {
                *a *= s;
                if a.abs() < f64::MIN_POSITIVE {
                    *a = 0.0;
                }
            }
            self.scale = 1.0;
        }
    }

    fn reset(&mut self) {
        self.stored.iter_mut().for_each(|a| *a = 0.0);
        self.scale = 1.0;
    }
}
