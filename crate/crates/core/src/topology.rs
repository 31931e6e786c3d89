// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! The three-layer network: 784 rate-coded inputs, a winner-take-all memory
//! layer with self-excitation, and two response neurons.
//!
//! Projections:
//!
//! | name            | pre -> post        | kind | learning  |
//! |-----------------|--------------------|------|-----------|
//! | input_memory    | input -> memory    | exc  | STDP, lesionable |
//! | input_response  | input -> response  | exc  | STDP      |
//! | memory_response | memory -> response | exc  | STDP      |
//! | lateral         | memory -> memory   | inh  | fixed, all-to-all minus diagonal |
//! | recurrent       | memory -> memory   | exc  | fixed, diagonal |
//! | mutual          | response -> response | inh | fixed, off-diagonal |
//!
//! Input spikes act within the tick they arrive. Spikes emitted by memory or
//! response neurons are delivered on the following tick.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::lif::{self, NeuronParams, NeuronState, StepConstants, SynapseKind};
use crate::plasticity::{StdpParams, SynapseProjection};
use crate::{N_INPUT, N_RESPONSE};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_mem: usize,
    pub dt: f64,
    pub memory_neuron: NeuronParams,
    pub response_neuron: NeuronParams,
    pub input_memory: StdpParams,
    pub input_response: StdpParams,
    pub memory_response: StdpParams,
    pub input_memory_plastic: bool,
    pub input_response_plastic: bool,
    pub memory_response_plastic: bool,
    pub w_inh_lateral: f64,
    pub w_exc_recurrent: f64,
    pub w_resp_mutual_inh: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let input_memory = StdpParams {
            a_plus: 0.0004,
            a_minus: -0.00032,
            w_init_high: 0.03,
            ..StdpParams::with_w_max(0.04)
        };
        let input_response = StdpParams {
            a_plus: 0.0005,
            a_minus: -0.0006,
            w_init_high: 0.01,
            ..StdpParams::with_w_max(0.05)
        };
        let memory_response = StdpParams {
            a_plus: 0.002,
            a_minus: -0.002,
            w_init_high: 6.0,
            ..StdpParams::with_w_max(20.0)
        };
        let memory_neuron = NeuronParams {
            noise_sigma: 150.0,
            ..NeuronParams::default()
        };
        Self {
            n_mem: 100,
            dt: 0.1,
            memory_neuron,
            response_neuron: memory_neuron,
            input_memory,
            input_response,
            memory_response,
            input_memory_plastic: true,
            input_response_plastic: true,
            memory_response_plastic: true,
            w_inh_lateral: 3.0,
            w_exc_recurrent: 36.0,
            w_resp_mutual_inh: 2.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mem == 0 {
            return Err(Error::InvalidArgument("n_mem must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument("dt must be positive".into()));
        }
        self.memory_neuron.validate()?;
        self.response_neuron.validate()?;
        self.input_memory.validate()?;
        self.input_response.validate()?;
        self.memory_response.validate()?;
        for (name, w) in [
            ("w_inh_lateral", self.w_inh_lateral),
            ("w_exc_recurrent", self.w_exc_recurrent),
            ("w_resp_mutual_inh", self.w_resp_mutual_inh),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a non-negative number, got {w}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesionMask {
    pub mask: Vec<bool>,
    pub p_connect: f64,
    pub seed: u64,
}

impl LesionMask {
    pub fn random(n: usize, p_connect: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_connect) {
            return Err(Error::InvalidArgument(format!(
                "connection probability {p_connect} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = (0..n).map(|_| rng.random_bool(p_connect)).collect();
        Ok(Self {
            mask,
            p_connect,
            seed,
        })
    }

    pub fn active_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }
}

/// Neurons that fired during one tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpikeReport {
    pub memory: Vec<usize>,
    pub response: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub cfg: NetworkConfig,
    pub memory: Vec<NeuronState>,
    pub response: Vec<NeuronState>,
    pub input_memory: SynapseProjection,
    pub input_response: SynapseProjection,
    pub memory_response: SynapseProjection,
    pub lateral: SynapseProjection,
    pub recurrent: SynapseProjection,
    pub mutual: SynapseProjection,
    /// Whether STDP runs during `tick`.
    pub learning: bool,
    ticks: u64,
    pending_memory: Vec<usize>,
    pending_response: Vec<usize>,
    noise: Xoshiro256PlusPlus,
    trace_decay: [(f64, f64); 3],
    mem_k: StepConstants,
    resp_k: StepConstants,
    lesion: Option<LesionMask>,
}

/// Mixes a master seed with a stream id (splitmix64 finaliser) so that
/// independent random streams never share a seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn build_network(cfg: &NetworkConfig, seed: u64) -> Result<Network> {
    cfg.validate()?;
    let n = cfg.n_mem;
    let exc = SynapseKind::Excitatory;
    let inh = SynapseKind::Inhibitory;
    let input_memory = SynapseProjection::init(
        N_INPUT,
        n,
        cfg.input_memory,
        cfg.input_memory_plastic,
        exc,
        derive_seed(seed, 1),
    )?;
    let input_response = SynapseProjection::init(
        N_INPUT,
        N_RESPONSE,
        cfg.input_response,
        cfg.input_response_plastic,
        exc,
        derive_seed(seed, 2),
    )?;
    let memory_response = SynapseProjection::init(
        n,
        N_RESPONSE,
        cfg.memory_response,
        cfg.memory_response_plastic,
        exc,
        derive_seed(seed, 3),
    )?;
    let lateral = SynapseProjection::fixed(n, n, cfg.w_inh_lateral, inh, |i, j| i != j)?;
    let recurrent = SynapseProjection::fixed(n, n, cfg.w_exc_recurrent, exc, |i, j| i == j)?;
    let mutual = SynapseProjection::fixed(
        N_RESPONSE,
        N_RESPONSE,
        cfg.w_resp_mutual_inh,
        inh,
        |i, j| i != j,
    )?;
    let mem0 = lif::init_state(&cfg.memory_neuron)?;
    let resp0 = lif::init_state(&cfg.response_neuron)?;
    Ok(Network {
        memory: vec![mem0; n],
        response: vec![resp0; N_RESPONSE],
        input_memory,
        input_response,
        memory_response,
        lateral,
        recurrent,
        mutual,
        learning: true,
        ticks: 0,
        pending_memory: Vec::new(),
        pending_response: Vec::new(),
        noise: Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, 4)),
        trace_decay: [cfg.input_memory, cfg.input_response, cfg.memory_response]
            .map(|p| ((-cfg.dt / p.tau_plus).exp(), (-cfg.dt / p.tau_minus).exp())),
        mem_k: StepConstants::new(&cfg.memory_neuron, cfg.dt),
        resp_k: StepConstants::new(&cfg.response_neuron, cfg.dt),
        lesion: None,
        cfg: cfg.clone(),
    })
}

/// Switches off input->memory synapses independently with probability
/// `1 - p_connect`. Masks compose: lesioning twice keeps only synapses that
/// survive both draws.
pub fn apply_lesion(net: &mut Network, p_connect: f64, seed: u64) -> Result<LesionMask> {
    let mask = LesionMask::random(N_INPUT * net.cfg.n_mem, p_connect, seed)?;
    net.input_memory.set_active_mask(&mask.mask)?;
    net.lesion = Some(mask.clone());
    Ok(mask)
}

#[inline]
fn deliver(
    targets: &mut [NeuronState],
    params: &NeuronParams,
    proj: &SynapseProjection,
    pre: usize,
) {
    let (weights, active) = proj.row(pre);
    let blocks = params.refractory_blocks_input;
    for ((s, &w), &on) in targets.iter_mut().zip(weights).zip(active) {
        if on && !(blocks && s.is_refractory()) {
            match proj.sign {
                SynapseKind::Excitatory => s.g_exc += w,
                SynapseKind::Inhibitory => s.g_inh += w,
            }
        }
    }
}

impl Network {
    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn clock_ms(&self) -> f64 {
        self.ticks as f64 * self.cfg.dt
    }

    pub fn lesion(&self) -> Option<&LesionMask> {
        self.lesion.as_ref()
    }

    pub fn reseed_noise(&mut self, seed: u64) {
        self.noise = Xoshiro256PlusPlus::seed_from_u64(seed);
    }

    /// Memory and response spikes from the previous tick, still to be
    /// delivered.
    pub fn pending(&self) -> (&[usize], &[usize]) {
        (&self.pending_memory, &self.pending_response)
    }

    /// Marks neurons as having fired on the previous tick so their spikes are
    /// delivered on the next one. Used to drive the wiring directly.
    pub fn force_pending(&mut self, memory: &[usize], response: &[usize]) {
        self.pending_memory.extend_from_slice(memory);
        self.pending_response.extend_from_slice(response);
    }

    /// Advances the network by one `dt`. `input_spikes` are the indices of
    /// input neurons firing during this tick.
    pub fn tick(&mut self, input_spikes: &[u32]) -> SpikeReport {
        let t_end = (self.ticks + 1) as f64 * self.cfg.dt;
        let mem_p = self.cfg.memory_neuron;
        let resp_p = self.cfg.response_neuron;

        // (1) input spikes
        for &i in input_spikes {
            let i = i as usize;
            deliver(&mut self.memory, &mem_p, &self.input_memory, i);
            deliver(&mut self.response, &resp_p, &self.input_response, i);
        }
        // (2) spikes from the previous tick
        for &k in &self.pending_memory {
            deliver(&mut self.memory, &mem_p, &self.lateral, k);
            deliver(&mut self.memory, &mem_p, &self.recurrent, k);
            deliver(&mut self.response, &resp_p, &self.memory_response, k);
        }
        for &r in &self.pending_response {
            deliver(&mut self.response, &resp_p, &self.mutual, r);
        }

        // (3) membrane update
        let mut report = SpikeReport::default();
        let noisy_mem = mem_p.noise_sigma > 0.0;
        for (j, s) in self.memory.iter_mut().enumerate() {
            let xi = if noisy_mem {
                self.noise.sample(StandardNormal)
            } else {
                0.0
            };
            let (next, spiked) = lif::step_with(*s, &mem_p, &self.mem_k, xi, t_end);
            *s = next;
            if spiked {
                report.memory.push(j);
            }
        }
        let noisy_resp = resp_p.noise_sigma > 0.0;
        for (r, s) in self.response.iter_mut().enumerate() {
            let xi = if noisy_resp {
                self.noise.sample(StandardNormal)
            } else {
                0.0
            };
            let (next, spiked) = lif::step_with(*s, &resp_p, &self.resp_k, xi, t_end);
            *s = next;
            if spiked {
                report.response.push(r);
            }
        }

        // (4) plasticity: presynaptic events first, then postsynaptic
        if self.learning {
            if self.input_memory.plastic {
                for &i in input_spikes {
                    self.input_memory.on_pre_spike(i as usize);
                }
            }
            if self.input_response.plastic {
                for &i in input_spikes {
                    self.input_response.on_pre_spike(i as usize);
                }
            }
            if self.memory_response.plastic {
                for &k in &self.pending_memory {
                    self.memory_response.on_pre_spike(k);
                }
            }
            if self.input_memory.plastic {
                for &j in &report.memory {
                    self.input_memory.on_post_spike(j);
                }
            }
            for &r in &report.response {
                if self.input_response.plastic {
                    self.input_response.on_post_spike(r);
                }
                if self.memory_response.plastic {
                    self.memory_response.on_post_spike(r);
                }
            }
        }

        // (5) trace decay
        for (proj, (fp, fm)) in [
            &mut self.input_memory,
            &mut self.input_response,
            &mut self.memory_response,
        ]
        .into_iter()
        .zip(self.trace_decay)
        {
            if proj.plastic {
                proj.decay_traces_by(fp, fm);
            }
        }

        self.pending_memory.clear();
        self.pending_memory.extend_from_slice(&report.memory);
        self.pending_response.clear();
        self.pending_response.extend_from_slice(&report.response);
        self.ticks += 1;
        report
    }

    /// Clears membrane state, conductances, pending spikes and traces while
    /// keeping the learned weights.
    pub fn settle(&mut self) -> Result<()> {
        let m0 = lif::init_state(&self.cfg.memory_neuron)?;
        let r0 = lif::init_state(&self.cfg.response_neuron)?;
        self.memory.iter_mut().for_each(|s| *s = m0);
        self.response.iter_mut().for_each(|s| *s = r0);
        self.pending_memory.clear();
        self.pending_response.clear();
        for proj in [
            &mut self.input_memory,
            &mut self.input_response,
            &mut self.memory_response,
        ] {
            proj.reset_traces();
        }
        Ok(())
    }
}
