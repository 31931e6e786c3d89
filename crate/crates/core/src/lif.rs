// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Conductance-based leaky integrate-and-fire neurons.
//!
//! Units are chosen so that no conversion factors appear in the update:
//! potentials in mV, conductances in nS, currents in pA, capacitance in pF
//! and time in ms (nS * mV = pA, pA / pF = mV/ms).
//!
//! ```text
//! C_m dV/dt = g_leak (E_leak - V) + g_exc (E_exc - V) + g_inh (E_inh - V) + xi
//! dg_exc/dt = -g_exc / tau_exc
//! dg_inh/dt = -g_inh / tau_inh
//! ```
//!
//! The membrane is advanced with forward Euler; conductances decay with the
//! exact factor `exp(-dt / tau)`.

use crate::error::{Error, Result};

/// Remaining refractory time below this is treated as zero, absorbing the
/// rounding left over from repeatedly subtracting `dt`.
const REFRACTORY_EPS_MS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Membrane capacitance (pF).
    pub c_m: f64,
    /// Leak conductance (nS).
    pub g_leak: f64,
    pub e_leak: f64,
    pub e_exc: f64,
    pub e_inh: f64,
    /// Spike threshold (mV); a spike is emitted when V_m strictly exceeds it.
    pub v_thresh: f64,
    pub v_reset: f64,
    pub v_rest: f64,
    pub tau_exc: f64,
    pub tau_inh: f64,
    pub tau_ref: f64,
    /// Noise current scale (pA at dt = 1 ms).
    pub noise_sigma: f64,
    /// When set, spikes arriving during the refractory period are dropped
    /// instead of incrementing the conductances.
    pub refractory_blocks_input: bool,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            c_m: 200.0,
            g_leak: 10.0,
            e_leak: -65.0,
            e_exc: 0.0,
            e_inh: -75.0,
            v_thresh: -55.0,
            v_reset: -70.0,
            v_rest: -70.0,
            tau_exc: 5.0,
            tau_inh: 10.0,
            tau_ref: 5.0,
            noise_sigma: 0.0,
            refractory_blocks_input: false,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidNeuronParams(msg.to_string()));
        let all = [
            self.c_m,
            self.g_leak,
            self.e_leak,
            self.e_exc,
            self.e_inh,
            self.v_thresh,
            self.v_reset,
            self.v_rest,
            self.tau_exc,
            self.tau_inh,
            self.tau_ref,
            self.noise_sigma,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.v_reset > self.v_rest {
            return bad("requires v_reset <= v_rest");
        }
        if self.v_rest >= self.v_thresh {
            return bad("requires v_rest < v_thresh");
        }
        if self.v_thresh >= self.e_exc {
            return bad("requires v_thresh < e_exc");
        }
        if self.e_inh > self.e_leak {
            return bad("requires e_inh <= e_leak");
        }
        if self.c_m <= 0.0 {
            return bad("requires c_m > 0");
        }
        if self.g_leak < 0.0 {
            return bad("requires g_leak >= 0");
        }
        if self.tau_exc <= 0.0 || self.tau_inh <= 0.0 || self.tau_ref <= 0.0 {
            return bad("requires tau_exc, tau_inh and tau_ref > 0");
        }
        if self.noise_sigma < 0.0 {
            return bad("requires noise_sigma >= 0");
        }
        Ok(())
    }

    /// Membrane time constant C_m / g_leak (ms).
    pub fn tau_membrane(&self) -> f64 {
        self.c_m / self.g_leak
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub v_m: f64,
    pub g_exc: f64,
    pub g_inh: f64,
    pub refractory_left: f64,
    pub last_spike: Option<f64>,
}

impl NeuronState {
    pub fn is_refractory(&self) -> bool {
        self.refractory_left > REFRACTORY_EPS_MS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynapseKind {
    Excitatory,
    Inhibitory,
}

pub fn init_state(params: &NeuronParams) -> Result<NeuronState> {
    params.validate()?;
    Ok(NeuronState {
        v_m: params.v_rest,
        g_exc: 0.0,
        g_inh: 0.0,
        refractory_left: 0.0,
        last_spike: None,
    })
}

/// Precomputed per-dt constants, so a population step does not recompute
/// the exponentials for every neuron.
#[derive(Debug, Clone, Copy)]
pub struct StepConstants {
    pub dt: f64,
    pub exc_decay: f64,
    pub inh_decay: f64,
    pub dt_over_c: f64,
    pub noise_scale: f64,
}

impl StepConstants {
    pub fn new(params: &NeuronParams, dt: f64) -> Self {
        Self {
            dt,
            exc_decay: (-dt / params.tau_exc).exp(),
            inh_decay: (-dt / params.tau_inh).exp(),
            dt_over_c: dt / params.c_m,
            noise_scale: params.noise_sigma * (1.0 / dt).sqrt(),
        }
    }
}

/// Advances one neuron by `dt` ms. `t` is the time at the end of the step
/// and is recorded as `last_spike` when the neuron fires.
pub fn step_neuron(
    state: NeuronState,
    params: &NeuronParams,
    dt: f64,
    noise_sample: f64,
    t: f64,
) -> (NeuronState, bool) {
    let k = StepConstants::new(params, dt);
    step_with(state, params, &k, noise_sample, t)
}

#[inline]
pub fn step_with(
    mut s: NeuronState,
    p: &NeuronParams,
    k: &StepConstants,
    noise_sample: f64,
    t: f64,
) -> (NeuronState, bool) {
    if s.is_refractory() {
        s.v_m = p.v_reset;
        s.refractory_left -= k.dt;
        if s.refractory_left <= REFRACTORY_EPS_MS {
            s.refractory_left = 0.0;
        }
        s.g_exc *= k.exc_decay;
        s.g_inh *= k.inh_decay;
        return (s, false);
    }

    let i_leak = p.g_leak * (p.e_leak - s.v_m);
    let i_exc = s.g_exc * (p.e_exc - s.v_m);
    let i_inh = s.g_inh * (p.e_inh - s.v_m);
    let xi = k.noise_scale * noise_sample;
    let v = s.v_m + k.dt_over_c * (i_leak + i_exc + i_inh + xi);
    // A single Euler step may overshoot a reversal potential when the total
    // conductance is very large; the exact solution never does.
    s.v_m = v.clamp(p.e_inh, p.e_exc);
    s.g_exc *= k.exc_decay;
    s.g_inh *= k.inh_decay;

    if s.v_m > p.v_thresh {
        s.v_m = p.v_reset;
        s.refractory_left = p.tau_ref;
        s.last_spike = Some(t);
        return (s, true);
    }
    (s, false)
}

pub fn inject_spike(mut state: NeuronState, kind: SynapseKind, weight: f64) -> Result<NeuronState> {
    if !(weight >= 0.0) {
        return Err(Error::NegativeWeight(weight));
    }
    match kind {
        SynapseKind::Excitatory => state.g_exc += weight,
        SynapseKind::Inhibitory => state.g_inh += weight,
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> NeuronParams {
        NeuronParams::default()
    }

    #[test]
    fn init_is_at_rest() {
        let s = init_state(&quiet()).unwrap();
        assert_eq!(s.v_m, -70.0);
        assert_eq!(s.g_exc, 0.0);
        assert_eq!(s.g_inh, 0.0);
        assert_eq!(s.refractory_left, 0.0);
        assert!(s.last_spike.is_none());
    }

    #[test]
    fn rejects_threshold_below_rest() {
        let p = NeuronParams {
            v_thresh: -75.0,
            ..quiet()
        };
        let err = init_state(&p).unwrap_err().to_string();
        assert!(err.contains("v_rest < v_thresh"), "{err}");
    }

    #[test]
    fn rejects_nonpositive_time_constant() {
        let p = NeuronParams {
            tau_exc: 0.0,
            ..quiet()
        };
        assert!(init_state(&p).is_err());
    }

    #[test]
    fn leak_matches_closed_form_after_20ms() {
        let p = quiet();
        let mut s = init_state(&p).unwrap();
        for i in 0..200 {
            s = step_neuron(s, &p, 0.1, 0.0, (i + 1) as f64 * 0.1).0;
        }
        let t = 20.0;
        let analytic = p.e_leak + (-70.0 - p.e_leak) * (-t * p.g_leak / p.c_m).exp();
        assert!((analytic - (-66.839)).abs() < 1e-3);
        assert!((s.v_m - analytic).abs() < 0.05, "{} vs {}", s.v_m, analytic);
    }

    #[test]
    fn leak_reversal_is_a_fixed_point() {
        let p = quiet();
        let mut s = init_state(&p).unwrap();
        s.v_m = p.e_leak;
        for _ in 0..1000 {
            s = step_neuron(s, &p, 0.1, 0.0, 0.0).0;
        }
        assert_eq!(s.v_m, p.e_leak);
    }

    #[test]
    fn crossing_threshold_spikes_and_resets() {
        let p = quiet();
        let mut s = init_state(&p).unwrap();
        s.v_m = -55.01;
        s.g_exc = 50.0;
        let (s, spiked) = step_neuron(s, &p, 0.1, 0.0, 3.0);
        assert!(spiked);
        assert_eq!(s.v_m, p.v_reset);
        assert_eq!(s.refractory_left, p.tau_ref);
        assert_eq!(s.last_spike, Some(3.0));
    }

    #[test]
    fn refractory_neuron_is_frozen_and_silent() {
        let p = quiet();
        let mut s = init_state(&p).unwrap();
        s.refractory_left = p.tau_ref;
        s.g_exc = 500.0;
        let mut fired = false;
        for _ in 0..49 {
            let (n, spk) = step_neuron(s, &p, 0.1, 0.0, 0.0);
            fired |= spk;
            assert_eq!(n.v_m, p.v_reset);
            s = n;
        }
        assert!(!fired);
        assert!(s.is_refractory());
        s = step_neuron(s, &p, 0.1, 0.0, 0.0).0;
        assert!(!s.is_refractory());
        assert_eq!(s.refractory_left, 0.0);
    }

    #[test]
    fn inject_is_additive() {
        let s = init_state(&quiet()).unwrap();
        let s = inject_spike(s, SynapseKind::Excitatory, 1.5).unwrap();
        assert_eq!(s.g_exc, 1.5);
        let mut s2 = s;
        s2.g_inh = 2.0;
        let s2 = inject_spike(s2, SynapseKind::Inhibitory, 1.0).unwrap();
        assert_eq!(s2.g_inh, 3.0);
        assert_eq!(s2.g_exc, 1.5);
        assert_eq!(s2.v_m, s.v_m);
    }

    #[test]
    fn inject_rejects_negative_weight() {
        let s = init_state(&quiet()).unwrap();
        assert!(matches!(
            inject_spike(s, SynapseKind::Excitatory, -0.1),
            Err(Error::NegativeWeight(_))
        ));
    }

    #[test]
    fn two_injections_decay_by_one_time_constant() {
        let p = quiet();
        let w = 0.7;
        let mut s = init_state(&p).unwrap();
        s.v_m = p.e_leak;
        s = inject_spike(s, SynapseKind::Excitatory, w).unwrap();
        s = inject_spike(s, SynapseKind::Excitatory, w).unwrap();
        // 5 ms at 0.1 ms
        for _ in 0..50 {
            s = step_neuron(s, &p, 0.1, 0.0, 0.0).0;
        }
        let expected = 2.0 * w * (-1.0f64).exp();
        assert!((s.g_exc - expected).abs() < 1e-12 * expected);
    }
}
