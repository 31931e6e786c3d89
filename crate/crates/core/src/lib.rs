// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Spiking model of a prefrontal working-memory circuit.
//!
//! Conductance-based LIF neurons, trace STDP, Poisson rate coding of
//! Fashion-MNIST images, a winner-take-all memory layer with self-excitation
//! and a two-neuron response readout, plus the task-switching and synaptic
//! lesion experiments built on top of them.

// `!(x > 0.0)` reads as "not positive" and also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod io;
pub mod lif;
pub mod plasticity;
pub mod topology;

pub use error::{Error, Result};

/// Input layer size: one neuron per pixel of a 28x28 image.
pub const N_INPUT: usize = 784;
/// Response layer size: target and non-target readout neurons.
pub const N_RESPONSE: usize = 2;
