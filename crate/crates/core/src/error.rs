// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid neuron parameters: {0}")]
    InvalidNeuronParams(String),

    #[error("invalid STDP parameters: {0}")]
    InvalidStdpParams(String),

    #[error("synaptic weight must be non-negative, got {0}")]
    NegativeWeight(f64),

    #[error("image must have 784 pixels (28x28), got {0}")]
    WrongShape(usize),

    #[error("pixel intensity {value} at index {index} outside [0, 255]")]
    PixelOutOfRange { index: usize, value: f64 },

    #[error("rate {rate_hz} Hz at dt {dt_ms} ms gives per-tick probability above 1")]
    RateTooHigh { rate_hz: f64, dt_ms: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: truncated payload ({detail})")]
    Truncated { path: PathBuf, detail: String },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("class {0} has no images")]
    EmptyClass(u8),

    #[error("cosine similarity undefined for two all-zero images")]
    ZeroVectors,

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{context}: {source}")]
    Condition {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_condition(self, context: impl Into<String>) -> Self {
        Error::Condition {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
