// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Rate coding of 28x28 images into Poisson spike trains.
//!
//! Each tick of length `dt` fires independently with probability
//! `rate * dt`. Instead of drawing one Bernoulli variable per tick the
//! generator draws the geometric gap to the next success, which has exactly
//! the same distribution and costs one draw per spike.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};
use crate::N_INPUT;

/// Default peak rate for a pixel of intensity 255 (Hz).
pub const DEFAULT_R_MAX_HZ: f64 = 63.75;

#[derive(Debug, Clone, PartialEq)]
pub struct RateImage {
    pub rates: Vec<f64>,
    pub source_pixels: Vec<f64>,
}

pub fn image_to_rates(pixels: &[f64], r_max: f64) -> Result<RateImage> {
    if pixels.len() != N_INPUT {
        return Err(Error::WrongShape(pixels.len()));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    if let Some((index, &value)) = pixels
        .iter()
        .enumerate()
        .find(|(_, &v)| !(0.0..=255.0).contains(&v))
    {
        return Err(Error::PixelOutOfRange { index, value });
    }
    Ok(RateImage {
        rates: pixels.iter().map(|&p| p / 255.0 * r_max).collect(),
        source_pixels: pixels.to_vec(),
    })
}

/// Per-neuron spike times, stored as tick indices at a fixed `dt`.
/// A spike at tick `k` happens during the interval `[k dt, (k+1) dt)` and is
/// reported at time `k dt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrains {
    ticks: Vec<Vec<u32>>,
    n_ticks: u32,
    dt_bits: u64,
}

impl SpikeTrains {
    pub fn dt(&self) -> f64 {
        f64::from_bits(self.dt_bits)
    }

    pub fn n_neurons(&self) -> usize {
        self.ticks.len()
    }

    pub fn n_ticks(&self) -> u32 {
        self.n_ticks
    }

    pub fn ticks(&self, neuron: usize) -> &[u32] {
        &self.ticks[neuron]
    }

    pub fn times_ms(&self, neuron: usize) -> impl Iterator<Item = f64> + '_ {
        let dt = self.dt();
        self.ticks[neuron].iter().map(move |&k| k as f64 * dt)
    }

    pub fn total_spikes(&self) -> usize {
        self.ticks.iter().map(Vec::len).sum()
    }

    /// All spikes as `(tick, neuron)`, sorted by tick then neuron.
    pub fn events(&self) -> Vec<(u32, u32)> {
        let mut ev: Vec<(u32, u32)> = self
            .ticks
            .iter()
            .enumerate()
            .flat_map(|(n, ts)| ts.iter().map(move |&t| (t, n as u32)))
            .collect();
        ev.sort_unstable();
        ev
    }
}

/// Bernoulli-per-tick spike trains for arbitrary per-neuron rates (Hz).
pub fn poisson_trains(rates: &[f64], duration: f64, dt: f64, seed: u64) -> Result<SpikeTrains> {
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(
            "duration and dt must be positive".into(),
        ));
    }
    let n_ticks = (duration / dt).round() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ticks = Vec::with_capacity(rates.len());
    for &rate in rates {
        let p = rate * dt / 1000.0;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::RateTooHigh {
                rate_hz: rate,
                dt_ms: dt,
            });
        }
        let mut train = Vec::new();
        if p > 0.0 {
            let gap = Geometric::new(p).expect("p in (0, 1]");
            let mut next = gap.sample(&mut rng);
            while next < n_ticks as u64 {
                train.push(next as u32);
                next += 1 + gap.sample(&mut rng);
            }
        }
        ticks.push(train);
    }
    Ok(SpikeTrains {
        ticks,
        n_ticks,
        dt_bits: dt.to_bits(),
    })
}

pub fn generate_poisson_train(
    rates: &RateImage,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<SpikeTrains> {
    poisson_trains(&rates.rates, duration, dt, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> Vec<f64> {
        vec![v; N_INPUT]
    }

    #[test]
    fn zero_image_zero_rates() {
        let r = image_to_rates(&flat(0.0), DEFAULT_R_MAX_HZ).unwrap();
        assert!(r.rates.iter().all(|&x| x == 0.0));
        let train = generate_poisson_train(&r, 350.0, 0.1, 1).unwrap();
        assert_eq!(train.total_spikes(), 0);
    }

    #[test]
    fn linear_map_endpoints() {
        let mut px = flat(0.0);
        px[0] = 255.0;
        px[1] = 128.0;
        let r = image_to_rates(&px, 63.75).unwrap();
        assert_eq!(r.rates[0], 63.75);
        assert_eq!(r.rates[1], 128.0 / 255.0 * 63.75);
        assert!((r.rates[1] - 32.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shape_and_range() {
        assert!(matches!(
            image_to_rates(&[0.0; 10], 63.75),
            Err(Error::WrongShape(10))
        ));
        let mut px = flat(0.0);
        px[3] = 256.0;
        assert!(matches!(
            image_to_rates(&px, 63.75),
            Err(Error::PixelOutOfRange { index: 3, .. })
        ));
        assert!(image_to_rates(&flat(1.0), 0.0).is_err());
    }

    #[test]
    fn rejects_aliasing_rate() {
        let err = poisson_trains(&[20_000.0], 10.0, 0.1, 0).unwrap_err();
        assert!(matches!(err, Error::RateTooHigh { .. }));
    }

    #[test]
    fn same_seed_same_trains() {
        let r = image_to_rates(&flat(200.0), 63.75).unwrap();
        let a = generate_poisson_train(&r, 350.0, 0.1, 9).unwrap();
        let b = generate_poisson_train(&r, 350.0, 0.1, 9).unwrap();
        let c = generate_poisson_train(&r, 350.0, 0.1, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn mean_count_at_peak_rate() {
        // expected 63.75 Hz * 0.35 s = 22.3125 spikes per train
        let n_seeds = 1000;
        let total: usize = (0..n_seeds)
            .map(|s| {
                poisson_trains(&[63.75], 350.0, 0.1, s)
                    .unwrap()
                    .ticks(0)
                    .len()
            })
            .sum();
        let mean = total as f64 / n_seeds as f64;
        let sigma = (22.3125f64 / n_seeds as f64).sqrt();
        assert!((mean - 22.3125).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn certain_spike_every_tick() {
        let t = poisson_trains(&[10_000.0], 1.0, 0.1, 0).unwrap();
        assert_eq!(t.ticks(0), &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn events_are_sorted() {
        let t = poisson_trains(&[50.0, 60.0, 5.0], 500.0, 0.1, 4).unwrap();
        let ev = t.events();
        assert_eq!(ev.len(), t.total_spikes());
        assert!(ev.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn brighter_pixels_spike_more_on_average() {
        let rates: Vec<f64> = (0..8).map(|k| k as f64 * 8.0).collect();
        let mut counts = vec![0usize; rates.len()];
        for s in 0..200 {
            let t = poisson_trains(&rates, 1000.0, 0.1, s).unwrap();
            for (i, c) in counts.iter_mut().enumerate() {
                *c += t.ticks(i).len();
            }
        }
        assert!(counts.windows(2).all(|w| w[0] < w[1]), "{counts:?}");
    }
}
