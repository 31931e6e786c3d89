// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! Model invariants checked over random inputs.

use std::path::Path;

use proptest::prelude::*;

use pfc_snn::dataset::{cosine_similarity, encode_idx_images, parse_idx_images, Image};
use pfc_snn::encoding::{image_to_rates, poisson_trains};
use pfc_snn::lif::{init_state, inject_spike, step_neuron, NeuronParams, SynapseKind};
use pfc_snn::plasticity::{pair_delta_w, StdpParams, SynapseProjection};
use pfc_snn::N_INPUT;

fn image() -> impl Strategy<Value = Image> {
    prop::collection::vec(any::<u8>(), N_INPUT).prop_map(|p| Image::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn membrane_stays_between_reversals(
        events in prop::collection::vec((any::<bool>(), 0.0f64..200.0, -5.0f64..5.0), 1..400),
        sigma in 0.0f64..500.0,
    ) {
        let p = NeuronParams { noise_sigma: sigma, ..Default::default() };
        let mut s = init_state(&p).unwrap();
        for (i, &(exc, w, xi)) in events.iter().enumerate() {
            let kind = if exc { SynapseKind::Excitatory } else { SynapseKind::Inhibitory };
            s = inject_spike(s, kind, w).unwrap();
            s = step_neuron(s, &p, 0.1, xi, (i + 1) as f64 * 0.1).0;
            prop_assert!(s.v_m >= p.e_inh && s.v_m <= p.e_exc);
            prop_assert!(s.g_exc >= 0.0 && s.g_inh >= 0.0);
        }
    }

    #[test]
    fn silent_after_spike_for_refractory_period(drive in 50.0f64..500.0, dt in prop::sample::select(vec![0.05, 0.1, 0.25])) {
        let p = NeuronParams::default();
        let mut s = init_state(&p).unwrap();
        let mut last: Option<usize> = None;
        for i in 0..(200.0 / dt) as usize {
            s = inject_spike(s, SynapseKind::Excitatory, drive * dt).unwrap();
            let (next, fired) = step_neuron(s, &p, dt, 0.0, (i + 1) as f64 * dt);
            s = next;
            if fired {
                if let Some(j) = last {
                    prop_assert!((i - j) as f64 * dt >= p.tau_ref - 1e-9);
                }
                prop_assert_eq!(s.v_m, p.v_reset);
                last = Some(i);
            }
        }
    }

    #[test]
    fn conductances_decay_geometrically(g in 0.0f64..1e3, n in 1usize..500) {
        let p = NeuronParams::default();
        let mut s = inject_spike(init_state(&p).unwrap(), SynapseKind::Excitatory, g).unwrap();
        let f = (-0.1f64 / p.tau_exc).exp();
        let mut expect = g;
        for i in 0..n {
            s = step_neuron(s, &p, 0.1, 0.0, (i + 1) as f64 * 0.1).0;
            expect *= f;
            prop_assert_eq!(s.g_exc.to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn pair_kernel_sign(dt in prop_oneof![-200.0f64..-1e-6, 1e-6f64..200.0], w_max in 1e-3f64..50.0) {
        let p = StdpParams::with_w_max(w_max);
        let dw = pair_delta_w(dt, &p).unwrap();
        prop_assert_eq!(dw > 0.0, dt > 0.0);
        prop_assert!(dw.abs() <= p.a_plus.max(-p.a_minus));
    }

    #[test]
    fn weights_respect_bounds_and_mask(
        seed in any::<u64>(),
        events in prop::collection::vec((0u8..3, 0usize..12, 1u32..40), 1..2000),
    ) {
        let mut p = StdpParams::with_w_max(1.0);
        p.a_plus = 0.3;
        p.a_minus = -0.35;
        let mut proj = SynapseProjection::init(12, 5, p, true, SynapseKind::Excitatory, seed).unwrap();
        let mask: Vec<bool> = (0..60).map(|k| k % 3 != 0).collect();
        proj.set_active_mask(&mask).unwrap();
        let frozen: Vec<f64> = proj.weights().to_vec();
        for (kind, idx, gap) in events {
            match kind {
                0 => proj.on_pre_spike(idx),
                1 => proj.on_post_spike(idx % 5),
                _ => proj.decay_traces(gap as f64 * 0.1),
            }
        }
        for (k, &w) in proj.weights().iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&w));
            if !mask[k] {
                prop_assert_eq!(w, frozen[k]);
            }
        }
    }

    #[test]
    fn cosine_is_bounded_and_symmetric(a in image(), b in image()) {
        let ab = cosine_similarity(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
        if a.pixels().iter().any(|&v| v > 0) {
            prop_assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_scale_linearly(img in image(), r_max in 1.0f64..200.0) {
        let r = image_to_rates(&img.to_f64(), r_max).unwrap();
        for (&rate, &px) in r.rates.iter().zip(img.pixels()) {
            prop_assert!((0.0..=r_max).contains(&rate));
            prop_assert_eq!(px == 255, rate == r_max);
        }
    }

    #[test]
    fn trains_are_sorted_and_seeded(rates in prop::collection::vec(0.0f64..500.0, 1..20), seed in any::<u64>()) {
        let a = poisson_trains(&rates, 200.0, 0.1, seed).unwrap();
        prop_assert_eq!(&a, &poisson_trains(&rates, 200.0, 0.1, seed).unwrap());
        for (n, &rate) in rates.iter().enumerate() {
            let t = a.ticks(n);
            prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(t.iter().all(|&k| k < a.n_ticks()));
            if rate == 0.0 {
                prop_assert!(t.is_empty());
            }
        }
    }

    #[test]
    fn idx_round_trip(imgs in prop::collection::vec(image(), 0..4)) {
        let bytes = encode_idx_images(&imgs);
        prop_assert_eq!(parse_idx_images(&bytes, Path::new("mem")).unwrap(), imgs);
    }
}
