//! Randomized invariants: structural facts that must hold for all inputs,
//! not just at the calibrated operating point.

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::sample::subsequence;
use spikebar_core::config::ModelConfig;
use spikebar_core::engine::SpikeTrain;
use spikebar_core::network::{delay_line, train_pattern, Crossbar};
use spikebar_core::neuron::constant_drive_train;
use spikebar_core::synapse::{
    decay_traces, delta_w_curve, on_post, on_pre, StdpParams, SynapseState, WeightMap,
};
use spikebar_core::tasks::ecg::{classify_heart_rate, detect_beats, synth_ecg, EcgRecord, HrClassifierConfig, HrLabel};
use spikebar_core::tasks::{
    enumerate_noisy, oracle_classify, oracle_classify_weighted, DigitCorpus, Pattern,
};

fn cfg() -> ModelConfig {
    ModelConfig::default()
}

/// Up to three distinct pixel indices, ordered.
fn flip_sets() -> impl Strategy<Value = Vec<usize>> {
    (0usize..=3).prop_flat_map(|k| subsequence((0..15).collect::<Vec<usize>>(), k))
}

/// Replays a pre/post event list through the pairing state machine.
fn replay(
    events: &[(bool, f64)],
    p: &StdpParams,
    map: &WeightMap,
    mut check: impl FnMut(&SynapseState),
) -> SynapseState {
    let mut s = SynapseState::new(map);
    let mut t = 0.0;
    for &(is_pre, gap) in events {
        t += gap;
        s = decay_traces(&s, p, gap);
        s = if is_pre { on_pre(&s, p, map, t) } else { on_post(&s, p, map, t) };
        check(&s);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weights_stay_clamped_under_random_trains(
        events in proptest::collection::vec((any::<bool>(), 1e-8f64..5e-6), 1..40),
    ) {
        let c = cfg();
        let mut ok = true;
        replay(&events, &c.stdp, &c.wmap, |s| {
            ok &= s.v_g >= c.wmap.v_lo && s.v_g <= c.wmap.v_hi;
        });
        prop_assert!(ok, "a weight escaped its clamp range");
    }

    #[test]
    fn pair_curve_sign_matches_timing(dt in -6e-6f64..6e-6) {
        prop_assume!(dt != 0.0);
        let c = cfg();
        let w = delta_w_curve(&c.stdp, dt);
        if dt > 0.0 && dt <= c.stdp.t_max_pot {
            prop_assert!(w > 0.0, "potentiation window gave {w}");
        } else if dt < 0.0 && -dt <= c.stdp.t_max_dep {
            prop_assert!(w < 0.0, "depression window gave {w}");
        } else {
            prop_assert_eq!(w, 0.0, "outside both windows");
        }
    }

    #[test]
    fn pairing_is_nearest_neighbour(
        first_gap in 1e-8f64..3e-6,
        pair_gap in 1e-8f64..3e-6,
        potentiating in any::<bool>(),
    ) {
        // A doubled leading spike must not change what the closing spike of
        // the opposite kind pairs with: only the most recent one counts.
        let c = cfg();
        let lead = potentiating;
        let doubled = [(lead, first_gap), (lead, pair_gap), (!lead, pair_gap)];
        let single = [(lead, first_gap + pair_gap), (!lead, pair_gap)];
        let a = replay(&doubled, &c.stdp, &c.wmap, |_| {});
        let b = replay(&single, &c.stdp, &c.wmap, |_| {});
        prop_assert_eq!(a.v_g, b.v_g);
    }

    #[test]
    fn flipping_twice_restores_the_pattern(digit in 0usize..6, flips in flip_sets()) {
        let corpus = DigitCorpus::canonical();
        let p = corpus.digit(digit);
        prop_assert_eq!(&p.flipped(&flips).flipped(&flips), p);
    }

    #[test]
    fn delay_line_shifts_every_spike(
        gaps in proptest::collection::vec(2e-7f64..1e-5, 1..30),
        delta in 0.0f64..1e-3,
    ) {
        let width = 1e-7;
        let mut t = 0.0;
        let times: Vec<f64> = gaps.iter().map(|g| { t += g; t }).collect();
        let train = SpikeTrain::new(times.clone(), width).unwrap();
        let moved = delay_line(&train, delta).unwrap();
        prop_assert_eq!(moved.len(), train.len());
        prop_assert_eq!(moved.width(), train.width());
        for (a, b) in moved.times().iter().zip(&times) {
            prop_assert_eq!(*a, b + delta);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn oracle_is_invariant_to_affine_conductance_maps(
        digit in 0usize..6,
        flips in flip_sets(),
        a in 0.1f64..100.0,
        b in 0.0f64..10.0,
    ) {
        let corpus = DigitCorpus::canonical();
        let q = corpus.digit(digit).flipped(&flips);
        let plain = oracle_classify(&corpus, &q).unwrap();
        let unit = oracle_classify_weighted(&corpus, &q, 0.0, 1.0).unwrap();
        let affine = oracle_classify_weighted(&corpus, &q, b, a + b).unwrap();
        prop_assert_eq!(&plain, &unit);
        prop_assert_eq!(&plain, &affine);
    }

    #[test]
    fn heart_rate_label_is_a_step_function_of_rate(f in 0.25f64..4.0) {
        let hr = HrClassifierConfig::default();
        let lo = hr.theta_low.theta().unwrap();
        let hi = hr.theta_high.theta().unwrap();
        // Stay off the 2% warning bands so the expected label is unambiguous.
        prop_assume!((f / lo - 1.0).abs() > 0.021 && (f / hi - 1.0).abs() > 0.021);

        let times: Vec<f64> = (0..12).map(|k| (k as f64 + 0.5) / f).collect();
        let beats = SpikeTrain::new(times, 1e-3).unwrap();
        let out = classify_heart_rate(&hr, &beats, 0).unwrap();

        let expected = if f < lo {
            HrLabel::Low
        } else if f < hi {
            HrLabel::Normal
        } else {
            HrLabel::High
        };
        prop_assert_eq!(out.label, expected);
        prop_assert!(out.warning.is_none(), "unexpected warning: {:?}", out.warning);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noisy_enumeration_is_exact_and_distinct(digit in 0usize..6, k in 0usize..=3) {
        let corpus = DigitCorpus::canonical();
        let base = corpus.digit(digit);
        let variants = enumerate_noisy(base, k).unwrap();

        let n = base.len();
        let expected: usize = ((n - k + 1)..=n).product::<usize>()
            / (1..=k.max(1)).product::<usize>();
        prop_assert_eq!(variants.len(), expected);

        let distinct: HashSet<&Pattern> = variants.iter().collect();
        prop_assert_eq!(distinct.len(), variants.len());
        for v in &variants {
            let hamming = (0..n).filter(|&i| v.bit(i) != base.bit(i)).count();
            prop_assert_eq!(hamming, k);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spike_count_is_monotone_in_drive(mut v1 in 0.5f64..1.8, mut v2 in 0.5f64..1.8) {
        if v1 > v2 {
            std::mem::swap(&mut v1, &mut v2);
        }
        let c = cfg();
        let slow = constant_drive_train(&c.input, v1, 1e-4, c.dt).unwrap();
        let fast = constant_drive_train(&c.input, v2, 1e-4, c.dt).unwrap();
        prop_assert!(slow.len() <= fast.len(), "{} spikes at {v1} V vs {} at {v2} V", slow.len(), fast.len());
    }

    #[test]
    fn spike_trains_from_constant_drive_are_well_spaced(v in 0.6f64..=1.8) {
        // The weakest drive in range needs ~26 us to charge, so the window
        // must span several of its cycles.
        let c = cfg();
        let train = constant_drive_train(&c.input, v, 1e-4, c.dt).unwrap();
        prop_assert!(!train.is_empty(), "no spikes at {v} V");
        let times = train.times();
        for w in times.windows(2) {
            prop_assert!(
                w[1] - w[0] >= c.input.spike_width + c.input.t_refr,
                "interval {} below pulse + refractory",
                w[1] - w[0]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn drives_at_or_below_onset_stay_silent(v in 0.0f64..=0.5) {
        let c = cfg();
        let train = constant_drive_train(&c.input, v, 2e-5, c.dt).unwrap();
        prop_assert!(train.is_empty(), "{} spikes at {v} V", train.len());
    }

    #[test]
    fn beat_detection_ignores_amplitude_scale(rate in 0.8f64..2.5, scale in 0.2f64..50.0) {
        let record = synth_ecg(rate, 12.0, 200.0).unwrap();
        let scaled = EcgRecord::new(
            record.sample_rate(),
            record.samples().iter().map(|x| x * scale).collect(),
        )
        .unwrap();
        let base = detect_beats(&record).unwrap();
        let same = detect_beats(&scaled).unwrap();
        prop_assert_eq!(base.times(), same.times());
    }

    #[test]
    fn training_touches_only_the_target_column(
        bits in proptest::collection::vec(any::<bool>(), 15),
        col in 0usize..6,
    ) {
        let c = cfg();
        let p = Pattern::new(bits.iter().map(|&b| b as u8).collect()).unwrap();
        let mut xb = Crossbar::new(15, 6, &c.wmap, c.delay).unwrap();
        train_pattern(&mut xb, &c, &p, col, c.train_duration).unwrap();

        let fresh = SynapseState::new(&c.wmap);
        for (i, row) in xb.synapses.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                if j != col {
                    prop_assert_eq!(s, &fresh, "synapse ({}, {}) changed off-column", i, j);
                } else if p.bit(i) {
                    prop_assert!(s.t_last_pre.is_some(), "active row {i} never spiked");
                }
            }
        }
    }
}
