use lpwan_lifetime::duty_cycle::{ActivationCycle, OperatingState, PowerProfile, TrafficModel};
use lpwan_lifetime::trace::synth::{synthesize_trace, SynthOptions};
use lpwan_lifetime::trace::{
    ingest, parse_trace_str, profile_from_segmentation, segment_by_label, segment_by_threshold,
    write_trace_csv, IngestWarning, Segmenter, Thresholds, TraceSample,
};
use lpwan_lifetime::Error;
use rand::rngs::StdRng as Rng64;
use rand::{Rng, SeedableRng};

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn cycle_from_counts(period: f64, n: u64, tx: u64, rx: u64, proc: u64) -> ActivationCycle {
    let n = n as f64;
    ActivationCycle::new(period, tx as f64 / n, rx as f64 / n, proc as f64 / n).unwrap()
}

fn to_csv(samples: &[TraceSample]) -> String {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, samples).unwrap();
    String::from_utf8(buf).unwrap()
}

fn assert_recovered(
    got_p: &PowerProfile,
    got_c: &ActivationCycle,
    p: &PowerProfile,
    c: &ActivationCycle,
) {
    for s in OperatingState::ALL {
        assert!(
            rel(got_p.power(s), p.power(s)) <= 1e-6,
            "{s}: {} vs {}",
            got_p.power(s),
            p.power(s)
        );
        assert!(rel(got_c.alpha(s), c.alpha(s)) <= 1e-6, "{s} alpha");
    }
    assert_eq!(got_c.t_activation(), c.t_activation());
}

#[test]
fn randomized_round_trips() {
    let mut rng = Rng64::seed_from_u64(7);
    for _ in 0..10 {
        let n = 2000;
        let (tx, rx, proc) = (
            rng.gen_range(10..200),
            rng.gen_range(10..200),
            rng.gen_range(10..200),
        );
        let cycle = cycle_from_counts(3600.0, n, tx, rx, proc);
        let profile = PowerProfile::new(
            rng.gen_range(0.05..0.5),
            rng.gen_range(0.01..0.1),
            rng.gen_range(1e-3..1e-2),
            rng.gen_range(1e-7..1e-5),
        )
        .unwrap();
        let opts = SynthOptions {
            samples_per_cycle: n,
            voltage_v: rng.gen_range(2.0..4.0),
            ..SynthOptions::default()
        };
        let samples = synthesize_trace(&profile, &cycle, &opts).unwrap();
        let parsed = parse_trace_str(&to_csv(&samples)).unwrap();
        assert_eq!(parsed, samples);
        let out = ingest(&parsed, Segmenter::Labels, TrafficModel::OneMsgPerHour).unwrap();
        assert_recovered(&out.profile, &out.cycle, &profile, &cycle);
        assert!(out.warnings.is_empty(), "{:?}", out.warnings);
    }
}

#[test]
fn two_cycles_equal_one() {
    let cycle = cycle_from_counts(360.0, 1000, 20, 30, 50);
    let profile = PowerProfile::new(0.1, 0.04, 0.01, 2e-6).unwrap();
    let one = synthesize_trace(&profile, &cycle, &SynthOptions::default()).unwrap();
    let two = synthesize_trace(
        &profile,
        &cycle,
        &SynthOptions {
            cycles: 2,
            ..SynthOptions::default()
        },
    )
    .unwrap();
    let a = ingest(&one, Segmenter::Labels, TrafficModel::TenMsgPerHour).unwrap();
    let b = ingest(&two, Segmenter::Labels, TrafficModel::TenMsgPerHour).unwrap();
    assert_recovered(&b.profile, &b.cycle, &a.profile, &a.cycle);
}

#[test]
fn trailing_partial_cycle_is_dropped() {
    let cycle = cycle_from_counts(360.0, 1000, 20, 30, 50);
    let profile = PowerProfile::new(0.1, 0.04, 0.01, 2e-6).unwrap();
    let mut samples = synthesize_trace(
        &profile,
        &cycle,
        &SynthOptions {
            cycles: 2,
            ..SynthOptions::default()
        },
    )
    .unwrap();
    samples.truncate(1500);
    let out = ingest(&samples, Segmenter::Labels, TrafficModel::TenMsgPerHour).unwrap();
    assert!(matches!(
        out.warnings[0],
        IngestWarning::TrailingCycleTruncated {
            dropped_samples: 500,
            ..
        }
    ));
    assert_recovered(&out.profile, &out.cycle, &profile, &cycle);
}

#[test]
fn short_trace_for_hourly_traffic() {
    let cycle = cycle_from_counts(1800.0, 1800, 18, 18, 36);
    let profile = PowerProfile::new(0.1, 0.04, 0.01, 2e-6).unwrap();
    let samples = synthesize_trace(&profile, &cycle, &SynthOptions::default()).unwrap();
    let seg = segment_by_label(&samples).unwrap();
    assert!(matches!(
        profile_from_segmentation(&seg, TrafficModel::OneMsgPerHour),
        Err(Error::InsufficientTrace { .. })
    ));
}

#[test]
fn threshold_matches_labels_on_separated_bands() {
    let mut rng = Rng64::seed_from_u64(11);
    let thresholds = Thresholds::new(1e-4, 5e-3, 2e-2).unwrap();
    for _ in 0..10 {
        let cycle = cycle_from_counts(
            60.0,
            600,
            rng.gen_range(10..60),
            rng.gen_range(10..60),
            rng.gen_range(10..60),
        );
        let v = 3.0;
        // currents well inside each band
        let profile = PowerProfile::new(
            v * rng.gen_range(3e-2..1e-1),
            v * rng.gen_range(6e-3..1.5e-2),
            v * rng.gen_range(2e-4..4e-3),
            v * rng.gen_range(1e-7..5e-5),
        )
        .unwrap();
        let labeled = synthesize_trace(
            &profile,
            &cycle,
            &SynthOptions {
                voltage_v: v,
                samples_per_cycle: 600,
                ..SynthOptions::default()
            },
        )
        .unwrap();
        let by_label = segment_by_label(&labeled).unwrap();
        let unlabeled: Vec<TraceSample> = labeled
            .iter()
            .map(|s| TraceSample { state: None, ..*s })
            .collect();
        let by_threshold = segment_by_threshold(&unlabeled, &thresholds).unwrap();
        assert_eq!(by_label, by_threshold);
    }
}

#[test]
fn segmentation_is_shift_invariant_and_conserves_energy() {
    let cycle = cycle_from_counts(100.0, 1000, 40, 60, 100);
    let profile = PowerProfile::new(0.2, 0.05, 0.01, 1e-6).unwrap();
    let base = synthesize_trace(&profile, &cycle, &SynthOptions::default()).unwrap();
    let shifted = synthesize_trace(
        &profile,
        &cycle,
        &SynthOptions {
            start_time_s: 12_345.678,
            ..SynthOptions::default()
        },
    )
    .unwrap();
    let a = segment_by_label(&base).unwrap();
    let b = segment_by_label(&shifted).unwrap();
    for s in OperatingState::ALL {
        assert!(rel(b.state(s).total_duration_s, a.state(s).total_duration_s) <= 1e-9);
        assert!(rel(b.state(s).mean_power_w, a.state(s).mean_power_w) <= 1e-9);
    }

    // rectangle-rule integral of v·i, each sample holding until the next
    let n = base.len();
    let mean_gap = (base[n - 1].time_s - base[0].time_s) / (n - 1) as f64;
    let integral: f64 = (0..n)
        .map(|i| {
            let gap = if i + 1 < n {
                base[i + 1].time_s - base[i].time_s
            } else {
                mean_gap
            };
            base[i].current_a * base[i].voltage_v * gap
        })
        .sum();
    assert!(rel(a.energy_j(), integral) <= 1e-9);
    let total: f64 = OperatingState::ALL
        .iter()
        .map(|&s| a.state(s).total_duration_s)
        .sum();
    assert!(rel(total, a.trace_span_s) <= 1e-9);
}

#[test]
fn coarse_sampling_warns() {
    let cycle = cycle_from_counts(60.0, 60, 1, 1, 2);
    let profile = PowerProfile::new(0.1, 0.04, 0.01, 2e-6).unwrap();
    let samples = synthesize_trace(
        &profile,
        &cycle,
        &SynthOptions {
            samples_per_cycle: 60,
            ..SynthOptions::default()
        },
    )
    .unwrap();
    let out = ingest(&samples, Segmenter::Labels, TrafficModel::Custom(60.0)).unwrap();
    assert!(out
        .warnings
        .iter()
        .any(|w| matches!(w, IngestWarning::SparseSampling { .. })));
}
